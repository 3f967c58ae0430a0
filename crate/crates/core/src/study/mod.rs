//! The three reproduction studies: the Δ-estimation simulation table, the
//! Lorenz-driven forecasting study and the train/test backtest on ingested
//! or simulated data.

mod backtest;
mod config;
mod lorenz;
mod sim;

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::estimate::{estimate_delta, fit_pc_lasso, EstimateError, PcLassoConfig};
use crate::forecast::{
    evaluate_at, forecast_series, pearson, EvalReport, ForecastError, ForecastRecord, EVENT_MULTIPLIER,
};
use crate::ingest::IngestError;
use crate::model::NoiseKind;
use crate::series::{format_f64, SeriesError};
use crate::simulate::SimError;

pub use backtest::{run_backtest, BacktestResults};
pub use config::{DataConfig, HProcess, StudyConfig, StudyKind};
pub use lorenz::{run_lorenz_study, LorenzResults};
pub use sim::{run_sim_study, SimCell, SimTable};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl StudyError {
    /// True for failures raised by the numerical core.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            StudyError::Simulation(_) | StudyError::Estimate(_) | StudyError::Forecast(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, StudyError>;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one replicate of one table cell. Depends on nothing else, so
/// replicates can run in any order.
pub fn derive_seed(master: u64, cell: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ replicate)
}

/// Stable cell key for a real-valued setting such as a split fraction.
fn real_key(x: f64) -> u64 {
    (x * 1e6).round() as u64
}

/// Mean and population standard deviation; `None` for an empty input.
pub fn mean_sd(x: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let (s, ss) = x.iter().fold((0.0, 0.0), |(s, ss), v| (s + v, ss + v * v));
    let mean = s / n;
    Some((mean, (ss / n - mean * mean).max(0.0).sqrt()))
}

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let err = |source| StudyError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(&self.headers).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|source| StudyError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Right-aligned plain-text rendering.
    pub fn render(&self) -> String {
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&width)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        let total = width.iter().sum::<usize>() + 2 * width.len().saturating_sub(1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// Regression rows shared by the Lorenz study and the backtest. Row i of
/// `design` holds the lags for time `first_t + i`.
struct Prepared {
    design: DMatrix<f64>,
    target: Vec<f64>,
    epsilon: Vec<f64>,
    first_t: usize,
}

/// Outcome of one fit on rows `[0, n_train)` scored on the remaining rows,
/// for each threshold multiplier.
struct Evaluation {
    multiplier: f64,
    report: EvalReport,
    forecasts: Vec<ForecastRecord>,
    h_bar_test: Vec<f64>,
}

struct RunSettings<'a> {
    multipliers: &'a [f64],
    noise: NoiseKind,
    lasso: PcLassoConfig,
    classifier_threshold: f64,
}

fn train_and_score(
    prep: &Prepared,
    n_train: usize,
    sigma_hat: f64,
    settings: &RunSettings<'_>,
    cv_seed: u64,
) -> Result<Vec<Evaluation>> {
    let n = prep.target.len();
    let train = prep.design.rows(0, n_train).into_owned();
    let test = prep.design.rows(n_train, n - n_train).into_owned();
    let model = fit_pc_lasso(&train, &prep.target[..n_train], &settings.lasso, cv_seed)?;
    let h_train = model.predict_rows(&train)?;
    let h_test = model.predict_rows(&test)?;
    let eps_train = &prep.epsilon[..n_train];
    let eps_test = &prep.epsilon[n_train..];
    settings
        .multipliers
        .iter()
        .map(|&k| {
            let est = estimate_delta(eps_train, &h_train, k * sigma_hat, settings.noise)?;
            let forecasts = forecast_series(
                &h_test,
                est.delta_hat,
                EVENT_MULTIPLIER * sigma_hat,
                settings.noise,
                prep.first_t + n_train,
            )?;
            let report = evaluate_at(
                eps_test,
                &forecasts,
                sigma_hat,
                est.delta_hat,
                settings.classifier_threshold,
            )?;
            Ok(Evaluation {
                multiplier: k,
                report,
                forecasts,
                h_bar_test: h_test.clone(),
            })
        })
        .collect()
}

/// Averages of the out-of-sample scores over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub replicates: usize,
    pub delta_hat: (f64, f64),
    pub vol_correlation: Option<(f64, f64)>,
    pub sensitivity: Option<(f64, f64)>,
    pub specificity: Option<(f64, f64)>,
    /// Replicates whose test window had no events, leaving Sn undefined.
    pub undefined_sensitivity: usize,
}

impl ScoreSummary {
    fn from_reports<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> Self {
        let reports: Vec<&EvalReport> = reports.into_iter().collect();
        let delta: Vec<f64> = reports.iter().map(|r| r.delta_hat).collect();
        let rho: Vec<f64> = reports
            .iter()
            .map(|r| r.vol_correlation)
            .filter(|v| v.is_finite())
            .collect();
        let sn: Vec<f64> = reports.iter().filter_map(|r| r.sensitivity).collect();
        let sp: Vec<f64> = reports.iter().filter_map(|r| r.specificity).collect();
        Self {
            replicates: reports.len(),
            delta_hat: mean_sd(&delta).unwrap_or((f64::NAN, f64::NAN)),
            vol_correlation: mean_sd(&rho),
            undefined_sensitivity: reports.len() - sn.len(),
            sensitivity: mean_sd(&sn),
            specificity: mean_sd(&sp),
        }
    }
}

/// Scores of one replicate at one split and multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub seed: u64,
    pub split: f64,
    pub multiplier: f64,
    pub report: EvalReport,
    /// Correlation of the test-window H̄̂ with the true log-volatility, when
    /// the latter is known.
    pub h_correlation: Option<f64>,
}

/// Replicate averages for one split and multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSummary {
    pub split: f64,
    pub multiplier: f64,
    /// Training rows in the Lorenz study, training samples in the backtest.
    pub n_train: usize,
    pub n_test: usize,
    pub scores: ScoreSummary,
    pub h_correlation: Option<(f64, f64)>,
}

/// Test-window forecasts of the first replicate of a split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitForecasts {
    pub split: f64,
    pub multiplier: f64,
    pub sigma_hat: f64,
    pub forecasts: Vec<ForecastRecord>,
}

struct SplitRun {
    summaries: Vec<SplitSummary>,
    records: Vec<ReplicateRecord>,
    forecasts: Vec<SplitForecasts>,
}

/// Fits, estimates and scores every split `config.replicates` times,
/// varying only the cross-validation seed. `plan` maps a split fraction to
/// the number of training rows and the σ̂ used for thresholds.
fn run_splits(
    config: &StudyConfig,
    prep: &Prepared,
    h_true_rows: Option<&[f64]>,
    plan: impl Fn(f64) -> Result<(usize, f64)>,
) -> Result<SplitRun> {
    let settings = RunSettings {
        multipliers: &config.threshold_multipliers,
        noise: config.noise,
        lasso: config.lasso(),
        classifier_threshold: config.classifier_threshold,
    };
    let n_rows = prep.target.len();
    let plans: Vec<(f64, usize, f64)> = config
        .split_fractions
        .iter()
        .map(|&f| {
            let (n_train, sigma) = plan(f)?;
            if n_train < 2 * config.folds || n_train + 2 > n_rows {
                return Err(StudyError::Config(format!(
                    "split {f} leaves {n_train} training rows of {n_rows}"
                )));
            }
            Ok((f, n_train, sigma))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..plans.len())
        .flat_map(|s| (0..config.replicates as u64).map(move |r| (s, r)))
        .collect();
    let results: Vec<Result<(u64, Vec<Evaluation>)>> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let (f, n_train, sigma) = plans[s];
            let seed = derive_seed(config.seed, real_key(f), r);
            Ok((seed, train_and_score(prep, n_train, sigma, &settings, seed)?))
        })
        .collect();
    let mut records = Vec::new();
    let mut forecasts = Vec::new();
    for (&(s, r), res) in jobs.iter().zip(results) {
        let (seed, evals) = res?;
        let (split, n_train, sigma_hat) = plans[s];
        for ev in evals {
            let h_correlation = h_true_rows.map(|h| pearson(&ev.h_bar_test, &h[n_train..]));
            if r == 0 {
                forecasts.push(SplitForecasts {
                    split,
                    multiplier: ev.multiplier,
                    sigma_hat,
                    forecasts: ev.forecasts,
                });
            }
            records.push(ReplicateRecord {
                seed,
                split,
                multiplier: ev.multiplier,
                report: ev.report,
                h_correlation,
            });
        }
    }
    let mut summaries = Vec::new();
    for &(split, n_train, _) in &plans {
        for &k in &config.threshold_multipliers {
            let group: Vec<&ReplicateRecord> = records
                .iter()
                .filter(|r| r.split == split && r.multiplier == k)
                .collect();
            let hc: Vec<f64> = group.iter().filter_map(|r| r.h_correlation).collect();
            summaries.push(SplitSummary {
                split,
                multiplier: k,
                n_train,
                n_test: n_rows - n_train,
                scores: ScoreSummary::from_reports(group.iter().map(|r| &r.report)),
                h_correlation: mean_sd(&hc),
            });
        }
    }
    Ok(SplitRun {
        summaries,
        records,
        forecasts,
    })
}

fn replicate_table(rows: &[ReplicateRecord]) -> Table {
    let with_h = rows.iter().any(|r| r.h_correlation.is_some());
    let mut headers = vec!["seed", "split", "k", "delta_hat", "rho", "sensitivity", "specificity"];
    if with_h {
        headers.push("h_correlation");
    }
    let mut t = Table::new(headers);
    for r in rows {
        let mut row = vec![
            r.seed.to_string(),
            format_f64(r.split),
            format_f64(r.multiplier),
            format_f64(r.report.delta_hat),
            format_f64(r.report.vol_correlation),
            fmt_opt(r.report.sensitivity),
            fmt_opt(r.report.specificity),
        ];
        if with_h {
            row.push(fmt_opt(r.h_correlation));
        }
        t.push(row);
    }
    t
}

fn summary_csv(rows: &[SplitSummary]) -> Table {
    let with_h = rows.iter().any(|r| r.h_correlation.is_some());
    let mut headers = vec![
        "split", "k", "n_train", "n_test", "replicates", "delta_hat_mean", "delta_hat_sd", "rho_mean",
        "rho_sd", "sensitivity_mean", "sensitivity_sd", "specificity_mean", "specificity_sd",
        "sensitivity_undefined",
    ];
    if with_h {
        headers.extend(["h_correlation_mean", "h_correlation_sd"]);
    }
    let mut t = Table::new(headers);
    let pair = |x: Option<(f64, f64)>| [fmt_opt(x.map(|p| p.0)), fmt_opt(x.map(|p| p.1))];
    for r in rows {
        let s = &r.scores;
        let mut row = vec![
            format_f64(r.split),
            format_f64(r.multiplier),
            r.n_train.to_string(),
            r.n_test.to_string(),
            s.replicates.to_string(),
        ];
        row.extend(pair(Some(s.delta_hat)));
        row.extend(pair(s.vol_correlation));
        row.extend(pair(s.sensitivity));
        row.extend(pair(s.specificity));
        row.push(s.undefined_sensitivity.to_string());
        if with_h {
            row.extend(pair(r.h_correlation));
        }
        t.push(row);
    }
    t
}

fn summary_text(rows: &[SplitSummary]) -> String {
    let with_h = rows.iter().any(|r| r.h_correlation.is_some());
    let mut headers = vec!["N_train/N_test", "k", "avg delta_hat", "avg rho", "avg Sn", "avg Sp"];
    if with_h {
        headers.push("avg corr(H_bar_hat, H)");
    }
    let pm = |x: Option<(f64, f64)>| match x {
        Some((m, s)) => format!("{m:.3} (+-{s:.3})"),
        None => "-".into(),
    };
    let mut t = Table::new(headers);
    for r in rows {
        let s = &r.scores;
        let pct = (100.0 * r.split).round();
        let mut row = vec![
            format!("{}/{} ({pct}/{})", r.n_train, r.n_test, 100.0 - pct),
            format!("{}", r.multiplier),
            pm(Some(s.delta_hat)),
            pm(s.vol_correlation),
            pm(s.sensitivity),
            pm(s.specificity),
        ];
        if with_h {
            row.push(pm(r.h_correlation));
        }
        t.push(row);
    }
    t.render()
}
