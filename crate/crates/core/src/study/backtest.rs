use std::path::Path;

use super::{
    create_dir, derive_seed, fmt_opt, replicate_table, run_splits, summary_csv, summary_text, write_text,
    Prepared, ReplicateRecord, Result, SplitForecasts, SplitSummary, StudyConfig, StudyError, StudyKind, Table,
};
use crate::estimate::{estimate_delta, fit_pc_lasso, h_proxy, lagged_design, population_sd};
use crate::forecast::{classify_at, EVENT_MULTIPLIER};
use crate::series::{format_f64, SeriesBundle};

/// Stream index of the whole-sample fit; distinct from every split key.
const WHOLE_SAMPLE_STREAM: u64 = u64::MAX - 1;

/// Trading days per year, used only to annualize plot data.
const TRADING_DAYS: f64 = 252.0;

/// Δ̂ from a fit on every available row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WholeSample {
    pub multiplier: f64,
    pub delta_hat: f64,
    pub sigma_hat: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResults {
    pub summaries: Vec<SplitSummary>,
    pub replicates: Vec<ReplicateRecord>,
    /// Test-window forecasts of the first replicate of each split and
    /// multiplier.
    pub forecasts: Vec<SplitForecasts>,
    pub whole_sample: Vec<WholeSample>,
    classifier_threshold: f64,
    index: Vec<String>,
    epsilon: Vec<f64>,
}

impl BacktestResults {
    pub fn summary(&self, split: f64) -> Option<&SplitSummary> {
        self.summaries.iter().find(|s| (s.split - split).abs() < 1e-9)
    }

    fn forecast_table(&self) -> Table {
        let mut t = Table::new([
            "split", "k", "t", "date", "epsilon", "h_bar_hat", "sigma_bar_hat", "tail_prob_hat", "flag_capped",
            "alarm", "event",
        ]);
        for sf in &self.forecasts {
            for f in &sf.forecasts {
                let e = self.epsilon[f.t];
                t.push(vec![
                    format_f64(sf.split),
                    format_f64(sf.multiplier),
                    f.t.to_string(),
                    self.index[f.t].clone(),
                    format_f64(e),
                    format_f64(f.h_bar_hat),
                    format_f64(f.sigma_bar_hat),
                    format_f64(f.tail_prob_hat),
                    f.flag_capped.to_string(),
                    classify_at(f.tail_prob_hat, self.classifier_threshold).to_string(),
                    (e.abs() >= EVENT_MULTIPLIER * sf.sigma_hat).to_string(),
                ]);
            }
        }
        t
    }

    /// The three plot panels of one split: returns with ±3σ̂ bands,
    /// annualized |ε| against σ̄̂, and the tail probability against the
    /// alarm threshold.
    fn panels(&self, sf: &SplitForecasts) -> [Table; 3] {
        let mut returns = Table::new(["t", "date", "epsilon", "upper", "lower"]);
        let mut vol = Table::new(["t", "date", "abs_epsilon_annualized", "sigma_bar_hat_annualized"]);
        let mut tail = Table::new(["t", "date", "tail_prob_hat", "threshold"]);
        let band = EVENT_MULTIPLIER * sf.sigma_hat;
        let ann = TRADING_DAYS.sqrt();
        for f in &sf.forecasts {
            let (t, d, e) = (f.t.to_string(), self.index[f.t].clone(), self.epsilon[f.t]);
            returns.push(vec![t.clone(), d.clone(), format_f64(e), format_f64(band), format_f64(-band)]);
            vol.push(vec![
                t.clone(),
                d.clone(),
                format_f64(ann * e.abs()),
                format_f64(ann * f.sigma_bar_hat),
            ]);
            tail.push(vec![t, d, format_f64(f.tail_prob_hat), format_f64(self.classifier_threshold)]);
        }
        [returns, vol, tail]
    }

    fn whole_sample_table(&self) -> Table {
        let mut t = Table::new(["k", "delta_hat", "sigma_hat", "rows"]);
        for w in &self.whole_sample {
            t.push(vec![
                format_f64(w.multiplier),
                format_f64(w.delta_hat),
                format_f64(w.sigma_hat),
                w.rows.to_string(),
            ]);
        }
        t
    }

    /// Writes the summary and replicate tables, the whole-sample estimate,
    /// `forecasts.csv` and three panel files per split and multiplier.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        create_dir(out_dir)?;
        summary_csv(&self.summaries).write_csv(&out_dir.join("backtest_summary.csv"))?;
        let mut text = summary_text(&self.summaries);
        for w in &self.whole_sample {
            text.push_str(&format!(
                "\nwhole-sample delta_hat({}*sigma_hat) = {} over {} rows",
                w.multiplier,
                fmt_opt(Some(w.delta_hat)),
                w.rows
            ));
        }
        text.push('\n');
        write_text(&out_dir.join("backtest_summary.txt"), &text)?;
        replicate_table(&self.replicates).write_csv(&out_dir.join("backtest_replicates.csv"))?;
        self.whole_sample_table().write_csv(&out_dir.join("backtest_whole_sample.csv"))?;
        self.forecast_table().write_csv(&out_dir.join("forecasts.csv"))?;
        for sf in &self.forecasts {
            let tag = format!("split{}_k{}", format_f64(sf.split), format_f64(sf.multiplier));
            let [r, v, t] = self.panels(sf);
            r.write_csv(&out_dir.join(format!("panel_returns_{tag}.csv")))?;
            v.write_csv(&out_dir.join(format!("panel_volatility_{tag}.csv")))?;
            t.write_csv(&out_dir.join(format!("panel_tail_{tag}.csv")))?;
        }
        Ok(())
    }
}

/// Train/test backtest on one aligned series.
///
/// The design holds `lag_count` lags of Ĥ followed by `lag_count` lags of
/// each covariate of `bundle`. A split fraction f trains on the first
/// ⌊f·N⌋ samples, σ̂ is their standard deviation, and every later sample is
/// forecast one step ahead.
pub fn run_backtest(config: &StudyConfig, bundle: &SeriesBundle) -> Result<BacktestResults> {
    if config.study != StudyKind::Backtest {
        return Err(StudyError::Config(format!("expected a backtest config, got {}", config.study)));
    }
    config.validate()?;
    let lags = config.lag_count;
    let n = bundle.len();
    if n <= lags + 4 * config.folds {
        return Err(StudyError::Config(format!("{n} samples are too few for {lags} lags")));
    }
    let h_hat = h_proxy(&bundle.epsilon);
    let mut columns: Vec<&[f64]> = vec![&h_hat];
    columns.extend(bundle.covariates().map(|(_, v)| v));
    let prep = Prepared {
        design: lagged_design(&columns, lags)?,
        target: h_hat[lags..].to_vec(),
        epsilon: bundle.epsilon[lags..].to_vec(),
        first_t: lags,
    };
    let h_true = bundle.h_true.as_ref().map(|h| &h[lags..]);
    let mut run = run_splits(config, &prep, h_true, |f| {
        let n_train = (f * n as f64).floor() as usize;
        if n_train <= lags {
            return Err(StudyError::Config(format!("split {f} leaves no training rows")));
        }
        Ok((n_train - lags, population_sd(&bundle.epsilon[..n_train])))
    })?;
    for s in &mut run.summaries {
        s.n_train += lags;
    }

    let model = fit_pc_lasso(
        &prep.design,
        &prep.target,
        &config.lasso(),
        derive_seed(config.seed, WHOLE_SAMPLE_STREAM, 0),
    )?;
    let h_bar = model.predict_rows(&prep.design)?;
    let sigma = population_sd(&bundle.epsilon);
    let whole_sample = config
        .threshold_multipliers
        .iter()
        .map(|&k| {
            let est = estimate_delta(&prep.epsilon, &h_bar, k * sigma, config.noise)?;
            Ok(WholeSample {
                multiplier: k,
                delta_hat: est.delta_hat,
                sigma_hat: sigma,
                rows: h_bar.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BacktestResults {
        summaries: run.summaries,
        replicates: run.records,
        forecasts: run.forecasts,
        whole_sample,
        classifier_threshold: config.classifier_threshold,
        index: bundle.index.clone(),
        epsilon: bundle.epsilon.clone(),
    })
}
