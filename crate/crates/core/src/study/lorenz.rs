use std::path::Path;

use super::{
    create_dir, derive_seed, replicate_table, run_splits, summary_csv, summary_text, write_text, Prepared,
    ReplicateRecord, Result, SplitSummary, StudyConfig, StudyError, StudyKind,
};
use crate::estimate::{h_proxy, lagged_design, population_sd};
use crate::simulate::lorenz_series;

/// Stream index of the Lorenz noise draw; distinct from every split key.
const NOISE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct LorenzResults {
    pub summaries: Vec<SplitSummary>,
    pub replicates: Vec<ReplicateRecord>,
}

impl LorenzResults {
    pub fn summary(&self, split: f64) -> Option<&SplitSummary> {
        self.summaries.iter().find(|s| (s.split - split).abs() < 1e-9)
    }

    /// Writes `lorenz_summary.csv`, `lorenz_summary.txt` and
    /// `lorenz_replicates.csv`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        create_dir(out_dir)?;
        summary_csv(&self.summaries).write_csv(&out_dir.join("lorenz_summary.csv"))?;
        write_text(&out_dir.join("lorenz_summary.txt"), &summary_text(&self.summaries))?;
        replicate_table(&self.replicates).write_csv(&out_dir.join("lorenz_replicates.csv"))
    }
}

/// Drives ε_t = e^{H_t} z_t with H the standardized x coordinate of the
/// Lorenz system, fits the lagged principal-component lasso for H̄ on the
/// leading share of rows and scores forecasts on the rest.
///
/// The noise is drawn once from the master seed; replicates differ only in
/// their cross-validation folds.
pub fn run_lorenz_study(config: &StudyConfig) -> Result<LorenzResults> {
    if config.study != StudyKind::LorenzStudy {
        return Err(StudyError::Config(format!("expected a lorenz-study config, got {}", config.study)));
    }
    config.validate()?;
    let bundle = lorenz_series(&config.lorenz, config.noise, derive_seed(config.seed, NOISE_STREAM, 0))?;
    let lags = config.lag_count;
    let h_hat = h_proxy(&bundle.epsilon);
    let prep = Prepared {
        design: lagged_design(&[&h_hat], lags)?,
        target: h_hat[lags..].to_vec(),
        epsilon: bundle.epsilon[lags..].to_vec(),
        first_t: lags,
    };
    let h_true = &bundle.h_true.as_ref().expect("simulated")[lags..];
    let n_rows = prep.target.len();
    let run = run_splits(config, &prep, Some(h_true), |f| {
        let n_train = (f * n_rows as f64).floor() as usize;
        Ok((n_train, population_sd(&prep.epsilon[..n_train.max(1)])))
    })?;
    Ok(LorenzResults {
        summaries: run.summaries,
        replicates: run.records,
    })
}
