//! Estimation: the log-volatility proxy, conditional-mean regressions and the
//! moment-matching estimator of Δ.

mod ar;
mod lasso;

use thiserror::Error;

use crate::model::{AsymptoticTail, ModelError, ModelParams, NoiseKind};
use crate::specfun::EULER_GAMMA;

pub use ar::{yule_walker_ar, ArModel};
pub use lasso::{
    fit_lasso_path, fit_pc_lasso, lagged_design, LassoFit, PcLassoConfig, RegressionModel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot parse model text: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, EstimateError>;

/// (log 2 + γ)/2, equal to −E{log|z|} for standard normal z.
pub const H_PROXY_OFFSET: f64 = 0.5 * (std::f64::consts::LN_2 + EULER_GAMMA);

/// Ĥ_t = log|ε_t| + (log 2 + γ)/2.
///
/// Values with |ε_t| below 1e−300 are replaced by 1e−12 times the sample
/// standard deviation before taking the log.
pub fn h_proxy(epsilon: &[f64]) -> Vec<f64> {
    let floor = || {
        let n = epsilon.len() as f64;
        let mean = epsilon.iter().sum::<f64>() / n;
        let sd = (epsilon.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            1e-12 * sd
        } else {
            1e-300
        }
    };
    let mut clamp = None;
    epsilon
        .iter()
        .map(|&e| {
            let a = e.abs();
            let a = if a < 1e-300 { *clamp.get_or_insert_with(floor) } else { a };
            a.ln() + H_PROXY_OFFSET
        })
        .collect()
}

/// Population standard deviation.
pub fn population_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// How the per-observation model probability enters the moment condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilityCap {
    /// Use the leading-order tail value as is, even above one.
    #[default]
    Uncapped,
    /// Replace values above one by one.
    Capped,
}

/// Result of the grid search for Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub delta_hat: f64,
    pub threshold_used: f64,
    /// |observed exceedances − expected exceedances| at `delta_hat`.
    pub residual: f64,
    /// Number of observations with |ε_t| ≥ threshold.
    pub exceedances: usize,
}

/// The grid {0.01, 0.02, …, 1.00}.
pub fn delta_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

/// Chooses Δ on a grid so that the expected number of exceedances of
/// `threshold` matches the observed count. Ties go to the smaller Δ.
pub fn estimate_delta(
    epsilon: &[f64],
    h_bar_hat: &[f64],
    threshold: f64,
    noise: NoiseKind,
) -> Result<DeltaEstimate> {
    estimate_delta_on_grid(epsilon, h_bar_hat, threshold, noise, &delta_grid(), ProbabilityCap::Uncapped)
}

pub fn estimate_delta_on_grid(
    epsilon: &[f64],
    h_bar_hat: &[f64],
    threshold: f64,
    noise: NoiseKind,
    grid: &[f64],
    cap: ProbabilityCap,
) -> Result<DeltaEstimate> {
    if epsilon.len() != h_bar_hat.len() {
        return Err(EstimateError::Dimension {
            expected: epsilon.len(),
            found: h_bar_hat.len(),
        });
    }
    if epsilon.is_empty() || grid.is_empty() {
        return Err(EstimateError::InvalidInput("empty series or grid".into()));
    }
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(EstimateError::InvalidInput(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let exceedances = epsilon.iter().filter(|e| e.abs() >= threshold).count();
    if exceedances == 0 {
        log::warn!("no observation reaches the threshold {threshold}; delta goes to the grid minimum");
    }
    let observed = exceedances as f64;
    let mut best: Option<(f64, f64)> = None;
    for &d in grid {
        let tail = AsymptoticTail::new(ModelParams::new(d, noise)?, threshold)?;
        let expected: f64 = match cap {
            ProbabilityCap::Uncapped => h_bar_hat.iter().map(|&h| tail.raw(h)).sum(),
            ProbabilityCap::Capped => h_bar_hat.iter().map(|&h| tail.raw(h).min(1.0)).sum(),
        };
        let r = (observed - expected).abs();
        if best.is_none_or(|(br, _)| r < br) {
            best = Some((r, d));
        }
    }
    let (residual, delta_hat) = best.expect("grid is non-empty");
    Ok(DeltaEstimate {
        delta_hat,
        threshold_used: threshold,
        residual,
        exceedances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proxy_values() {
        let h = h_proxy(&[1.0, -(-H_PROXY_OFFSET).exp()]);
        assert!((h[0] - 0.6352).abs() < 1e-4);
        assert!((h[0] - H_PROXY_OFFSET).abs() < 1e-16);
        assert!(h[1].abs() < 1e-15);
        assert!((H_PROXY_OFFSET - 0.635_181_422_730_739_1).abs() < 1e-16);
    }

    #[test]
    fn proxy_clamps_zeros() {
        let h = h_proxy(&[0.0, 1.0, -1.0]);
        assert!(h[0].is_finite());
        let sd = population_sd(&[0.0, 1.0, -1.0]);
        assert!((h[0] - ((1e-12 * sd).ln() + H_PROXY_OFFSET)).abs() < 1e-12);
    }

    #[test]
    fn grid_and_ties() {
        let g = delta_grid();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[99], 1.0);
        // No exceedances: every Δ gives a positive expected count, the
        // smallest Δ gives the smallest one.
        let e = vec![0.1; 50];
        let h = vec![0.0; 50];
        let d = estimate_delta(&e, &h, 100.0, NoiseKind::Gaussian).unwrap();
        assert_eq!(d.delta_hat, 0.01);
        assert_eq!(d.exceedances, 0);
    }

    #[test]
    fn recovers_exact_match() {
        // Choose the exceedance count to equal the model count at Δ = 0.3.
        let n = 2000;
        let h = vec![0.0; n];
        let lambda = 3.0;
        let tail = AsymptoticTail::new(ModelParams::gaussian(0.3).unwrap(), lambda).unwrap();
        let expected = tail.raw(0.0) * n as f64;
        let k = expected.round() as usize;
        let e: Vec<f64> = (0..n).map(|i| if i < k { 5.0 } else { 0.1 }).collect();
        let d = estimate_delta(&e, &h, lambda, NoiseKind::Gaussian).unwrap();
        assert!((d.delta_hat - 0.3).abs() < 0.011);
        for &g in &delta_grid() {
            let r = estimate_delta_on_grid(&e, &h, lambda, NoiseKind::Gaussian, &[g], ProbabilityCap::Uncapped)
                .unwrap()
                .residual;
            assert!(d.residual <= r);
        }
    }

    #[test]
    fn cap_changes_objective() {
        let h = vec![3.0, -1.0, -1.0];
        let e = vec![10.0, 0.1, 0.1];
        let u = estimate_delta_on_grid(&e, &h, 1.0, NoiseKind::Gaussian, &delta_grid(), ProbabilityCap::Uncapped).unwrap();
        let c = estimate_delta_on_grid(&e, &h, 1.0, NoiseKind::Gaussian, &delta_grid(), ProbabilityCap::Capped).unwrap();
        assert!(u.residual >= 0.0 && c.residual >= 0.0);
        assert!(estimate_delta(&e, &h[..2], 1.0, NoiseKind::Gaussian).is_err());
    }
}
