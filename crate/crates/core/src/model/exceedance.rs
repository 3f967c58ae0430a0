use std::f64::consts::{LN_2, PI};

use super::density::noise_density;
use super::{ConditionalState, ModelError, ModelParams, NoiseKind, Result, ScaledThreshold};
use crate::quad::integrate;
use crate::specfun::{
    erfc, ln_gamma, lower_incomplete_gamma_scaled, rising_factorial, upper_incomplete_gamma,
    upper_incomplete_gamma_scaled,
};

/// Below this value of Λ̃ the exact exceedance is obtained by integrating the
/// density over [−Λ, Λ] instead of from the closed form.
pub const CANCELLATION_GUARD: f64 = 0.05;

const PRECISION_LOSS_LIMIT: f64 = 1e-8;

/// Closed-form P{|ε_t| ≥ Λ | F_{t−1}}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactExceedance {
    pub probability: f64,
    /// Set when cancellation among the terms of the closed form may have cost
    /// more than 1e−8 relative accuracy.
    pub precision_loss: bool,
    pub by_quadrature: bool,
}

pub fn exceedance_exact(
    threshold: f64,
    state: ConditionalState,
    params: ModelParams,
) -> Result<ExactExceedance> {
    let t = ScaledThreshold::new(threshold, state, params.noise())?;
    let l = t.lambda_tilde;
    if l < CANCELLATION_GUARD {
        let mass = integrate(
            |e| noise_density(e, state, params).unwrap_or(f64::NAN),
            0.0,
            threshold,
            1e-15,
            1e-13,
        )?;
        return Ok(ExactExceedance {
            probability: (1.0 - 2.0 * mass).clamp(0.0, 1.0),
            precision_loss: false,
            by_quadrature: true,
        });
    }
    let inv = 1.0 / params.delta();
    let (base, lower, upper) = match params.noise() {
        NoiseKind::Gaussian => {
            let b = l * l;
            let c = l / (2.0 * PI.sqrt());
            (
                erfc(l),
                c * lower_incomplete_gamma_scaled(0.5 * (1.0 + inv), b)?,
                c * upper_incomplete_gamma_scaled(0.5 * (1.0 - inv), b)?,
            )
        }
        NoiseKind::Laplace => {
            let c = 0.5 * l;
            (
                (-l).exp(),
                c * lower_incomplete_gamma_scaled(1.0 + inv, l)?,
                c * upper_incomplete_gamma_scaled(1.0 - inv, l)?,
            )
        }
    };
    let p = base + lower - upper;
    let magnitude = base.abs() + lower.abs() + upper.abs();
    let precision_loss = p > 0.0 && magnitude * f64::EPSILON / p > PRECISION_LOSS_LIMIT;
    Ok(ExactExceedance {
        probability: p.clamp(0.0, 1.0),
        precision_loss,
        by_quadrature: false,
    })
}

/// Leading-order tail probability, capped at one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub probability: f64,
    /// The uncapped value.
    pub raw: f64,
    /// True when `raw` exceeded one and was replaced by one.
    pub capped: bool,
}

/// Leading-order tail c·Λ̃^{−1/Δ} for a fixed threshold and Δ, evaluated
/// cheaply for many values of H̄.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTail {
    log_base: f64,
    inv_delta: f64,
}

impl AsymptoticTail {
    pub fn new(params: ModelParams, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(ModelError::Domain(format!(
                "threshold must be a finite positive number, got {threshold}"
            )));
        }
        let inv = 1.0 / params.delta();
        let ln_lambda = threshold.ln();
        let log_base = match params.noise() {
            NoiseKind::Gaussian => {
                ln_gamma(0.5 * (1.0 + inv)) - (2.0 * PI.sqrt()).ln() - inv * (ln_lambda - 0.5 * LN_2)
            }
            NoiseKind::Laplace => ln_gamma(1.0 + inv) - LN_2 - inv * ln_lambda,
        };
        Ok(Self {
            log_base,
            inv_delta: inv,
        })
    }

    /// Uncapped leading term at conditional mean log-volatility `h_bar`.
    pub fn raw(&self, h_bar: f64) -> f64 {
        (self.log_base + self.inv_delta * h_bar).exp()
    }

    pub fn estimate(&self, h_bar: f64) -> TailEstimate {
        let raw = self.raw(h_bar);
        TailEstimate {
            probability: raw.min(1.0),
            raw,
            capped: raw > 1.0,
        }
    }
}

/// Leading-order approximation of P{|ε_t| ≥ Λ | F_{t−1}} for large Λ̃.
pub fn exceedance_asymptotic(
    threshold: f64,
    state: ConditionalState,
    params: ModelParams,
) -> Result<TailEstimate> {
    Ok(AsymptoticTail::new(params, threshold)?.estimate(state.h_bar))
}

/// Leading term plus incomplete-gamma corrections of the exceedance expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSeries {
    pub leading: f64,
    /// Corrections of order 1, 2, …, n_terms − 1.
    pub corrections: Vec<f64>,
    pub estimate: f64,
    /// The first correction not included in `estimate`.
    pub next_correction: f64,
    /// True when the first omitted correction exceeds the last kept term.
    pub divergent: bool,
}

impl TailSeries {
    /// Order (starting at 1) of the smallest correction in magnitude.
    pub fn smallest_correction(&self) -> Option<usize> {
        self.corrections
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i + 1)
    }
}

fn correction(k: usize, lambda_tilde: f64, params: ModelParams) -> Result<f64> {
    let d = params.delta();
    let inv = 1.0 / d;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let kf = k as f64;
    Ok(match params.noise() {
        NoiseKind::Gaussian => {
            let a1 = 0.5 * (1.0 - inv);
            let a2 = 0.5 * (1.0 + inv);
            let coef = rising_factorial(a2, k) - rising_factorial(a1, k);
            let g = upper_incomplete_gamma(-kf - 0.5, lambda_tilde * lambda_tilde)?;
            sign * coef * g / (4.0 * PI.sqrt() * d)
        }
        NoiseKind::Laplace => {
            let coef = rising_factorial(inv, k) - rising_factorial(-inv, k);
            let g = upper_incomplete_gamma(-kf, lambda_tilde)?;
            sign * coef * g / (2.0 * d)
        }
    })
}

/// Exceedance expansion truncated after `n_terms` terms (the leading term and
/// n_terms − 1 corrections). Requires Λ̃ > 1.
pub fn exceedance_series(
    threshold: f64,
    state: ConditionalState,
    params: ModelParams,
    n_terms: usize,
) -> Result<TailSeries> {
    if n_terms == 0 {
        return Err(ModelError::Domain("n_terms must be at least 1".into()));
    }
    let t = ScaledThreshold::new(threshold, state, params.noise())?;
    if t.lambda_tilde <= 1.0 {
        return Err(ModelError::Domain(format!(
            "the expansion needs a scaled threshold above 1, got {}",
            t.lambda_tilde
        )));
    }
    let leading = AsymptoticTail::new(params, threshold)?.raw(state.h_bar);
    let corrections = (1..n_terms)
        .map(|k| correction(k, t.lambda_tilde, params))
        .collect::<Result<Vec<_>>>()?;
    let next_correction = correction(n_terms, t.lambda_tilde, params)?;
    let last = corrections.last().copied().unwrap_or(leading);
    let divergent = next_correction.abs() > last.abs();
    if divergent {
        log::warn!(
            "exceedance expansion is divergent after {n_terms} terms (delta = {}, scaled threshold = {})",
            params.delta(),
            t.lambda_tilde
        );
    }
    Ok(TailSeries {
        leading,
        estimate: leading + corrections.iter().sum::<f64>(),
        corrections,
        next_correction,
        divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::volatility_exceedance;
    use crate::oracle;

    fn st(h: f64) -> ConditionalState {
        ConditionalState::new(h).unwrap()
    }

    #[test]
    fn exact_matches_mixture() {
        for &(lam, h, d) in &[(4.0, 0.0, 0.25), (0.5, 0.3, 0.7), (10.0, 1.0, 0.1), (0.02, 0.0, 0.5), (3.0, -0.5, 0.95)] {
            for (kind, gaussian) in [(NoiseKind::Gaussian, true), (NoiseKind::Laplace, false)] {
                let p = ModelParams::new(d, kind).unwrap();
                let got = exceedance_exact(lam, st(h), p).unwrap();
                let want = oracle::mixture_exceedance(lam, h, d, gaussian);
                assert!((got.probability - want).abs() < 1e-11, "{kind} {lam} {h} {d}: {} vs {want}", got.probability);
                assert!(!got.precision_loss);
            }
        }
    }

    #[test]
    fn exact_limits() {
        let p = ModelParams::gaussian(0.3).unwrap();
        let e = exceedance_exact(1e-10, st(0.0), p).unwrap();
        assert!(e.by_quadrature);
        assert!((e.probability - 1.0).abs() < 1e-9);
        let p = ModelParams::gaussian(0.01).unwrap();
        let l = 2.0;
        let e = exceedance_exact(l * 2f64.sqrt(), st(0.0), p).unwrap();
        assert!((e.probability - erfc(l)).abs() < 1e-3 * erfc(l) + 1e-4);
    }

    #[test]
    fn asymptotic_examples() {
        let p = ModelParams::gaussian(0.25).unwrap();
        let t = exceedance_asymptotic(4.0, st(0.0), p).unwrap();
        assert!((t.probability - 1.5 / 256.0).abs() < 1e-15);
        let exact = exceedance_exact(4.0, st(0.0), p).unwrap().probability;
        assert!((t.probability - exact).abs() / exact < 0.05);

        let p = ModelParams::gaussian(0.5).unwrap();
        for &lam in &[1.5, 3.0, 8.0] {
            let a = exceedance_asymptotic(lam, st(0.2), p).unwrap().raw;
            let v = volatility_exceedance(lam, st(0.2), p).unwrap();
            assert!((a - v).abs() < 1e-14 * v);
        }
        let p = ModelParams::laplace(1.0).unwrap();
        let a = exceedance_asymptotic(5.0, st(0.4), p).unwrap().raw;
        let v = volatility_exceedance(5.0, st(0.4), p).unwrap();
        assert!((a - v).abs() < 1e-14 * v);
    }

    #[test]
    fn asymptotic_cap() {
        let p = ModelParams::gaussian(0.4).unwrap();
        let t = exceedance_asymptotic(0.1, st(2.0), p).unwrap();
        assert!(t.capped);
        assert_eq!(t.probability, 1.0);
        assert!(t.raw > 1.0);
    }

    #[test]
    fn series_structure() {
        let p = ModelParams::gaussian(0.25).unwrap();
        let lam = 4.0;
        let s1 = exceedance_series(lam, st(0.0), p, 1).unwrap();
        let a = exceedance_asymptotic(lam, st(0.0), p).unwrap().raw;
        assert_eq!(s1.estimate, a);
        assert!(s1.corrections.is_empty());
        let s = exceedance_series(lam, st(0.0), p, 16).unwrap();
        assert!(s.corrections[0] < 0.0);
        let mags: Vec<f64> = s.corrections.iter().map(|c| c.abs()).collect();
        let k = s.smallest_correction().unwrap();
        assert!(k > 1 && k < 15, "smallest correction at {k}");
        assert!(mags[..k].windows(2).all(|w| w[1] < w[0]));
        assert!(mags[k - 1..].windows(2).all(|w| w[1] > w[0]));
        assert!(exceedance_series(1.0, st(0.0), p, 2).is_err());
    }

    #[test]
    fn series_improves_on_leading_term() {
        for (kind, lam) in [(NoiseKind::Gaussian, 5.0), (NoiseKind::Laplace, 6.0)] {
            let p = ModelParams::new(0.3, kind).unwrap();
            let exact = exceedance_exact(lam, st(0.0), p).unwrap().probability;
            let s = exceedance_series(lam, st(0.0), p, 3).unwrap();
            assert!((s.estimate - exact).abs() < (s.leading - exact).abs());
        }
    }
}
