use std::f64::consts::PI;

use super::{ConditionalState, ModelError, ModelParams, Moment, NoiseKind, Result};
use crate::specfun::{lower_incomplete_gamma_scaled, upper_incomplete_gamma_scaled};

/// Density of the conditional volatility σ_t = e^{H_t}, a log-Laplace law
/// with median e^{H̄_t}: a power law on either side of the median.
pub fn volatility_density(sigma: f64, state: ConditionalState, params: ModelParams) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(ModelError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let d = params.delta();
    let r = (sigma.ln() - state.h_bar) / d;
    Ok((-r.abs()).exp() / (2.0 * d * sigma))
}

/// P{σ_t ≥ Λ} = ½ (Λ/e^{H̄})^{−1/Δ}, valid for Λ at or above the median.
pub fn volatility_exceedance(
    threshold: f64,
    state: ConditionalState,
    params: ModelParams,
) -> Result<f64> {
    if !(threshold >= state.h_bar.exp()) {
        return Err(ModelError::Domain(format!(
            "threshold {threshold} lies below the median volatility {}",
            state.h_bar.exp()
        )));
    }
    Ok(0.5 * (-(threshold.ln() - state.h_bar) / params.delta()).exp())
}

fn double_factorial(n: u32) -> f64 {
    (1..=n).rev().step_by(2).fold(1.0, |acc, k| acc * k as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// E{ε_tⁿ | F_{t−1}}.
///
/// Odd moments vanish by symmetry, except that under Laplace noise n = 1
/// yields E{|ε_t| | F_{t−1}}. A moment that diverges (Δ ≥ 1/n) is returned
/// as [`Moment::Infinite`].
pub fn conditional_moment(n: i32, state: ConditionalState, params: ModelParams) -> Result<Moment> {
    if n <= 0 {
        return Err(ModelError::Domain(format!("moment order must be positive, got {n}")));
    }
    let n_u = n as u32;
    let laplace_abs = params.noise() == NoiseKind::Laplace && n == 1;
    if n % 2 == 1 && !laplace_abs {
        return Ok(Moment::Finite(0.0));
    }
    let d = params.delta();
    let nf = n as f64;
    if d * nf >= 1.0 {
        return Ok(Moment::Infinite);
    }
    let noise_moment = match params.noise() {
        NoiseKind::Gaussian => double_factorial(n_u - 1),
        NoiseKind::Laplace => factorial(n_u),
    };
    Ok(Moment::Finite(
        (nf * state.h_bar).exp() * noise_moment / (1.0 - nf * nf * d * d),
    ))
}

/// Conditional kurtosis 3(1−4Δ²)²/(1−16Δ²) under Gaussian noise; it does not
/// depend on H̄_t and diverges for Δ ≥ 1/4.
pub fn conditional_kurtosis(params: ModelParams) -> Result<Moment> {
    if params.noise() != NoiseKind::Gaussian {
        return Err(ModelError::Unsupported(params.noise(), "kurtosis"));
    }
    let d2 = params.delta() * params.delta();
    if d2 >= 1.0 / 16.0 {
        return Ok(Moment::Infinite);
    }
    let m = 1.0 - 4.0 * d2;
    Ok(Moment::Finite(3.0 * m * m / (1.0 - 16.0 * d2)))
}

/// Conditional density of ε_t given H̄_t.
///
/// At ε = 0 the analytic limit is returned; it exists only for Δ < 1.
pub fn noise_density(epsilon: f64, state: ConditionalState, params: ModelParams) -> Result<f64> {
    if !epsilon.is_finite() {
        return Err(ModelError::Domain(format!("epsilon must be finite, got {epsilon}")));
    }
    let d = params.delta();
    let scale = state.h_bar.exp();
    let inv = 1.0 / d;
    let (a1, a2, b, norm) = match params.noise() {
        NoiseKind::Gaussian => {
            let x = epsilon / scale;
            (
                0.5 * (1.0 - inv),
                0.5 * (1.0 + inv),
                0.5 * x * x,
                4.0 * (2.0 * PI).sqrt() * d * scale,
            )
        }
        NoiseKind::Laplace => (1.0 - inv, 1.0 + inv, epsilon.abs() / scale, 4.0 * d * scale),
    };
    if !b.is_finite() {
        return Ok(0.0);
    }
    if b < 1e-300 {
        if d >= 1.0 {
            return Err(ModelError::Domain(
                "the density is unbounded at epsilon = 0 when delta = 1".into(),
            ));
        }
        // Γ(a1,b)b^{−a1} → −1/a1 and γ(a2,b)b^{−a2} → 1/a2 as b → 0.
        return Ok((1.0 / a2 - 1.0 / a1) / norm);
    }
    let upper = upper_incomplete_gamma_scaled(a1, b)?;
    let lower = lower_incomplete_gamma_scaled(a2, b)?;
    Ok((upper + lower) / norm)
}
