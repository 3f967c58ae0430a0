//! Conditional distribution of ε_t = e^{H_t} z_t given the conditional mean
//! log-volatility H̄_t, when H_t − H̄_t is Laplace with mean absolute value Δ.

mod density;
mod exceedance;

use std::fmt;

use thiserror::Error;

use crate::quad::QuadError;
use crate::specfun::SpecFunError;

pub use density::{
    conditional_kurtosis, conditional_moment, noise_density, volatility_density,
    volatility_exceedance,
};
pub use exceedance::{
    exceedance_asymptotic, exceedance_exact, exceedance_series, AsymptoticTail, ExactExceedance,
    TailEstimate, TailSeries, CANCELLATION_GUARD,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not available for {0} noise: {1}")]
    Unsupported(NoiseKind, &'static str),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Distribution of the standardized noise z_t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Standard Laplace, density e^{−|z|}/2.
    Laplace,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::Gaussian => f.write_str("gaussian"),
            NoiseKind::Laplace => f.write_str("laplace"),
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "laplace" => Ok(NoiseKind::Laplace),
            other => Err(format!("unknown noise kind '{other}'")),
        }
    }
}

/// Tail parameter Δ = E|h_t| together with the noise family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    delta: f64,
    noise: NoiseKind,
}

impl ModelParams {
    pub fn new(delta: f64, noise: NoiseKind) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(ModelError::Domain(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok(Self { delta, noise })
    }

    pub fn gaussian(delta: f64) -> Result<Self> {
        Self::new(delta, NoiseKind::Gaussian)
    }

    pub fn laplace(delta: f64) -> Result<Self> {
        Self::new(delta, NoiseKind::Laplace)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise
    }
}

/// Conditional mean log-volatility H̄_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalState {
    pub h_bar: f64,
}

impl ConditionalState {
    pub fn new(h_bar: f64) -> Result<Self> {
        if !h_bar.is_finite() {
            return Err(ModelError::Domain(format!("h_bar must be finite, got {h_bar}")));
        }
        Ok(Self { h_bar })
    }
}

/// A raw threshold Λ and its rescaled counterpart Λ̃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledThreshold {
    pub lambda: f64,
    pub lambda_tilde: f64,
}

impl ScaledThreshold {
    /// Λ̃ = Λ/(√2 e^{H̄}) for Gaussian noise and Λ/e^{H̄} for Laplace noise.
    pub fn new(lambda: f64, state: ConditionalState, noise: NoiseKind) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ModelError::Domain(format!(
                "threshold must be a finite positive number, got {lambda}"
            )));
        }
        let scale = match noise {
            NoiseKind::Gaussian => std::f64::consts::SQRT_2 * state.h_bar.exp(),
            NoiseKind::Laplace => state.h_bar.exp(),
        };
        Ok(Self {
            lambda,
            lambda_tilde: lambda / scale,
        })
    }
}

/// A moment that may fail to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    /// The value, with `f64::INFINITY` standing in for a divergent moment.
    pub fn value(&self) -> f64 {
        match *self {
            Moment::Finite(v) => v,
            Moment::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moment::Finite(v) => write!(f, "{v}"),
            Moment::Infinite => f.write_str("∞"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ModelParams::gaussian(0.0).is_err());
        assert!(ModelParams::gaussian(1.0).is_ok());
        assert!(ModelParams::gaussian(1.01).is_err());
        assert!(ModelParams::laplace(f64::NAN).is_err());
    }

    #[test]
    fn threshold_scaling() {
        let s = ConditionalState::new(0.0).unwrap();
        let g = ScaledThreshold::new(4.0, s, NoiseKind::Gaussian).unwrap();
        assert!((g.lambda_tilde - 4.0 / 2f64.sqrt()).abs() < 1e-15);
        let s = ConditionalState::new(1.0).unwrap();
        let l = ScaledThreshold::new(2.0, s, NoiseKind::Laplace).unwrap();
        assert!((l.lambda_tilde - 2.0 / 1f64.exp()).abs() < 1e-15);
        assert!(ScaledThreshold::new(0.0, s, NoiseKind::Laplace).is_err());
    }

    #[test]
    fn noise_kind_parse() {
        assert_eq!("Laplace".parse::<NoiseKind>().unwrap(), NoiseKind::Laplace);
        assert_eq!("gaussian".parse::<NoiseKind>().unwrap(), NoiseKind::Gaussian);
        assert!("student".parse::<NoiseKind>().is_err());
    }
}
