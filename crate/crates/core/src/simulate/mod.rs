//! Synthetic data: Laplace innovations, autoregressive log-volatility, the
//! resulting return series, and a Lorenz-driven volatility series.

mod lorenz;

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::NoiseKind;
use crate::series::SeriesBundle;

pub use lorenz::{integrate_lorenz, lorenz_derivative, lorenz_series, LorenzConfig, LorenzState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("autoregression is not stationary (reflection coefficient {reflection} at lag {lag})")]
    Nonstationary { lag: usize, reflection: f64 },
    #[error("integration produced a non-finite state at step {0}")]
    Divergence(usize),
    #[error("series is degenerate: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// H_t = .5H_{t−1} + .4H_{t−2} + h_t
pub const AR2_COEFFICIENTS: [f64; 2] = [0.5, 0.4];
/// H_t = .05H_{t−1} + .05H_{t−2} + .25H_{t−3} + .2H_{t−4} + .35H_{t−5} + h_t
pub const AR5_COEFFICIENTS: [f64; 5] = [0.05, 0.05, 0.25, 0.2, 0.35];

pub const DEFAULT_BURN_IN: usize = 500;

const H_STREAM: u64 = 1;
const Z_STREAM: u64 = 2;

/// Reflection (partial autocorrelation) coefficients of an AR polynomial,
/// lag 1 first, obtained by running the Levinson recursion backwards.
pub fn reflection_coefficients(coefficients: &[f64]) -> Vec<f64> {
    let p = coefficients.len();
    let mut a = coefficients.to_vec();
    let mut out = vec![0.0; p];
    for m in (1..=p).rev() {
        let k = a[m - 1];
        out[m - 1] = k;
        if k.abs() >= 1.0 {
            break;
        }
        let denom = 1.0 - k * k;
        a = (0..m - 1).map(|i| (a[i] + k * a[m - 2 - i]) / denom).collect();
    }
    out
}

/// Autoregressive log-volatility H_t = Σ φ_i H_{t−i} + h_t with Laplace h_t.
#[derive(Debug, Clone, PartialEq)]
pub struct ArSpec {
    coefficients: Vec<f64>,
    delta: f64,
    burn_in: usize,
}

impl ArSpec {
    pub fn new(coefficients: Vec<f64>, delta: f64, burn_in: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(SimError::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(SimError::InvalidParameter("non-finite AR coefficient".into()));
        }
        if let Some((i, &k)) = reflection_coefficients(&coefficients)
            .iter()
            .enumerate()
            .find(|(_, k)| k.abs() >= 1.0)
        {
            return Err(SimError::Nonstationary {
                lag: i + 1,
                reflection: k,
            });
        }
        Ok(Self {
            coefficients,
            delta,
            burn_in,
        })
    }

    pub fn ar2(delta: f64) -> Result<Self> {
        Self::new(AR2_COEFFICIENTS.to_vec(), delta, DEFAULT_BURN_IN)
    }

    pub fn ar5(delta: f64) -> Result<Self> {
        Self::new(AR5_COEFFICIENTS.to_vec(), delta, DEFAULT_BURN_IN)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
}

/// Laplace draw with mean absolute value `delta` by inversion of the CDF.
pub fn laplace_draw<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = u - 0.5;
    -delta * v.signum() * (-2.0 * v.abs()).ln_1p()
}

/// `count` i.i.d. Laplace draws with E|h| = delta.
pub fn sample_laplace(delta: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| laplace_draw(&mut rng, delta)).collect())
}

/// Draw of the standardized noise z_t.
pub fn noise_draw<R: Rng + ?Sized>(rng: &mut R, noise: NoiseKind) -> f64 {
    match noise {
        NoiseKind::Gaussian => StandardNormal.sample(rng),
        NoiseKind::Laplace => laplace_draw(rng, 1.0),
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Simulates ε_t = e^{H_t} z_t. H starts at zero and the first
/// `spec.burn_in()` steps are discarded. The latent H_t is kept in `h_true`.
pub fn simulate_sv(spec: &ArSpec, length: usize, noise: NoiseKind, seed: u64) -> SeriesBundle {
    let mut rng_h = stream(seed, H_STREAM);
    let mut rng_z = stream(seed, Z_STREAM);
    let p = spec.coefficients.len();
    let total = spec.burn_in + length;
    let mut h = vec![0.0; p + total];
    for t in p..p + total {
        let mean: f64 = spec
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * h[t - 1 - i])
            .sum();
        h[t] = mean + laplace_draw(&mut rng_h, spec.delta);
    }
    let h_true: Vec<f64> = h[p + spec.burn_in..].to_vec();
    let epsilon = h_true
        .iter()
        .map(|&x| x.exp() * noise_draw(&mut rng_z, noise))
        .collect();
    let mut bundle = SeriesBundle::new(epsilon);
    bundle.set_h_true(h_true).expect("lengths agree");
    bundle
}

/// (x − mean)/sd with the population standard deviation.
pub fn standardize(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(SimError::Degenerate(format!(
            "need at least 2 values, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(SimError::Degenerate("zero variance".into()));
    }
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}
