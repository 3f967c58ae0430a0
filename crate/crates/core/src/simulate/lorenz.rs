use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{noise_draw, standardize, Result, SimError};
use crate::model::NoiseKind;
use crate::series::SeriesBundle;

pub type LorenzState = [f64; 3];

/// Lorenz system parameters and a fixed-step integration schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzConfig {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub initial: LorenzState,
    pub dt: f64,
    /// Number of samples returned, the initial state included.
    pub n_steps: usize,
}

impl Default for LorenzConfig {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            initial: [0.0, 1.0, 1.0],
            dt: 0.01,
            n_steps: 10_000,
        }
    }
}

pub fn lorenz_derivative(c: &LorenzConfig, s: &LorenzState) -> LorenzState {
    [
        c.sigma * (s[1] - s[0]),
        s[0] * (c.rho - s[2]) - s[1],
        s[0] * s[1] - c.beta * s[2],
    ]
}

fn axpy(s: &LorenzState, k: &LorenzState, h: f64) -> LorenzState {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]]
}

/// Classical fourth-order Runge–Kutta trajectory.
pub fn integrate_lorenz(config: &LorenzConfig) -> Result<Vec<LorenzState>> {
    if !(config.dt > 0.0) || config.n_steps == 0 {
        return Err(SimError::InvalidParameter(
            "dt must be positive and n_steps at least 1".into(),
        ));
    }
    let h = config.dt;
    let mut out = Vec::with_capacity(config.n_steps);
    let mut s = config.initial;
    out.push(s);
    for step in 1..config.n_steps {
        let k1 = lorenz_derivative(config, &s);
        let k2 = lorenz_derivative(config, &axpy(&s, &k1, 0.5 * h));
        let k3 = lorenz_derivative(config, &axpy(&s, &k2, 0.5 * h));
        let k4 = lorenz_derivative(config, &axpy(&s, &k3, h));
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Divergence(step));
        }
        out.push(s);
    }
    Ok(out)
}

/// Volatility driven by the standardized x-coordinate of a Lorenz
/// trajectory: H_t = (x_t − μ_x)/σ_x and ε_t = e^{H_t} z_t.
pub fn lorenz_series(config: &LorenzConfig, noise: NoiseKind, seed: u64) -> Result<SeriesBundle> {
    let traj = integrate_lorenz(config)?;
    let x: Vec<f64> = traj.iter().map(|s| s[0]).collect();
    let h = standardize(&x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let epsilon = h.iter().map(|v| v.exp() * noise_draw(&mut rng, noise)).collect();
    let mut bundle = SeriesBundle::new(epsilon);
    bundle.set_h_true(h).expect("lengths agree");
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_at_start() {
        let c = LorenzConfig::default();
        let d = lorenz_derivative(&c, &c.initial);
        assert_eq!(d[0], 10.0);
        assert_eq!(d[1], -1.0);
        assert!((d[2] + 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn subcritical_decay() {
        let c = LorenzConfig {
            rho: 0.5,
            initial: [0.1, 0.1, 0.1],
            n_steps: 5000,
            ..Default::default()
        };
        let traj = integrate_lorenz(&c).unwrap();
        let last = traj.last().unwrap();
        assert!(last.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn step_halving_agreement() {
        let coarse = integrate_lorenz(&LorenzConfig::default()).unwrap();
        let fine = integrate_lorenz(&LorenzConfig {
            dt: 0.001,
            n_steps: 5001,
            ..Default::default()
        })
        .unwrap();
        let mut worst = 0.0f64;
        for i in 0..=500 {
            for j in 0..3 {
                worst = worst.max((coarse[i][j] - fine[10 * i][j]).abs());
            }
        }
        assert!(worst < 1e-3, "max deviation {worst}");
    }

    #[test]
    fn mirror_symmetry() {
        let c = LorenzConfig {
            initial: [1.0, 2.0, 20.0],
            n_steps: 300,
            ..Default::default()
        };
        let m = LorenzConfig {
            initial: [-1.0, -2.0, 20.0],
            ..c
        };
        let a = integrate_lorenz(&c).unwrap();
        let b = integrate_lorenz(&m).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p[0], -q[0]);
            assert_eq!(p[1], -q[1]);
            assert_eq!(p[2], q[2]);
        }
    }

    #[test]
    fn fourth_order_local_error() {
        let c = LorenzConfig {
            initial: [1.0, 1.0, 1.0],
            ..Default::default()
        };
        let one_step = |dt: f64, n: usize| {
            let traj = integrate_lorenz(&LorenzConfig { dt, n_steps: n + 1, ..c }).unwrap();
            traj[n]
        };
        let reference = one_step(1e-4, 200);
        let e1 = (one_step(0.02, 1)[0] - reference[0]).abs();
        let e2 = (one_step(0.01, 1)[0] - one_step(1e-4, 100)[0]).abs();
        let ratio = e1 / e2;
        assert!(ratio > 20.0 && ratio < 45.0, "ratio {ratio}");
    }

    #[test]
    fn volatility_range() {
        let b = lorenz_series(&LorenzConfig::default(), NoiseKind::Gaussian, 1).unwrap();
        let h = b.h_true.as_ref().unwrap();
        let frac = h.iter().filter(|&&v| v > 1.0).count() as f64 / h.len() as f64;
        assert!(frac > 0.1, "fraction {frac}");
        assert!(h.iter().any(|&v| v > 2.0));
    }
}
