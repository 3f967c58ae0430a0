//! Special-function kernel: gamma, incomplete gamma functions for every real
//! first argument, the complementary error function and the large-argument
//! expansion of the upper incomplete gamma function.
//!
//! Every function here is a pure function of its arguments.

mod asymptotic;
mod erf;
mod gamma;
mod incomplete;

use thiserror::Error;

pub use asymptotic::{asymptotic_coefficient, gamma_asymptotic, rising_factorial, SeriesTruncation};
pub use erf::{erf, erfc};
pub use gamma::{gamma, ln_gamma};
pub use incomplete::{
    lower_incomplete_gamma, upper_incomplete_gamma, upper_incomplete_gamma_eval, IncompleteGamma,
    UNDERFLOW_ARGUMENT,
};
pub use incomplete::{lower_incomplete_gamma_scaled, upper_incomplete_gamma_scaled};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{routine} did not converge after {iterations} iterations (a = {a}, b = {b})")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
        a: f64,
        b: f64,
    },
}

pub type Result<T> = std::result::Result<T, SpecFunError>;
