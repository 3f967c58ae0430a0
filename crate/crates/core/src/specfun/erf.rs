use std::f64::consts::PI;

use super::incomplete::upper_incomplete_gamma;

/// Complementary error function, erfc(x) = Γ(1/2, x²)/√π for x ≥ 0 and
/// 2 − erfc(−x) otherwise.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x < 1e-8 {
        return 1.0 - 2.0 * x / PI.sqrt();
    }
    match upper_incomplete_gamma(0.5, x * x) {
        Ok(v) => v / PI.sqrt(),
        Err(_) => f64::NAN,
    }
}

/// Error function, erf(x) = 1 − erfc(x).
pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}
