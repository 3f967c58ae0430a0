use super::{Result, SpecFunError};

/// Truncated large-argument expansion of Γ(a,b).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTruncation {
    /// Number of terms kept (the leading term counts as one).
    pub n_terms: usize,
    pub value: f64,
    /// Magnitude of the first omitted term.
    pub remainder_bound: f64,
    /// True when the first omitted term is larger than the last kept one,
    /// i.e. the expansion has passed its smallest term.
    pub divergent: bool,
}

/// Rising factorial (x)_k = x(x+1)…(x+k−1), with (x)_0 = 1.
pub fn rising_factorial(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// u_k(a) = (a−1)(a−2)…(a−k), the coefficient of b^{−k} in the expansion.
pub fn asymptotic_coefficient(a: f64, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (a - i as f64))
}

/// Γ(a,b) ≈ b^{a−1} e^{−b} (1 + Σ_{k=1}^{n−1} u_k(a)/b^k).
///
/// Requires b > max(1, |a|) and n ≥ 1. Entering the divergent part of the
/// expansion is reported through [`SeriesTruncation::divergent`] and a log
/// warning rather than an error.
pub fn gamma_asymptotic(a: f64, b: f64, n: usize) -> Result<SeriesTruncation> {
    if n == 0 {
        return Err(SpecFunError::Domain("n must be at least 1".into()));
    }
    if !a.is_finite() || !b.is_finite() || b <= 1.0_f64.max(a.abs()) {
        return Err(SpecFunError::Domain(format!(
            "expansion needs b > max(1, |a|), got a = {a}, b = {b}"
        )));
    }
    let prefactor = ((a - 1.0) * b.ln() - b).exp();
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..n {
        term *= (a - k as f64) / b;
        sum += term;
    }
    let next = term * (a - n as f64) / b;
    let divergent = next.abs() > term.abs();
    if divergent {
        log::warn!("asymptotic expansion of Γ({a}, {b}) is divergent at {n} terms");
    }
    Ok(SeriesTruncation {
        n_terms: n,
        value: prefactor * sum,
        remainder_bound: prefactor * next.abs(),
        divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::super::upper_incomplete_gamma;
    use super::*;

    #[test]
    fn leading_term() {
        let s = gamma_asymptotic(0.5, 25.0, 1).unwrap();
        let ex = 25f64.powf(-0.5) * (-25f64).exp();
        assert!((s.value - ex).abs() / ex < 1e-14);
        assert_eq!(s.n_terms, 1);
    }

    #[test]
    fn coefficients() {
        let a = 0.37;
        assert!((asymptotic_coefficient(a, 1) - (a - 1.0)).abs() < 1e-15);
        assert!((asymptotic_coefficient(a, 2) - (a - 2.0) * (a - 1.0)).abs() < 1e-15);
        assert_eq!(asymptotic_coefficient(a, 0), 1.0);
        assert_eq!(rising_factorial(2.0, 3), 24.0);
        assert_eq!(rising_factorial(-0.5, 0), 1.0);
    }

    #[test]
    fn negative_a_accuracy() {
        let s = gamma_asymptotic(-1.5, 8.0, 4).unwrap();
        let ex = upper_incomplete_gamma(-1.5, 8.0).unwrap();
        // Alternating expansion: the error is bracketed by the first omitted term.
        assert!((s.value - ex).abs() <= s.remainder_bound);
        assert!((s.value - ex).abs() / ex < 0.05);
    }

    #[test]
    fn error_shrinks_with_b() {
        let mut last = f64::INFINITY;
        for &b in &[5.0, 10.0, 20.0, 40.0] {
            let s = gamma_asymptotic(2.3, b, 3).unwrap();
            let ex = upper_incomplete_gamma(2.3, b).unwrap();
            let err = (s.value - ex).abs() / ex;
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn divergence_detected() {
        let s = gamma_asymptotic(0.5, 3.0, 8).unwrap();
        assert!(s.divergent);
        let s = gamma_asymptotic(0.5, 30.0, 3).unwrap();
        assert!(!s.divergent);
    }

    #[test]
    fn rejects_small_b() {
        assert!(gamma_asymptotic(5.0, 4.0, 2).is_err());
        assert!(gamma_asymptotic(0.5, 0.9, 2).is_err());
        assert!(gamma_asymptotic(0.5, 3.0, 0).is_err());
    }
}
