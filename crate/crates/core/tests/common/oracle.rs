//! Reference quadrature used to check the closed-form special functions and
//! model probabilities. Double-exponential rules with level halving; kept
//! free of any dependency on the library under test.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

const MAX_LEVEL: usize = 12;
const T_MAX: f64 = 4.5;

/// ∫_a^b f(x) dx by the tanh-sinh rule. Endpoint singularities are allowed:
/// the abscissae are generated from their distance to the nearest endpoint.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let node = |t: f64| -> (f64, f64) {
        let s = FRAC_PI_2 * t.sinh();
        // 1 − tanh|s| written without cancellation.
        let comp = 2.0 / (1.0 + (2.0 * s.abs()).exp());
        let cosh_s = s.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        let x = if t < 0.0 { a + half * comp } else { b - half * comp };
        (x, w)
    };
    let eval = |t: f64| -> f64 {
        let (x, w) = node(t);
        if w == 0.0 || x <= a || x >= b {
            return 0.0;
        }
        w * f(x)
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = h * sum;
    for _ in 0..MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = h * sum;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// ∫_a^∞ f(x) dx by the exp-sinh rule, x = a + exp(π/2 · sinh t).
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> f64 {
    let eval = |t: f64| -> f64 {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let x = a + e;
        if !x.is_finite() || e == 0.0 {
            return 0.0;
        }
        let w = FRAC_PI_2 * t.cosh() * e;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let t_lo = -5.0;
    let t_hi = 5.0;
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut t = t_lo;
    while t <= t_hi {
        sum += eval(t);
        t += h;
    }
    let mut estimate = h * sum;
    for _ in 0..MAX_LEVEL {
        let mut t = t_lo + 0.5 * h;
        while t <= t_hi {
            sum += eval(t);
            t += h;
        }
        h *= 0.5;
        let next = h * sum;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Γ(a, b) from its defining integral, written in terms of u = x − b so the
/// integrand keeps full precision near the lower limit.
pub fn upper_gamma(a: f64, b: f64) -> f64 {
    let ln_b = b.ln();
    let scale = (a - 1.0) * ln_b - b;
    exp_sinh(
        |u| ((a - 1.0) * (1.0 + u / b).ln() - u + scale).exp(),
        0.0,
        1e-14,
    )
}

/// ln Γ(a, b) from the same integral, usable where Γ(a, b) itself underflows.
pub fn ln_upper_gamma(a: f64, b: f64) -> f64 {
    let integral = exp_sinh(|u| ((a - 1.0) * (1.0 + u / b).ln() - u).exp(), 0.0, 1e-14);
    (a - 1.0) * b.ln() - b + integral.ln()
}

/// γ(a, b) from its defining integral. On [0, min(b, 1)] the substitution
/// x = u^{1/a} removes the endpoint singularity.
pub fn lower_gamma(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let c = b.min(1.0);
    let head = tanh_sinh(|u| (-u.powf(1.0 / a)).exp() / a, 0.0, c.powf(a), 1e-14);
    let tail = if b > c {
        tanh_sinh(|x| ((a - 1.0) * x.ln() - x).exp(), c, b, 1e-14)
    } else {
        0.0
    };
    head + tail
}

/// erfc(x) = 2/√π ∫_x^∞ e^{−u²} du, integrated in v = u − x.
pub fn erfc(x: f64) -> f64 {
    let c = 2.0 / std::f64::consts::PI.sqrt();
    if x >= 0.0 {
        c * exp_sinh(|v| (-(v + x) * (v + x)).exp(), 0.0, 1e-15)
    } else {
        2.0 - erfc(-x)
    }
}

/// Standard Laplace density with mean absolute value `delta`.
pub fn laplace_pdf(u: f64, delta: f64) -> f64 {
    (-u.abs() / delta).exp() / (2.0 * delta)
}

/// Density of ε = e^{h̄ + u} z with u Laplace(Δ), obtained by integrating the
/// product of the scale mixture directly over u.
pub fn mixture_density(eps: f64, h_bar: f64, delta: f64, gaussian: bool) -> f64 {
    let kernel = |u: f64| -> f64 {
        let w = laplace_pdf(u, delta);
        let s = (h_bar + u).exp();
        if w == 0.0 || s == 0.0 || !s.is_finite() {
            return 0.0;
        }
        let x = eps / s;
        let pz = if gaussian {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        } else {
            0.5 * (-x.abs()).exp()
        };
        w * pz / s
    };
    exp_sinh(kernel, 0.0, 1e-13) + exp_sinh(|u| kernel(-u), 0.0, 1e-13)
}

/// P{|ε| ≥ Λ} as a mixture over the Laplace log-volatility innovation.
pub fn mixture_exceedance(lambda: f64, h_bar: f64, delta: f64, gaussian: bool) -> f64 {
    let kernel = |u: f64| -> f64 {
        let w = laplace_pdf(u, delta);
        if w == 0.0 {
            return 0.0;
        }
        let x = lambda / (h_bar + u).exp();
        let tail = if gaussian {
            erfc(x / std::f64::consts::SQRT_2)
        } else {
            (-x).exp()
        };
        w * tail
    };
    exp_sinh(kernel, 0.0, 1e-13) + exp_sinh(|u| kernel(-u), 0.0, 1e-13)
}
