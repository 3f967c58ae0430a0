use loglaplace::estimate::{
    delta_grid, estimate_delta, fit_pc_lasso, h_proxy, lagged_design, population_sd, yule_walker_ar,
    PcLassoConfig, RegressionModel,
};
use loglaplace::model::NoiseKind;
use loglaplace::simulate::{simulate_sv, ArSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn yule_walker_is_always_stationary(x in prop::collection::vec(-5.0..5.0f64, 30..200), p in 1usize..12) {
        prop_assume!(population_sd(&x) > 1e-6);
        let m = yule_walker_ar(&x, p).unwrap();
        prop_assert!(m.reflection.iter().all(|k| k.abs() < 1.0));
        prop_assert_eq!(m.fitted(&x).len(), x.len() - p);
    }

    #[test]
    fn delta_hat_is_on_the_grid(seed in 0u64..1000, k in 1.5..4.5f64) {
        let b = simulate_sv(&ArSpec::ar2(0.2).unwrap(), 300, NoiseKind::Gaussian, seed);
        let hb = vec![0.0; b.len()];
        let est = estimate_delta(&b.epsilon, &hb, k * population_sd(&b.epsilon), NoiseKind::Gaussian).unwrap();
        let grid = delta_grid();
        prop_assert!(grid.contains(&est.delta_hat));
    }

    #[test]
    fn delta_hat_is_scale_equivariant(seed in 0u64..1000, j in -4i32..4) {
        let b = simulate_sv(&ArSpec::ar2(0.3).unwrap(), 400, NoiseKind::Gaussian, seed);
        let h = h_proxy(&b.epsilon);
        let c = 2f64.powi(j);
        let lam = 3.0 * population_sd(&b.epsilon);
        let scaled: Vec<f64> = b.epsilon.iter().map(|e| c * e).collect();
        let shifted: Vec<f64> = h.iter().map(|v| v + c.ln()).collect();
        let a = estimate_delta(&b.epsilon, &h, lam, NoiseKind::Gaussian).unwrap();
        let s = estimate_delta(&scaled, &shifted, c * lam, NoiseKind::Gaussian).unwrap();
        prop_assert!((a.delta_hat - s.delta_hat).abs() <= 0.01 + 1e-12);
        prop_assert_eq!(a.exceedances, s.exceedances);
    }
}

#[test]
fn recovers_delta_with_known_conditional_mean() {
    let mut last = 0.0;
    for &d in &[0.15, 0.25, 0.35] {
        let spec = ArSpec::ar2(d).unwrap();
        let b = simulate_sv(&spec, 40_000, NoiseKind::Gaussian, 31);
        let h = b.h_true.as_ref().unwrap();
        let phi = spec.coefficients();
        let hb: Vec<f64> = (2..h.len()).map(|t| phi[0] * h[t - 1] + phi[1] * h[t - 2]).collect();
        let eps = &b.epsilon[2..];
        let est = estimate_delta(eps, &hb, 4.0 * population_sd(eps), NoiseKind::Gaussian).unwrap();
        assert!((est.delta_hat - d).abs() <= 0.08, "true {d}, estimated {}", est.delta_hat);
        assert!(est.delta_hat > last);
        last = est.delta_hat;
    }
}

#[test]
fn pc_lasso_predicts_a_linear_target() {
    let b = simulate_sv(&ArSpec::ar2(0.2).unwrap(), 800, NoiseKind::Gaussian, 3);
    let h = b.h_true.as_ref().unwrap();
    let x = lagged_design(&[h], 2).unwrap();
    let y: Vec<f64> = (2..h.len()).map(|t| 1.0 + 0.5 * h[t - 1] + 0.4 * h[t - 2]).collect();
    let m = fit_pc_lasso(&x, &y, &PcLassoConfig::default(), 4).unwrap();
    let pred = m.predict_rows(&x).unwrap();
    let err = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2, "max error {err}");
    let back = RegressionModel::from_text(&m.to_text()).unwrap();
    assert_eq!(back.predict_rows(&x).unwrap(), pred);
}
