//! One-step-ahead volatility and tail-probability forecasts, the threshold
//! classifier and out-of-sample evaluation.

use thiserror::Error;

use crate::model::{AsymptoticTail, ModelError, ModelParams, NoiseKind, TailEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("the conditional second moment diverges for delta = {0} (needs delta < 1/2)")]
    MomentDivergence(f64),
    #[error("series lengths differ: {0} vs {1}")]
    Length(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, ForecastError>;

/// Probability of a two-sided 3σ exceedance under a stationary Gaussian.
pub const GAUSSIAN_3SIGMA_RATE: f64 = 0.0027;

/// Alarm threshold: five times the Gaussian 3σ rate.
pub const CLASSIFIER_THRESHOLD: f64 = 0.0135;

/// Events are |ε_t| at or above this many training standard deviations.
pub const EVENT_MULTIPLIER: f64 = 3.0;

/// √E{ε_t² | F_{t−1}} = e^{H̄} / √(1 − 4Δ²).
pub fn forecast_volatility(h_bar_hat: f64, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) || delta >= 0.5 {
        return Err(ForecastError::MomentDivergence(delta));
    }
    Ok(h_bar_hat.exp() / (1.0 - 4.0 * delta * delta).sqrt())
}

/// Leading-order probability that |ε_t| reaches `threshold`, capped at one.
pub fn forecast_tail_prob(
    h_bar_hat: f64,
    delta: f64,
    threshold: f64,
    noise: NoiseKind,
) -> Result<TailEstimate> {
    let tail = AsymptoticTail::new(ModelParams::new(delta, noise)?, threshold)?;
    Ok(tail.estimate(h_bar_hat))
}

/// Raises an alarm when `prob` is at least [`CLASSIFIER_THRESHOLD`].
pub fn classify(prob: f64) -> bool {
    classify_at(prob, CLASSIFIER_THRESHOLD)
}

pub fn classify_at(prob: f64, threshold: f64) -> bool {
    prob >= threshold
}

/// Forecasts for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub t: usize,
    pub h_bar_hat: f64,
    pub sigma_bar_hat: f64,
    pub tail_prob_hat: f64,
    /// True when the raw tail value exceeded one.
    pub flag_capped: bool,
}

/// Builds forecast records for consecutive times starting at `t0`.
///
/// For Δ ≥ 1/2 the volatility forecast is reported as +∞.
pub fn forecast_series(
    h_bar_hat: &[f64],
    delta: f64,
    threshold: f64,
    noise: NoiseKind,
    t0: usize,
) -> Result<Vec<ForecastRecord>> {
    let tail = AsymptoticTail::new(ModelParams::new(delta, noise)?, threshold)?;
    h_bar_hat
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let est = tail.estimate(h);
            Ok(ForecastRecord {
                t: t0 + i,
                h_bar_hat: h,
                sigma_bar_hat: match forecast_volatility(h, delta) {
                    Ok(v) => v,
                    Err(ForecastError::MomentDivergence(_)) => f64::INFINITY,
                    Err(e) => return Err(e),
                },
                tail_prob_hat: est.probability,
                flag_capped: est.capped,
            })
        })
        .collect()
}

/// Counts of alarms against realized events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn from_pairs(alarms: &[bool], events: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&a, &e) in alarms.iter().zip(events) {
            match (a, e) {
                (true, true) => c.true_positive += 1,
                (false, true) => c.false_negative += 1,
                (true, false) => c.false_positive += 1,
                (false, false) => c.true_negative += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }

    /// Share of events that were flagged; `None` without events.
    pub fn sensitivity(&self) -> Option<f64> {
        let events = self.true_positive + self.false_negative;
        (events > 0).then(|| self.true_positive as f64 / events as f64)
    }

    /// Share of non-events left unflagged; `None` without non-events.
    pub fn specificity(&self) -> Option<f64> {
        let quiet = self.true_negative + self.false_positive;
        (quiet > 0).then(|| self.true_negative as f64 / quiet as f64)
    }
}

/// Out-of-sample scores of one backtest.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub delta_hat: f64,
    /// Pearson correlation between |ε_t| and the volatility forecast.
    pub vol_correlation: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub confusion: Confusion,
}

/// Pearson correlation; NaN when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    sxy / (sxx * syy).sqrt()
}

/// Scores forecasts against realized returns. Events are |ε_t| ≥ 3σ̂ with
/// σ̂ the training-sample standard deviation.
pub fn evaluate(
    epsilon_test: &[f64],
    forecasts: &[ForecastRecord],
    sigma_hat_train: f64,
    delta_hat: f64,
) -> Result<EvalReport> {
    evaluate_at(epsilon_test, forecasts, sigma_hat_train, delta_hat, CLASSIFIER_THRESHOLD)
}

pub fn evaluate_at(
    epsilon_test: &[f64],
    forecasts: &[ForecastRecord],
    sigma_hat_train: f64,
    delta_hat: f64,
    alarm_threshold: f64,
) -> Result<EvalReport> {
    if epsilon_test.len() != forecasts.len() {
        return Err(ForecastError::Length(epsilon_test.len(), forecasts.len()));
    }
    if !(sigma_hat_train > 0.0) {
        return Err(ForecastError::InvalidInput(format!(
            "training standard deviation must be positive, got {sigma_hat_train}"
        )));
    }
    let abs: Vec<f64> = epsilon_test.iter().map(|e| e.abs()).collect();
    // corr(|ε|, σ̄̂) = corr(|ε|, e^{H̄̂}) since σ̄̂ / e^{H̄̂} is constant.
    let sig: Vec<f64> = forecasts.iter().map(|f| f.h_bar_hat.exp()).collect();
    let events: Vec<bool> = abs
        .iter()
        .map(|&a| a >= EVENT_MULTIPLIER * sigma_hat_train)
        .collect();
    let alarms: Vec<bool> = forecasts
        .iter()
        .map(|f| classify_at(f.tail_prob_hat, alarm_threshold))
        .collect();
    let confusion = Confusion::from_pairs(&alarms, &events);
    Ok(EvalReport {
        delta_hat,
        vol_correlation: pearson(&abs, &sig),
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{conditional_moment, exceedance_exact, ConditionalState};

    #[test]
    fn volatility_values() {
        assert!((forecast_volatility(0.0, 0.25).unwrap() - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((forecast_volatility(0.7, 1e-9).unwrap() - 0.7f64.exp()).abs() < 1e-12);
        assert!(matches!(forecast_volatility(0.0, 0.5), Err(ForecastError::MomentDivergence(_))));
        for i in 0..50 {
            let h = -2.0 + 0.08 * i as f64;
            let d = 0.005 + 0.0098 * i as f64;
            let v = forecast_volatility(h, d).unwrap();
            let p = ModelParams::gaussian(d).unwrap();
            let m2 = conditional_moment(2, ConditionalState::new(h).unwrap(), p).unwrap().value();
            assert!((v * v - m2).abs() < 1e-12 * m2);
        }
    }

    #[test]
    fn tail_probability() {
        let t = forecast_tail_prob(0.0, 0.25, 4.0, NoiseKind::Gaussian).unwrap();
        assert!((t.probability - 0.005_859_375).abs() < 1e-15);
        let exact = exceedance_exact(4.0, ConditionalState::new(0.0).unwrap(), ModelParams::gaussian(0.25).unwrap())
            .unwrap()
            .probability;
        assert!((t.probability - exact).abs() / exact < 0.05);
        let low = forecast_tail_prob(-50.0, 0.25, 4.0, NoiseKind::Gaussian).unwrap();
        assert!(low.probability < 1e-80);
        let high = forecast_tail_prob(5.0, 0.25, 4.0, NoiseKind::Gaussian).unwrap();
        assert!(high.capped);
        assert_eq!(high.probability, 1.0);
    }

    #[test]
    fn classifier_boundary() {
        assert!(classify(0.0135));
        assert!(!classify(0.0134));
        assert!((CLASSIFIER_THRESHOLD - 5.0 * GAUSSIAN_3SIGMA_RATE).abs() < 1e-15);
    }

    #[test]
    fn gaussian_base_rate() {
        let rate = crate::specfun::erfc(3.0 / std::f64::consts::SQRT_2);
        assert!((rate - GAUSSIAN_3SIGMA_RATE).abs() < 5e-5);
    }

    fn record(sigma: f64, prob: f64) -> ForecastRecord {
        ForecastRecord {
            t: 0,
            h_bar_hat: sigma.ln(),
            sigma_bar_hat: sigma,
            tail_prob_hat: prob,
            flag_capped: false,
        }
    }

    #[test]
    fn oracle_and_silent_classifiers() {
        let eps = [0.1, 5.0, -0.2, -4.0, 0.3];
        let oracle: Vec<ForecastRecord> = eps
            .iter()
            .map(|e: &f64| record(e.abs() + 1.0, if e.abs() >= 3.0 { 1.0 } else { 0.0 }))
            .collect();
        let r = evaluate(&eps, &oracle, 1.0, 0.2).unwrap();
        assert_eq!(r.sensitivity, Some(1.0));
        assert_eq!(r.specificity, Some(1.0));
        assert!((r.vol_correlation - 1.0).abs() < 1e-12);
        assert_eq!(r.confusion.total(), eps.len());
        let silent: Vec<ForecastRecord> = eps.iter().map(|_| record(1.0, 0.0)).collect();
        let r = evaluate(&eps, &silent, 1.0, 0.2).unwrap();
        assert_eq!(r.sensitivity, Some(0.0));
        assert_eq!(r.specificity, Some(1.0));
        let r = evaluate_at(&eps, &silent, 1.0, 0.2, 0.0).unwrap();
        assert_eq!(r.sensitivity, Some(1.0));
        assert_eq!(r.specificity, Some(0.0));
    }

    #[test]
    fn missing_rates() {
        let eps = [0.1, 0.2];
        let f = vec![record(1.0, 0.5), record(2.0, 0.0)];
        let r = evaluate(&eps, &f, 1.0, 0.2).unwrap();
        assert_eq!(r.sensitivity, None);
        assert_eq!(r.specificity, Some(0.5));
        assert!(evaluate(&eps, &f[..1], 1.0, 0.2).is_err());
        assert!(evaluate(&eps, &f, 0.0, 0.2).is_err());
    }

    #[test]
    fn correlation_scale_invariance() {
        let x = [0.3, 1.2, 0.7, 2.5, 0.1];
        let y = [1.0, 2.0, 1.5, 2.2, 0.9];
        let y2: Vec<f64> = y.iter().map(|v| 7.5 * v).collect();
        assert!((pearson(&x, &y) - pearson(&x, &y2)).abs() < 1e-14);
    }
}
