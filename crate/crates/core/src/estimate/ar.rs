use super::{EstimateError, Result};

/// Autoregression fitted by Yule–Walker, written around the sample mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub mean: f64,
    /// φ_1, …, φ_p (lag 1 first).
    pub coefficients: Vec<f64>,
    /// Reflection coefficients from the Levinson–Durbin recursion.
    pub reflection: Vec<f64>,
    pub noise_variance: f64,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// One-step prediction from the trailing values of `history`.
    pub fn predict_next(&self, history: &[f64]) -> Result<f64> {
        let p = self.order();
        if history.len() < p {
            return Err(EstimateError::Dimension {
                expected: p,
                found: history.len(),
            });
        }
        let n = history.len();
        Ok(self.mean
            + self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c * (history[n - 1 - i] - self.mean))
                .sum::<f64>())
    }

    /// In-sample one-step predictions for t = p, …, n−1 (length n − p).
    pub fn fitted(&self, series: &[f64]) -> Vec<f64> {
        let p = self.order();
        (p..series.len())
            .map(|t| self.predict_next(&series[..t]).expect("enough history"))
            .collect()
    }
}

/// Fits an AR(p) model by solving the Yule–Walker equations with the
/// Levinson–Durbin recursion on biased autocovariances of the demeaned series.
pub fn yule_walker_ar(series: &[f64], order: usize) -> Result<ArModel> {
    let n = series.len();
    if n <= order {
        return Err(EstimateError::InvalidInput(format!(
            "series of length {n} is too short for order {order}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let acov: Vec<f64> = (0..=order)
        .map(|k| (k..n).map(|t| y[t] * y[t - k]).sum::<f64>() / n as f64)
        .collect();
    if !(acov[0] > 0.0) {
        return Err(EstimateError::Degenerate("series has zero variance".into()));
    }
    let mut phi: Vec<f64> = Vec::with_capacity(order);
    let mut reflection = Vec::with_capacity(order);
    let mut err = acov[0];
    for m in 1..=order {
        let acc: f64 = (1..m).map(|i| phi[i - 1] * acov[m - i]).sum();
        let k = (acov[m] - acc) / err;
        let prev = phi.clone();
        for i in 1..m {
            phi[i - 1] = prev[i - 1] - k * prev[m - i - 1];
        }
        phi.push(k);
        reflection.push(k);
        err *= 1.0 - k * k;
    }
    Ok(ArModel {
        mean,
        coefficients: phi,
        reflection,
        noise_variance: err,
    })
}
