use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EstimateError, Result};
use crate::series::format_f64;

/// Settings for [`fit_pc_lasso`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcLassoConfig {
    pub folds: usize,
    pub n_lambda: usize,
    /// Smallest λ on the path as a fraction of λ_max.
    pub lambda_min_ratio: f64,
    /// Coordinate descent stops once no coefficient moves by more than this.
    pub tolerance: f64,
    pub max_cycles: usize,
    /// Divide each principal-component score by its standard deviation
    /// before the penalized fit.
    pub unit_scores: bool,
}

impl Default for PcLassoConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            n_lambda: 100,
            lambda_min_ratio: 1e-4,
            tolerance: 1e-9,
            max_cycles: 100_000,
            unit_scores: false,
        }
    }
}

/// Fitted principal-component regression with an L1 penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Loadings, one column per retained component (features × components).
    pub pc_basis: DMatrix<f64>,
    /// Divisor applied to each component score (all ones unless unit scores
    /// were requested).
    pub score_scale: Vec<f64>,
    /// Variance of each retained component on the training data.
    pub component_variance: Vec<f64>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda_selected: f64,
}

impl RegressionModel {
    pub fn n_features(&self) -> usize {
        self.center.len()
    }

    /// Component scores of one design row.
    pub fn scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(EstimateError::Dimension {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        let z: Vec<f64> = row
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(x, (c, s))| (x - c) / s)
            .collect();
        Ok((0..self.pc_basis.ncols())
            .map(|j| {
                let col = self.pc_basis.column(j);
                z.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() / self.score_scale[j]
            })
            .collect())
    }

    /// Prediction intercept + Σ β_j φ_j for one design row.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        let s = self.scores(row)?;
        Ok(self.intercept + s.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn predict_rows(&self, design: &DMatrix<f64>) -> Result<Vec<f64>> {
        (0..design.nrows())
            .map(|i| {
                let row: Vec<f64> = design.row(i).iter().copied().collect();
                self.predict(&row)
            })
            .collect()
    }

    /// Flat `key = value` text; vectors are space separated and the basis is
    /// written row-major.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(" ");
        let basis: Vec<f64> = (0..self.pc_basis.nrows())
            .flat_map(|i| self.pc_basis.row(i).iter().copied().collect::<Vec<_>>())
            .collect();
        format!(
            "n_features = {}\nn_components = {}\ncenter = {}\nscale = {}\npc_basis = {}\nscore_scale = {}\ncomponent_variance = {}\nintercept = {}\ncoefficients = {}\nlambda_selected = {}\n",
            self.n_features(),
            self.pc_basis.ncols(),
            join(&self.center),
            join(&self.scale),
            join(&basis),
            join(&self.score_scale),
            join(&self.component_variance),
            format_f64(self.intercept),
            join(&self.coefficients),
            format_f64(self.lambda_selected),
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| EstimateError::Parse(format!("line {}: expected key = value", n + 1)))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .ok_or_else(|| EstimateError::Parse(format!("missing key '{k}'")))
        };
        let vector = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| EstimateError::Parse(format!("bad number '{s}' in '{k}'")))
                })
                .collect()
        };
        let count = |k: &str| -> Result<usize> {
            get(k)?
                .parse::<usize>()
                .map_err(|_| EstimateError::Parse(format!("bad count in '{k}'")))
        };
        let scalar = |k: &str| -> Result<f64> {
            let v = vector(k)?;
            match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(EstimateError::Parse(format!("'{k}' must hold one number"))),
            }
        };
        let p = count("n_features")?;
        let k = count("n_components")?;
        let basis = vector("pc_basis")?;
        if basis.len() != p * k {
            return Err(EstimateError::Parse(format!(
                "pc_basis has {} entries, expected {}",
                basis.len(),
                p * k
            )));
        }
        let model = Self {
            center: vector("center")?,
            scale: vector("scale")?,
            pc_basis: DMatrix::from_row_slice(p, k, &basis),
            score_scale: vector("score_scale")?,
            component_variance: vector("component_variance")?,
            intercept: scalar("intercept")?,
            coefficients: vector("coefficients")?,
            lambda_selected: scalar("lambda_selected")?,
        };
        for (name, len, want) in [
            ("center", model.center.len(), p),
            ("scale", model.scale.len(), p),
            ("score_scale", model.score_scale.len(), k),
            ("component_variance", model.component_variance.len(), k),
            ("coefficients", model.coefficients.len(), k),
        ] {
            if len != want {
                return Err(EstimateError::Parse(format!(
                    "'{name}' has {len} entries, expected {want}"
                )));
            }
        }
        Ok(model)
    }
}

/// Rows [x_{t−1}, …, x_{t−lags}] for every column x, one row per
/// t = lags, …, n−1, so row i lines up with observation i + lags.
pub fn lagged_design(columns: &[&[f64]], lags: usize) -> Result<DMatrix<f64>> {
    let n = columns.first().map(|c| c.len()).unwrap_or(0);
    if columns.iter().any(|c| c.len() != n) {
        return Err(EstimateError::InvalidInput("columns differ in length".into()));
    }
    if n <= lags {
        return Err(EstimateError::InvalidInput(format!(
            "series of length {n} is too short for {lags} lags"
        )));
    }
    let rows = n - lags;
    let width = columns.len() * lags;
    Ok(DMatrix::from_fn(rows, width, |i, j| {
        let col = j / lags;
        let lag = j % lags + 1;
        columns[col][i + lags - lag]
    }))
}

/// Coefficients along a λ path for a design with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub lambda: f64,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub cycles: usize,
}

struct Gram {
    g: DMatrix<f64>,
    c: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

fn gram(x: &DMatrix<f64>, rows: &[usize], y: &[f64]) -> Gram {
    let n = rows.len() as f64;
    let p = x.ncols();
    let x_mean: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|&i| x[(i, j)]).sum::<f64>() / n)
        .collect();
    let y_mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    let mut g = DMatrix::zeros(p, p);
    let mut c = vec![0.0; p];
    for &i in rows {
        let yi = y[i] - y_mean;
        for j in 0..p {
            let xj = x[(i, j)] - x_mean[j];
            c[j] += xj * yi;
            for l in j..p {
                g[(j, l)] += xj * (x[(i, l)] - x_mean[l]);
            }
        }
    }
    for j in 0..p {
        c[j] /= n;
        for l in j..p {
            g[(j, l)] /= n;
            g[(l, j)] = g[(j, l)];
        }
    }
    Gram { g, c, x_mean, y_mean }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on (1/2n)‖y − b₀ − Xβ‖² + λ‖β‖₁ with warm starts
/// along `lambdas`, using the Gram matrix of the centered rows.
fn lasso_path_gram(gm: &Gram, lambdas: &[f64], tol: f64, max_cycles: usize) -> Vec<LassoFit> {
    let p = gm.c.len();
    let mut beta = vec![0.0; p];
    // grad_j = c_j − Σ_l G_jl β_l, the correlation of x_j with the residual.
    let mut grad = gm.c.clone();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut cycles = 0;
        while cycles < max_cycles {
            cycles += 1;
            let mut max_change = 0.0f64;
            for j in 0..p {
                let a = gm.g[(j, j)];
                if a <= 0.0 {
                    continue;
                }
                let old = beta[j];
                let new = soft_threshold(grad[j] + a * old, lambda) / a;
                let delta = new - old;
                if delta != 0.0 {
                    beta[j] = new;
                    for l in 0..p {
                        grad[l] -= gm.g[(l, j)] * delta;
                    }
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < tol {
                break;
            }
        }
        if cycles >= max_cycles {
            log::warn!("coordinate descent stopped after {max_cycles} cycles at lambda {lambda}");
        }
        let intercept = gm.y_mean - gm.x_mean.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
        out.push(LassoFit {
            lambda,
            intercept,
            coefficients: beta.clone(),
            cycles,
        });
    }
    out
}

/// Lasso fits of `y` on the columns of `x` for each λ in `lambdas`, which is
/// expected in decreasing order.
pub fn fit_lasso_path(
    x: &DMatrix<f64>,
    y: &[f64],
    lambdas: &[f64],
    tol: f64,
    max_cycles: usize,
) -> Result<Vec<LassoFit>> {
    if x.nrows() != y.len() {
        return Err(EstimateError::Dimension {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(EstimateError::InvalidInput("no observations".into()));
    }
    let rows: Vec<usize> = (0..y.len()).collect();
    Ok(lasso_path_gram(&gram(x, &rows, y), lambdas, tol, max_cycles))
}

fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut idx = perm[start..start + size].to_vec();
        idx.sort_unstable();
        out.push(idx);
        start += size;
    }
    out
}

/// Principal-component regression with an L1 penalty chosen by k-fold
/// cross-validated mean absolute error.
///
/// Columns are centered and scaled by their training mean and population
/// standard deviation; all principal components with non-negligible
/// variance are kept.
pub fn fit_pc_lasso(
    design: &DMatrix<f64>,
    target: &[f64],
    config: &PcLassoConfig,
    seed: u64,
) -> Result<RegressionModel> {
    let (n, p) = design.shape();
    if n != target.len() {
        return Err(EstimateError::Dimension {
            expected: n,
            found: target.len(),
        });
    }
    if config.folds < 2 || n < config.folds {
        return Err(EstimateError::InvalidInput(format!(
            "{n} observations cannot be split into {} folds",
            config.folds
        )));
    }
    if design.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(EstimateError::InvalidInput("design or target has non-finite values".into()));
    }
    let nf = n as f64;
    let center: Vec<f64> = (0..p).map(|j| design.column(j).sum() / nf).collect();
    let scale: Vec<f64> = (0..p)
        .map(|j| {
            let sd = (design.column(j).iter().map(|v| (v - center[j]).powi(2)).sum::<f64>() / nf).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let z = DMatrix::from_fn(n, p, |i, j| (design[(i, j)] - center[j]) / scale[j]);
    let cov = z.transpose() * &z / nf;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&j| eig.eigenvalues[j] > 1e-12 * top.max(f64::MIN_POSITIVE))
        .collect();
    if keep.is_empty() {
        return Err(EstimateError::Degenerate("design has no variance".into()));
    }
    if keep.len() < p {
        log::warn!(
            "dropping {} principal components with zero variance",
            p - keep.len()
        );
    }
    let k = keep.len();
    let mut basis = DMatrix::zeros(p, k);
    for (c, &j) in keep.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(j).into_owned();
        // Deterministic orientation: largest-magnitude loading positive.
        let (imax, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty");
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        basis.set_column(c, &v);
    }
    let component_variance: Vec<f64> = keep.iter().map(|&j| eig.eigenvalues[j]).collect();
    let score_scale: Vec<f64> = if config.unit_scores {
        component_variance.iter().map(|v| v.sqrt()).collect()
    } else {
        vec![1.0; k]
    };
    let mut scores = &z * &basis;
    for j in 0..k {
        scores.column_mut(j).scale_mut(1.0 / score_scale[j]);
    }

    let all: Vec<usize> = (0..n).collect();
    let full = gram(&scores, &all, target);
    let lambda_max = full.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let lambdas: Vec<f64> = if lambda_max > 0.0 {
        let steps = config.n_lambda.max(2) - 1;
        (0..config.n_lambda.max(1))
            .map(|i| lambda_max * config.lambda_min_ratio.powf(i as f64 / steps as f64))
            .collect()
    } else {
        vec![0.0]
    };

    let folds = fold_assignment(n, config.folds, seed);
    let mut cv_error = vec![0.0; lambdas.len()];
    let mut in_fold = vec![usize::MAX; n];
    for (f, idx) in folds.iter().enumerate() {
        for &i in idx {
            in_fold[i] = f;
        }
    }
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = (0..n).filter(|&i| in_fold[i] != f).collect();
        let gm = gram(&scores, &train, target);
        let path = lasso_path_gram(&gm, &lambdas, config.tolerance, config.max_cycles);
        for (e, fit) in cv_error.iter_mut().zip(&path) {
            for &i in test {
                let pred = fit.intercept
                    + (0..k).map(|j| scores[(i, j)] * fit.coefficients[j]).sum::<f64>();
                *e += (target[i] - pred).abs();
            }
        }
    }
    let best = cv_error
        .iter()
        .enumerate()
        .fold(0, |b, (i, e)| if *e < cv_error[b] { i } else { b });
    let path = lasso_path_gram(&full, &lambdas[..=best], config.tolerance, config.max_cycles);
    let fit = path.last().expect("non-empty path");
    Ok(RegressionModel {
        center,
        scale,
        pc_basis: basis,
        score_scale,
        component_variance,
        intercept: fit.intercept,
        coefficients: fit.coefficients.clone(),
        lambda_selected: fit.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn toy(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = (0..n)
            .map(|i| 1.0 + 2.0 * x[(i, 0)] - x[(i, 2)] + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (x, y)
    }

    #[test]
    fn full_shrinkage_gives_mean() {
        let (x, y) = toy(200, 1);
        let fit = &fit_lasso_path(&x, &y, &[1e6], 1e-12, 1000).unwrap()[0];
        assert!(fit.coefficients.iter().all(|&b| b == 0.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((fit.intercept - mean).abs() < 1e-12);
    }

    #[test]
    fn zero_penalty_is_least_squares() {
        let (x, y) = toy(200, 2);
        let fit = &fit_lasso_path(&x, &y, &[0.0], 1e-13, 100_000).unwrap()[0];
        let mut xa = DMatrix::from_element(200, 6, 1.0);
        xa.view_mut((0, 1), (200, 5)).copy_from(&x);
        let ols = (xa.transpose() * &xa)
            .try_inverse()
            .unwrap()
            * xa.transpose()
            * DVector::from_vec(y.clone());
        assert!((fit.intercept - ols[0]).abs() < 1e-9);
        for j in 0..5 {
            assert!((fit.coefficients[j] - ols[j + 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn kkt_conditions() {
        let (x, y) = toy(300, 3);
        let n = y.len() as f64;
        for lambda in [0.01, 0.1, 0.5] {
            let fit = &fit_lasso_path(&x, &y, &[lambda], 1e-12, 100_000).unwrap()[0];
            let resid: Vec<f64> = (0..y.len())
                .map(|i| {
                    y[i] - fit.intercept
                        - (0..5).map(|j| x[(i, j)] * fit.coefficients[j]).sum::<f64>()
                })
                .collect();
            for j in 0..5 {
                let g = (0..y.len()).map(|i| x[(i, j)] * resid[i]).sum::<f64>() / n;
                if fit.coefficients[j] != 0.0 {
                    assert!((g.abs() - lambda).abs() < 1e-8);
                    assert_eq!(g.signum(), fit.coefficients[j].signum());
                } else {
                    assert!(g.abs() <= lambda + 1e-8);
                }
            }
        }
    }

    #[test]
    fn pc_model_properties() {
        let (x, y) = toy(400, 4);
        let m = fit_pc_lasso(&x, &y, &PcLassoConfig::default(), 9).unwrap();
        let vtv = m.pc_basis.transpose() * &m.pc_basis;
        assert!((vtv - DMatrix::identity(5, 5)).abs().max() < 1e-10);
        assert!(m.component_variance.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(m.coefficients.len(), 5);
        // The centroid row predicts close to the target mean.
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((m.predict(&m.center).unwrap() - mean).abs() < 1e-2);
        assert!(m.predict(&[0.0; 4]).is_err());
        let again = fit_pc_lasso(&x, &y, &PcLassoConfig::default(), 9).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn text_round_trip() {
        let (x, y) = toy(100, 5);
        let m = fit_pc_lasso(&x, &y, &PcLassoConfig::default(), 1).unwrap();
        let back = RegressionModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(RegressionModel::from_text("n_features = 2\n").is_err());
    }

    #[test]
    fn constant_column_is_dropped() {
        let (mut x, y) = toy(100, 6);
        x.column_mut(3).fill(2.0);
        let m = fit_pc_lasso(&x, &y, &PcLassoConfig::default(), 1).unwrap();
        assert_eq!(m.pc_basis.ncols(), 4);
        assert!(m.predict(&[0.0, 0.0, 0.0, 2.0, 0.0]).unwrap().is_finite());
    }

    #[test]
    fn lag_layout() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [10.0, 20.0, 30.0, 40.0];
        let d = lagged_design(&[&a, &b], 2).unwrap();
        assert_eq!(d.shape(), (2, 4));
        assert_eq!(d.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 1.0, 20.0, 10.0]);
        assert_eq!(d.row(1).iter().copied().collect::<Vec<_>>(), vec![3.0, 2.0, 30.0, 20.0]);
    }

    #[test]
    fn folds_partition() {
        let f = fold_assignment(23, 10, 4);
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert_eq!(f[0].len(), 3);
        assert_eq!(f[9].len(), 2);
    }
}
