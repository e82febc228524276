//! Bayesian ridge regression fitted by evidence maximization.
//!
//! Inputs are min-max scaled with statistics captured at fit time. The
//! intercept is left unpenalized, which is realized by centering the scaled
//! design matrix and the targets; the weight posterior is then
//! `N(w, S)` with `S = (alpha I + beta XᵀX)⁻¹` over the centered design.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("row {row}: target {value} is outside [0, 1]")]
    TargetOutOfRange { row: usize, value: f64 },
    #[error("row {row}: non-finite feature")]
    NonFiniteFeature { row: usize },
    #[error("input has {found} features, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("hyperparameter estimate diverged (alpha={alpha}, beta={beta})")]
    Diverged { alpha: f64, beta: f64 },
}

/// Observed (encoded configuration, effectiveness) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, SurrogateError> {
        Self::build(features, targets, true)
    }

    /// Like [`TrainingSet::new`] but without the `[0, 1]` target check, for
    /// general regression use.
    pub fn unbounded(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, SurrogateError> {
        Self::build(features, targets, false)
    }

    fn build(
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
        bounded: bool,
    ) -> Result<Self, SurrogateError> {
        let n = features.len().min(targets.len());
        if n < 2 || features.len() != targets.len() {
            return Err(SurrogateError::TooFewRows(n));
        }
        let p = features[0].len();
        for (row, (x, y)) in features.iter().zip(&targets).enumerate() {
            if x.len() != p {
                return Err(SurrogateError::RaggedRows {
                    row,
                    expected: p,
                    found: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SurrogateError::NonFiniteFeature { row });
            }
            if !y.is_finite() || (bounded && !(0.0..=1.0).contains(y)) {
                return Err(SurrogateError::TargetOutOfRange { row, value: *y });
            }
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub alpha_init: f64,
    pub beta_init: f64,
    /// When false, alpha and beta stay at their initial values.
    pub update_hyperparameters: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            alpha_init: 1.0,
            beta_init: 1.0,
            update_hyperparameters: true,
        }
    }
}

impl FitOptions {
    pub fn frozen(alpha: f64, beta: f64) -> Self {
        Self {
            alpha_init: alpha,
            beta_init: beta,
            update_hyperparameters: false,
            ..Self::default()
        }
    }
}

// Bounds keep alpha/beta strictly positive and finite on degenerate data
// (constant targets, exact fits).
const HYPER_MIN: f64 = 1e-12;
const HYPER_MAX: f64 = 1e12;

/// A fitted regressor. Immutable and cheap to share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    /// Weights over min-max scaled features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub beta: f64,
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    /// Mean of the scaled training features.
    pub feature_mean: Vec<f64>,
    /// Posterior covariance of `weights`.
    pub posterior_covariance: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Checksum of the configuration space the features were encoded in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_checksum: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

fn scale(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        0.0
    }
}

pub fn fit(data: &TrainingSet, opts: &FitOptions) -> Result<SurrogateModel, SurrogateError> {
    let n = data.len();
    let p = data.num_features();

    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for row in &data.features {
        for j in 0..p {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }

    let x = DMatrix::from_fn(n, p, |r, c| scale(data.features[r][c], lo[c], hi[c]));
    let y = DVector::from_column_slice(&data.targets);
    let x_mean: DVector<f64> = DVector::from_fn(p, |j, _| x.column(j).mean());
    let y_mean = y.mean();
    let mut xc = x.clone();
    for j in 0..p {
        xc.column_mut(j).add_scalar_mut(-x_mean[j]);
    }
    let yc = y.add_scalar(-y_mean);

    let gram = xc.transpose() * &xc;
    let eig = SymmetricEigen::new(gram);
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = lambda_max * 1e-12;
    // eigenvalues below the cutoff belong to the null space of the design
    let lambdas: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > cutoff { l } else { 0.0 })
        .collect();
    let v = &eig.eigenvectors;
    let z = v.transpose() * (xc.transpose() * &yc);

    let solve = |alpha: f64, beta: f64| -> (DVector<f64>, f64) {
        let ratio = alpha / beta;
        let coef = DVector::from_fn(p, |j, _| {
            if lambdas[j] > 0.0 {
                z[j] / (lambdas[j] + ratio)
            } else {
                0.0
            }
        });
        let gamma = lambdas.iter().map(|&l| l / (l + ratio)).sum::<f64>();
        (v * coef, gamma)
    };

    let mut alpha = opts.alpha_init;
    let mut beta = opts.beta_init;
    let (mut w, mut gamma) = solve(alpha, beta);
    let mut iterations = 0;
    let mut converged = !opts.update_hyperparameters;

    if opts.update_hyperparameters {
        while iterations < opts.max_iter {
            iterations += 1;
            let rss = (&yc - &xc * &w).norm_squared();
            let ww = w.norm_squared();
            let new_alpha = if ww > 0.0 { gamma / ww } else { HYPER_MAX };
            let new_beta = if rss > 0.0 {
                (n as f64 - gamma) / rss
            } else {
                HYPER_MAX
            };
            if !new_alpha.is_finite() || !new_beta.is_finite() {
                return Err(SurrogateError::Diverged {
                    alpha: new_alpha,
                    beta: new_beta,
                });
            }
            let new_alpha = new_alpha.clamp(HYPER_MIN, HYPER_MAX);
            let new_beta = new_beta.clamp(HYPER_MIN, HYPER_MAX);
            let done = ((new_alpha - alpha) / alpha).abs() < opts.tol
                && ((new_beta - beta) / beta).abs() < opts.tol;
            alpha = new_alpha;
            beta = new_beta;
            (w, gamma) = solve(alpha, beta);
            if done {
                converged = true;
                break;
            }
        }
    }

    // S = V diag(1 / (alpha + beta λ)) Vᵀ
    let d = DVector::from_fn(p, |j, _| 1.0 / (alpha + beta * lambdas[j]));
    let cov = v * DMatrix::from_diagonal(&d) * v.transpose();

    Ok(SurrogateModel {
        intercept: y_mean - w.dot(&x_mean),
        weights: w.iter().copied().collect(),
        alpha,
        beta,
        feature_min: lo,
        feature_max: hi,
        feature_mean: x_mean.iter().copied().collect(),
        posterior_covariance: (0..p).map(|r| cov.row(r).iter().copied().collect()).collect(),
        iterations,
        converged,
        space_checksum: None,
    })
}

impl SurrogateModel {
    pub fn num_features(&self) -> usize {
        self.weights.len()
    }

    fn scaled(&self, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        if x.len() != self.num_features() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.num_features(),
                found: x.len(),
            });
        }
        Ok(x
            .iter()
            .enumerate()
            .map(|(j, &v)| scale(v, self.feature_min[j], self.feature_max[j]))
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, SurrogateError> {
        let xs = self.scaled(x)?;
        let mean = self.intercept + xs.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        let dx: Vec<f64> = xs.iter().zip(&self.feature_mean).map(|(a, m)| a - m).collect();
        let quad: f64 = self
            .posterior_covariance
            .iter()
            .zip(&dx)
            .map(|(row, di)| di * row.iter().zip(&dx).map(|(s, dj)| s * dj).sum::<f64>())
            .sum();
        Ok(Prediction {
            mean,
            variance: 1.0 / self.beta + quad,
        })
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        self.predict(x).map(|p| p.mean)
    }

    /// Coefficient of determination on a data set.
    pub fn r_squared(&self, data: &TrainingSet) -> Result<f64, SurrogateError> {
        let mean = data.targets.iter().sum::<f64>() / data.len() as f64;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for (x, y) in data.features.iter().zip(&data.targets) {
            let f = self.predict_mean(x)?;
            ss_res += (y - f).powi(2);
            ss_tot += (y - mean).powi(2);
        }
        Ok(if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_data() -> TrainingSet {
        let xs: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|k| 2.0 * k as f64 + 1.0).collect();
        TrainingSet::unbounded(xs, ys).unwrap()
    }

    /// Augmented-column ridge solve with the intercept column unpenalized,
    /// done by a direct LU solve on scaled features.
    fn closed_form_ridge(data: &TrainingSet, ratio: f64) -> (Vec<f64>, f64) {
        let n = data.len();
        let p = data.num_features();
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        for r in &data.features {
            for j in 0..p {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        let a = DMatrix::from_fn(n, p + 1, |r, c| {
            if c == p {
                1.0
            } else if hi[c] > lo[c] {
                (data.features[r][c] - lo[c]) / (hi[c] - lo[c])
            } else {
                0.0
            }
        });
        let mut penalty = DMatrix::identity(p + 1, p + 1) * ratio;
        penalty[(p, p)] = 0.0;
        let lhs = a.transpose() * &a + penalty;
        let rhs = a.transpose() * DVector::from_column_slice(&data.targets);
        let sol = lhs.lu().solve(&rhs).unwrap();
        (sol.rows(0, p).iter().copied().collect(), sol[p])
    }

    fn random_data(seed: u64, n: usize, p: usize) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 0.3 + 0.05 * x.iter().sum::<f64>() + rng.random_range(-0.05..0.05))
            .collect();
        TrainingSet::unbounded(xs, ys).unwrap()
    }

    #[test]
    fn recovers_noise_free_line() {
        let data = line_data();
        let m = fit(&data, &FitOptions::default()).unwrap();
        for k in 0..10 {
            let pred = m.predict_mean(&[k as f64]).unwrap();
            assert!((pred - (2.0 * k as f64 + 1.0)).abs() < 1e-6, "{k}: {pred}");
        }
        assert!((m.predict_mean(&[4.5]).unwrap() - 10.0).abs() < 1e-6);
        assert!(m.alpha > 0.0 && m.beta > 0.0);
    }

    #[test]
    fn frozen_hyperparameters_match_closed_form() {
        for seed in 0..20 {
            let data = random_data(seed, 15, 4);
            let m = fit(&data, &FitOptions::frozen(1.0, 1.0)).unwrap();
            let (w, b) = closed_form_ridge(&data, 1.0);
            for (a, e) in m.weights.iter().zip(&w) {
                assert!((a - e).abs() < 1e-8, "seed {seed}: {a} vs {e}");
            }
            assert!((m.intercept - b).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_targets_predict_constant() {
        let xs: Vec<Vec<f64>> = (0..6).map(|k| vec![k as f64, (k * k) as f64]).collect();
        let data = TrainingSet::new(xs, vec![0.7; 6]).unwrap();
        let m = fit(&data, &FitOptions::default()).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-12));
        for x in [[0.0, 0.0], [3.0, 100.0], [-10.0, 5.0]] {
            assert!((m.predict_mean(&x).unwrap() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn two_rows_is_legal() {
        let data = TrainingSet::new(vec![vec![0.0, 1.0], vec![1.0, 3.0]], vec![0.4, 0.6]).unwrap();
        let m = fit(&data, &FitOptions::default()).unwrap();
        assert!(m.alpha > 0.0 && m.beta > 0.0);
        assert!(m.predict_mean(&[0.5, 2.0]).unwrap().is_finite());
    }

    #[test]
    fn variance_grows_away_from_data() {
        let data = random_data(3, 20, 2);
        let m = fit(&data, &FitOptions::default()).unwrap();
        let near = m.predict(&data.features[0]).unwrap().variance;
        let far = m.predict(&[100.0, -100.0]).unwrap().variance;
        assert!(near <= far);
        assert!(near >= 1.0 / m.beta);
    }

    #[test]
    fn input_validation() {
        assert_eq!(
            TrainingSet::new(vec![vec![1.0]], vec![0.5]),
            Err(SurrogateError::TooFewRows(1))
        );
        assert!(matches!(
            TrainingSet::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.5, 0.5]),
            Err(SurrogateError::RaggedRows { row: 1, .. })
        ));
        assert!(matches!(
            TrainingSet::new(vec![vec![1.0], vec![2.0]], vec![0.5, 1.5]),
            Err(SurrogateError::TargetOutOfRange { row: 1, .. })
        ));
        let m = fit(&line_data(), &FitOptions::default()).unwrap();
        assert_eq!(
            m.predict(&[1.0, 2.0]),
            Err(SurrogateError::DimensionMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn model_file_round_trip() {
        let m = fit(&random_data(9, 12, 3), &FitOptions::default()).unwrap();
        let back = SurrogateModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn row_order_does_not_matter(seed in any::<u64>(), shift in 1usize..19) {
            let data = random_data(seed, 20, 5);
            let m = fit(&data, &FitOptions::default()).unwrap();
            let mut xs = data.features.clone();
            let mut ys = data.targets.clone();
            xs.rotate_left(shift);
            ys.rotate_left(shift);
            xs.swap(0, 7);
            ys.swap(0, 7);
            let m2 = fit(&TrainingSet::unbounded(xs, ys).unwrap(), &FitOptions::default()).unwrap();
            for (a, b) in m.weights.iter().zip(&m2.weights) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn mean_is_affine(seed in any::<u64>(), t in 0.0f64..1.0) {
            let data = random_data(seed, 20, 3);
            let m = fit(&data, &FitOptions::default()).unwrap();
            let a = &data.features[0];
            let b = &data.features[1];
            let mix: Vec<f64> = a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let lhs = m.predict_mean(&mix).unwrap();
            let rhs = t * m.predict_mean(a).unwrap() + (1.0 - t) * m.predict_mean(b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
