use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{robust_cholesky, symmetrize};

/// Trials by features, with binary labels (true = positive class).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub x: DMatrix<f64>,
    pub y: Vec<bool>,
}

impl LabeledFeatures {
    pub fn new(x: DMatrix<f64>, y: Vec<bool>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite feature".into()));
        }
        Ok(Self { x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<bool>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("features", "ragged feature rows"));
        }
        Self::new(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]), y)
    }

    pub fn n_trials(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let x = self.x.select_rows(idx);
        Self {
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub w: DVector<f64>,
    pub b: f64,
    pub shrinkage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaOptions {
    /// Adds `ln(n_pos / n_neg)` to the bias.
    pub prior_bias: bool,
}

impl Default for LdaOptions {
    fn default() -> Self {
        Self { prior_bias: true }
    }
}

impl LdaModel {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::Dimension {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        Ok(self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b)
    }

    pub fn score_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.w.len() {
            return Err(Error::Dimension {
                expected: self.w.len(),
                got: x.ncols(),
            });
        }
        Ok((x * &self.w).iter().map(|s| s + self.b).collect())
    }
}

/// Ledoit-Wolf shrinkage toward `mu * I`, `mu = trace(S) / p`.
///
/// Returns the shrunk covariance and the intensity in `[0, 1]`. Columns are
/// centered first, and `S` uses `1/n` normalization.
pub fn ledoit_wolf_cov(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::InsufficientData("shrinkage covariance needs at least 2 trials".into()));
    }
    let means = x.row_mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= &means;
    }
    let s = symmetrize(&(xc.transpose() * &xc / n as f64));
    let mu = s.trace() / p as f64;
    let target_dist = {
        let mut d = s.clone();
        for i in 0..p {
            d[(i, i)] -= mu;
        }
        d.norm_squared()
    };
    if target_dist <= f64::EPSILON * mu.abs().max(1.0) * mu.abs().max(1.0) {
        return Ok((s, 0.0));
    }
    // mean squared distance of the rank-one terms from S:
    // (1/n^2) sum_k ||x_k x_k' - S||^2 = (1/n^2)(sum_k |x_k|^4 - n ||S||^2)
    let fourth: f64 = xc.row_iter().map(|r| r.norm_squared().powi(2)).sum();
    let b_bar = ((fourth - n as f64 * s.norm_squared()) / (n as f64 * n as f64)).max(0.0);
    let lambda = (b_bar.min(target_dist) / target_dist).clamp(0.0, 1.0);
    let mut shrunk = s * (1.0 - lambda);
    for i in 0..p {
        shrunk[(i, i)] += lambda * mu;
    }
    Ok((shrunk, lambda))
}

/// Shrinkage LDA. The covariance is the Ledoit-Wolf estimate of the pooled
/// within-class scatter (each class centered on its own mean).
pub fn lda_train(data: &LabeledFeatures, opts: LdaOptions) -> Result<LdaModel> {
    let n_pos = data.y.iter().filter(|&&l| l).count();
    let n_neg = data.y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData("lda needs both classes".into()));
    }
    let p = data.n_features();
    let mut mean_pos = DVector::zeros(p);
    let mut mean_neg = DVector::zeros(p);
    for (row, &label) in data.x.row_iter().zip(&data.y) {
        if label {
            mean_pos += row.transpose();
        } else {
            mean_neg += row.transpose();
        }
    }
    mean_pos /= n_pos as f64;
    mean_neg /= n_neg as f64;

    let mut centered = data.x.clone();
    for (mut row, &label) in centered.row_iter_mut().zip(&data.y) {
        let m = if label { &mean_pos } else { &mean_neg };
        row -= m.transpose();
    }
    let (sigma, shrinkage) = ledoit_wolf_cov(&centered)?;
    let diff = &mean_pos - &mean_neg;
    let w = if diff.iter().all(|v| *v == 0.0) {
        DVector::zeros(p)
    } else if sigma.trace() <= 0.0 {
        // all features constant within class: fall back to the mean difference
        diff.clone()
    } else {
        robust_cholesky(&sigma)?.solve(&diff)
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite LDA weights".into()));
    }
    let mut b = -w.dot(&(&mean_pos + &mean_neg)) / 2.0;
    if opts.prior_bias {
        b += (n_pos as f64 / n_neg as f64).ln();
    }
    Ok(LdaModel { w, b, shrinkage })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    /// Textbook intensity: b^2 / d^2 with b^2 = mean_k ||x_k x_k' - S||^2 / n,
    /// evaluated term by term.
    fn lw_oracle(x: &DMatrix<f64>) -> f64 {
        let (n, p) = x.shape();
        let mean = x.row_mean();
        let rows: Vec<DVector<f64>> = x.row_iter().map(|r| (r - &mean).transpose()).collect();
        let mut s = DMatrix::zeros(p, p);
        for r in &rows {
            s += r * r.transpose();
        }
        s /= n as f64;
        let mu = s.trace() / p as f64;
        let d2 = (&s - DMatrix::identity(p, p) * mu).norm_squared();
        let b2: f64 = rows.iter().map(|r| (r * r.transpose() - &s).norm_squared()).sum::<f64>()
            / (n * n) as f64;
        b2.min(d2) / d2
    }

    #[test]
    fn sample_already_spherical() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0]);
        let (sigma, _) = ledoit_wolf_cov(&x).unwrap();
        assert!((sigma - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
        assert!(ledoit_wolf_cov(&DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn few_trials_shrink_heavily() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(4, 10, |_, _| normal(&mut rng));
        let (_, lambda) = ledoit_wolf_cov(&x).unwrap();
        assert!((lambda - lw_oracle(&x)).abs() < 1e-12);
        assert!(lambda >= 0.5, "{lambda}");
    }

    #[test]
    fn two_centered_trials_have_no_spread_estimate() {
        // x1 - mean = -(x2 - mean): both rank-one terms equal S
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = DMatrix::from_fn(2, 10, |_, _| normal(&mut rng));
        let (_, lambda) = ledoit_wolf_cov(&x).unwrap();
        assert!(lambda.abs() < 1e-12);
        assert!(lw_oracle(&x).abs() < 1e-12);
    }

    #[test]
    fn many_trials_recover_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sd = [3.0, 2.0, 1.0, 0.5];
        let x = DMatrix::from_fn(10_000, 4, |_, j| normal(&mut rng) * sd[j]);
        let (sigma, lambda) = ledoit_wolf_cov(&x).unwrap();
        assert!(lambda <= 0.05);
        assert!((lambda - lw_oracle(&x)).abs() < 1e-9);
        for j in 0..4 {
            let truth = sd[j] * sd[j];
            assert!((sigma[(j, j)] - truth).abs() <= 0.05 * truth, "{j}: {}", sigma[(j, j)]);
        }
    }

    #[test]
    fn one_dimensional_boundary() {
        let x = DMatrix::from_column_slice(6, 1, &[-1.0, -1.1, -0.9, 1.0, 1.1, 0.9]);
        let y = vec![false, false, false, true, true, true];
        let m = lda_train(&LabeledFeatures::new(x, y.clone()).unwrap(), LdaOptions::default()).unwrap();
        assert!(m.score(&[0.0]).unwrap().abs() < 1e-12);
        for (v, l) in [-1.0, -1.1, -0.9, 1.0, 1.1, 0.9].iter().zip(&y) {
            assert_eq!(m.score(&[*v]).unwrap() > 0.0, *l);
        }
    }

    #[test]
    fn equal_means_give_zero_weights() {
        let x = DMatrix::from_row_slice(6, 2, &[1.0, 2.0, -1.0, 0.0, 0.0, -2.0, 1.0, 2.0, -1.0, 0.0, 0.0, -2.0]);
        let y = vec![true, true, true, false, false, false];
        let m = lda_train(&LabeledFeatures::new(x, y).unwrap(), LdaOptions::default()).unwrap();
        assert!(m.w.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn prior_term_only_when_means_equal() {
        let x = DMatrix::from_row_slice(5, 1, &[1.0, -1.0, 1.0, -1.0, 0.0]);
        // positives {1, -1} mean 0; negatives {1, -1, 0} mean 0
        let y = vec![true, true, false, false, false];
        let m = lda_train(&LabeledFeatures::new(x, y).unwrap(), LdaOptions::default()).unwrap();
        let prior = (2.0f64 / 3.0).ln();
        for v in [-5.0, 0.0, 3.0] {
            assert!((m.score(&[v]).unwrap() - prior).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_analytic_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        // covariance [[2, 0.8], [0.8, 1]] via Cholesky factor
        let l = [[2f64.sqrt(), 0.0], [0.8 / 2f64.sqrt(), (1.0 - 0.32f64).sqrt()]];
        let mu_pos = [1.0, 0.5];
        let n = 10_000;
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let (z1, z2) = (normal(&mut rng), normal(&mut rng));
            let pos = i % 2 == 0;
            let m = if pos { mu_pos } else { [0.0, 0.0] };
            rows.push(vec![m[0] + l[0][0] * z1, m[1] + l[1][0] * z1 + l[1][1] * z2]);
            y.push(pos);
        }
        let m = lda_train(&LabeledFeatures::from_rows(&rows, y).unwrap(), LdaOptions::default()).unwrap();
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
        let truth = sigma.try_inverse().unwrap() * DVector::from_column_slice(&mu_pos);
        let cos = m.w.dot(&truth) / (m.w.norm() * truth.norm());
        assert!(cos.acos().to_degrees() < 2.0, "angle {}", cos.acos().to_degrees());
    }

    #[test]
    fn score_arithmetic_and_dimension_check() {
        let m = LdaModel {
            w: DVector::from_column_slice(&[1.0, -1.0]),
            b: 0.5,
            shrinkage: 0.0,
        };
        assert_eq!(m.score(&[2.0, 1.0]).unwrap(), 1.5);
        assert!(m.score(&[1.0]).is_err());
        let (x, a) = ([0.3, -2.0], 3.7);
        let s0 = m.score(&[0.0, 0.0]).unwrap();
        let lhs = m.score(&[a * x[0], a * x[1]]).unwrap() - s0;
        assert!((lhs - a * (m.score(&x).unwrap() - s0)).abs() < 1e-12);
    }

    #[test]
    fn midpoint_scores_zero_with_equal_priors() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let y = vec![true, true, false, false];
        let m = lda_train(&LabeledFeatures::new(x, y).unwrap(), LdaOptions::default()).unwrap();
        assert!(m.score(&[0.5, 0.5]).unwrap().abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn feature_scaling_keeps_decisions(a in 0.01f64..100.0, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 40;
            let x = DMatrix::from_fn(n, 3, |i, j| normal(&mut rng) + if i % 2 == 0 { j as f64 * 0.5 } else { 0.0 });
            let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
            let opts = LdaOptions { prior_bias: false };
            let m1 = lda_train(&LabeledFeatures::new(x.clone(), y.clone()).unwrap(), opts).unwrap();
            let m2 = lda_train(&LabeledFeatures::new(&x * a, y).unwrap(), opts).unwrap();
            proptest::prop_assert!((&m1.w / a - &m2.w).norm() <= 1e-8 * m2.w.norm());
            let s1 = m1.score_rows(&x).unwrap();
            let s2 = m2.score_rows(&(&x * a)).unwrap();
            for (p, q) in s1.iter().zip(&s2) {
                if p.abs() > 1e-9 {
                    proptest::prop_assert_eq!(p.signum(), q.signum());
                }
            }
        }
    }
}
