//! Spatial filters: class covariances, CSP, stationary-subspace CSP and
//! regularized Fisher filters for ERPs.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{fix_sign, generalized_sym_eigen, psd_abs, symmetrize};
use crate::sigproc::Epoch;

pub const CSP_FILTERS_PER_SIDE: usize = 3;
pub const REFSF_FILTERS: usize = 5;
pub const SSCSP_NU: f64 = 0.1;
pub const REFSF_GAMMA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMethod {
    Csp,
    Sscsp,
    Refsf,
}

impl fmt::Display for FilterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMethod::Csp => "csp",
            FilterMethod::Sscsp => "sscsp",
            FilterMethod::Refsf => "refsf",
        })
    }
}

/// Rows of `w` are spatial filters over the physical channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFilterBank {
    pub w: DMatrix<f64>,
    pub method: FilterMethod,
    /// Eigenvalue associated with each row.
    pub eigenvalues: Vec<f64>,
}

impl SpatialFilterBank {
    pub fn n_filters(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.w.ncols()
    }

    /// Virtual-channel signals `W X`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n_channels() {
            return Err(Error::Dimension {
                expected: self.n_channels(),
                got: x.nrows(),
            });
        }
        Ok(&self.w * x)
    }
}

/// Sufficient statistics of one trial: `sum x x'`, `sum x` and the sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMoments {
    pub outer: DMatrix<f64>,
    pub sum: DVector<f64>,
    pub n: usize,
}

impl TrialMoments {
    pub fn from_matrix(x: &DMatrix<f64>) -> Self {
        Self {
            outer: x * x.transpose(),
            sum: x.column_sum(),
            n: x.ncols(),
        }
    }

    /// Uncentered second moment `X X' / n`.
    pub fn mean_square(&self) -> DMatrix<f64> {
        &self.outer / self.n as f64
    }

    /// Sample covariance with `n - 1` normalization.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n as f64;
        let mean = &self.sum / n;
        symmetrize(&((&self.outer - &mean * mean.transpose() * n) / (n - 1.0)))
    }

    /// Covariance scaled to trace `n_channels`.
    pub fn normalized_covariance(&self) -> Result<DMatrix<f64>> {
        let c = self.covariance();
        let tr = c.trace();
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::Numerical("trial covariance has zero trace".into()));
        }
        let n = c.nrows() as f64;
        Ok(c * (n / tr))
    }

    /// Power `w' (X X'/n) w` of the filtered signal.
    pub fn filtered_power(&self, w: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        (w.transpose() * &self.outer * &w)[0] / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCovariance {
    pub sigma: DMatrix<f64>,
    pub n_trials: usize,
}

/// Mean of trace-normalized per-trial covariances.
pub fn class_covariance(epochs: &[Epoch]) -> Result<ClassCovariance> {
    let moments: Vec<TrialMoments> = epochs.iter().map(|e| TrialMoments::from_matrix(&e.data)).collect();
    class_covariance_from(moments.iter())
}

pub fn class_covariance_from<'a, I>(moments: I) -> Result<ClassCovariance>
where
    I: IntoIterator<Item = &'a TrialMoments>,
{
    let mut acc: Option<DMatrix<f64>> = None;
    let mut count = 0;
    for m in moments {
        if m.n < 2 {
            return Err(Error::InsufficientData("epoch with fewer than 2 samples".into()));
        }
        let c = m.normalized_covariance()?;
        match acc.as_mut() {
            Some(a) => {
                if a.shape() != c.shape() {
                    return Err(Error::Dimension {
                        expected: a.nrows(),
                        got: c.nrows(),
                    });
                }
                *a += c;
            }
            None => acc = Some(c),
        }
        count += 1;
    }
    let sum = acc.ok_or_else(|| Error::InsufficientData("no epochs for class covariance".into()))?;
    Ok(ClassCovariance {
        sigma: symmetrize(&(sum / count as f64)),
        n_trials: count,
    })
}

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

/// Picks `per_side` eigenvectors from each end of an ascending spectrum,
/// largest eigenvalues first.
fn select_extremes(values: &[f64], vectors: &DMatrix<f64>, per_side: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = values.len();
    let idx: Vec<usize> = (0..per_side).map(|k| n - 1 - k).chain(0..per_side).collect();
    rows_from_columns(values, vectors, &idx)
}

fn rows_from_columns(values: &[f64], vectors: &DMatrix<f64>, idx: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    let n_ch = vectors.nrows();
    let mut w = DMatrix::zeros(idx.len(), n_ch);
    for (r, &k) in idx.iter().enumerate() {
        let mut col: Vec<f64> = vectors.column(k).iter().copied().collect();
        fix_sign(&mut col);
        for (c, v) in col.into_iter().enumerate() {
            w[(r, c)] = v;
        }
    }
    (w, idx.iter().map(|&k| values[k]).collect())
}

/// Common spatial patterns: generalized eigenvectors of
/// `sa w = lambda (sa + sb) w`, `per_side` from each end of the spectrum.
pub fn csp(sa: &DMatrix<f64>, sb: &DMatrix<f64>, per_side: usize) -> Result<SpatialFilterBank> {
    check_pair(sa, sb)?;
    if 2 * per_side > sa.nrows() || per_side == 0 {
        return Err(Error::invalid(
            "csp",
            format!("{per_side} filters per side for {} channels", sa.nrows()),
        ));
    }
    let eig = generalized_sym_eigen(sa, &(sa + sb))?;
    let (w, eigenvalues) = select_extremes(&eig.values, &eig.vectors, per_side);
    Ok(SpatialFilterBank {
        w,
        method: FilterMethod::Csp,
        eigenvalues,
    })
}

/// CSP penalized toward directions that are stationary between the
/// calibration context and the use context.
///
/// Solves `sa w = lambda (sa + sb + nu * |s_use - s_cal|) w` where `s_cal` is
/// the equal-weight pool `(sa + sb) / 2` and `|.|` is the matrix absolute
/// value. `nu = 0` is plain CSP.
pub fn sscsp(
    sa: &DMatrix<f64>,
    sb: &DMatrix<f64>,
    s_use: &DMatrix<f64>,
    nu: f64,
    per_side: usize,
) -> Result<SpatialFilterBank> {
    check_pair(sa, sb)?;
    check_pair(sa, s_use)?;
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::invalid("sscsp", format!("nu must be non-negative, got {nu}")));
    }
    if 2 * per_side > sa.nrows() || per_side == 0 {
        return Err(Error::invalid(
            "sscsp",
            format!("{per_side} filters per side for {} channels", sa.nrows()),
        ));
    }
    let s_cal = (sa + sb) * 0.5;
    let denom = if nu == 0.0 {
        sa + sb
    } else {
        sa + sb + psd_abs(&(s_use - s_cal))? * nu
    };
    let eig = generalized_sym_eigen(sa, &denom)?;
    let (w, eigenvalues) = select_extremes(&eig.values, &eig.vectors, per_side);
    Ok(SpatialFilterBank {
        w,
        method: FilterMethod::Sscsp,
        eigenvalues,
    })
}

/// Channel-space scatter accumulators for two ERP classes (index 0 is the
/// positive class). Time points of each epoch are observation columns.
#[derive(Debug, Clone)]
pub struct ErpScatter {
    pub outer: [DMatrix<f64>; 2],
    pub sum: [DMatrix<f64>; 2],
    pub count: [usize; 2],
}

impl ErpScatter {
    pub fn new(n_channels: usize, n_samples: usize) -> Self {
        Self {
            outer: [DMatrix::zeros(n_channels, n_channels), DMatrix::zeros(n_channels, n_channels)],
            sum: [DMatrix::zeros(n_channels, n_samples), DMatrix::zeros(n_channels, n_samples)],
            count: [0, 0],
        }
    }

    /// Adds an epoch whose `x x'` has already been computed.
    pub fn add(&mut self, class: usize, x: &DMatrix<f64>, xxt: &DMatrix<f64>) -> Result<()> {
        if x.shape() != self.sum[class].shape() {
            return Err(Error::Dimension {
                expected: self.sum[class].ncols(),
                got: x.ncols(),
            });
        }
        self.outer[class] += xxt;
        self.sum[class] += x;
        self.count[class] += 1;
        Ok(())
    }

    pub fn from_epochs(target: &[Epoch], nontarget: &[Epoch]) -> Result<Self> {
        let first = target
            .first()
            .or(nontarget.first())
            .ok_or_else(|| Error::InsufficientData("no epochs".into()))?;
        let mut s = Self::new(first.n_channels(), first.n_samples());
        for (class, set) in [target, nontarget].into_iter().enumerate() {
            for e in set {
                s.add(class, &e.data, &(&e.data * e.data.transpose()))?;
            }
        }
        Ok(s)
    }

    /// Between-class and within-class scatter `(Sb, Sw)`.
    pub fn scatter(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n_total = (self.count[0] + self.count[1]) as f64;
        let grand = (&self.sum[0] + &self.sum[1]) / n_total;
        let n_ch = grand.nrows();
        let mut sb = DMatrix::zeros(n_ch, n_ch);
        let mut sw = DMatrix::zeros(n_ch, n_ch);
        for c in 0..2 {
            let n_c = self.count[c] as f64;
            let mean = &self.sum[c] / n_c;
            let d = &mean - &grand;
            sb += &d * d.transpose() * n_c;
            sw += &self.outer[c] - &mean * mean.transpose() * n_c;
        }
        (symmetrize(&sb), symmetrize(&sw))
    }
}

/// Regularized Fisher spatial filters for ERP classification.
pub fn refsf(target: &[Epoch], nontarget: &[Epoch], n_filters: usize, gamma: f64) -> Result<SpatialFilterBank> {
    refsf_from_scatter(&ErpScatter::from_epochs(target, nontarget)?, n_filters, gamma)
}

/// Leading eigenvectors of `(Sw + gamma * tr(Sw)/n * I)^-1 Sb`, unit norm.
pub fn refsf_from_scatter(scatter: &ErpScatter, n_filters: usize, gamma: f64) -> Result<SpatialFilterBank> {
    if scatter.count.iter().any(|&c| c < 2) {
        return Err(Error::InsufficientData(format!(
            "refsf needs at least 2 epochs per class, got {:?}",
            scatter.count
        )));
    }
    let (sb, sw) = scatter.scatter();
    let n = sw.nrows();
    if n_filters == 0 || n_filters > n {
        return Err(Error::invalid("refsf", format!("{n_filters} filters for {n} channels")));
    }
    let reg = &sw + DMatrix::identity(n, n) * (gamma * sw.trace() / n as f64);
    let eig = generalized_sym_eigen(&sb, &reg)?;
    let top = eig.values[n - 1];
    let scale = sb.trace().abs() / reg.trace().abs().max(f64::MIN_POSITIVE);
    if !(top > 1e-12 * scale.max(f64::MIN_POSITIVE)) || top <= 0.0 {
        return Err(Error::NoDiscriminativeDirection(
            "class-mean ERPs are identical".into(),
        ));
    }
    let idx: Vec<usize> = (0..n_filters).map(|k| n - 1 - k).collect();
    let (mut w, eigenvalues) = rows_from_columns(&eig.values, &eig.vectors, &idx);
    for mut row in w.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    Ok(SpatialFilterBank {
        w,
        method: FilterMethod::Refsf,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::linalg::rank;

    fn epoch(data: DMatrix<f64>) -> Epoch {
        Epoch {
            data,
            sample_rate_hz: 100.0,
            onset_t_sec: 0.0,
            source_event_index: None,
        }
    }

    fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sd: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |r, _| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd[r]
        })
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = gaussian(rng, n, n + 3, &vec![1.0; n]);
        &a * a.transpose() / (n + 3) as f64 + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn identity_covariance_trial() {
        // rows orthogonal with zero mean and equal energy
        let x = DMatrix::from_row_slice(2, 4, &[1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        let c = class_covariance(&[epoch(x)]).unwrap();
        assert!((c.sigma - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
        assert_eq!(c.n_trials, 1);
    }

    #[test]
    fn duplicated_channels_are_rank_deficient() {
        let row = [0.3, -1.2, 2.0, 0.1, -0.7];
        let mut data = Vec::new();
        data.extend_from_slice(&row);
        data.extend_from_slice(&row);
        let c = class_covariance(&[epoch(DMatrix::from_row_slice(2, 5, &data))]).unwrap();
        assert!((c.sigma[(0, 1)] - c.sigma[(0, 0)]).abs() < 1e-12);
        assert!((c.sigma[(1, 1)] - c.sigma[(0, 0)]).abs() < 1e-12);
        assert_eq!(rank(&c.sigma, 1e-9), 1);
        assert!(class_covariance(&[]).is_err());
    }

    #[test]
    fn monte_carlo_class_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let epochs: Vec<Epoch> = (0..100).map(|_| epoch(gaussian(&mut rng, 2, 200, &[2.0, 1.0]))).collect();
        let c = class_covariance(&epochs).unwrap();
        // diag(4, 1) scaled to trace 2
        let truth = [1.6, 0.4];
        for i in 0..2 {
            assert!((c.sigma[(i, i)] - truth[i]).abs() <= 0.1 * truth[i], "{}", c.sigma);
        }
        assert!(c.sigma[(0, 1)].abs() < 0.1);
    }

    #[test]
    fn csp_diagonal_pair() {
        let sa = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let sb = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let bank = csp(&sa, &sb, 1).unwrap();
        assert!((bank.eigenvalues[0] - 0.8).abs() < 1e-9);
        assert!((bank.eigenvalues[1] - 0.2).abs() < 1e-9);
        assert!(bank.w[(0, 1)].abs() < 1e-6 && bank.w[(0, 0)] > 0.0);
        assert!(bank.w[(1, 0)].abs() < 1e-6 && bank.w[(1, 1)] > 0.0);
        // unit generalized norm: w'(sa+sb)w = 1 -> w = 1/sqrt(5)
        assert!((bank.w[(0, 0)] - 1.0 / 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn csp_equal_classes_give_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_psd(&mut rng, 4);
        let bank = csp(&s, &s, 2).unwrap();
        assert!(bank.eigenvalues.iter().all(|l| (l - 0.5).abs() < 1e-9));
    }

    #[test]
    fn csp_residuals_and_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sa = random_psd(&mut rng, 4);
        let sb = random_psd(&mut rng, 4);
        let bank = csp(&sa, &sb, 2).unwrap();
        let sum = &sa + &sb;
        for (r, lambda) in bank.eigenvalues.iter().enumerate() {
            let w = bank.w.row(r).transpose();
            let resid = &sa * &w - &sum * &w * *lambda;
            assert!(resid.norm() <= 1e-8);
            assert!(((w.transpose() * &sum * &w)[0] - 1.0).abs() < 1e-9);
        }
        assert_eq!(rank(&bank.w, 1e-9), 4);
        assert!(csp(&sa, &DMatrix::identity(3, 3), 1).is_err());
        assert!(csp(&sa, &sb, 3).is_err());
    }

    #[test]
    fn csp_swap_maps_lambda_to_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sa = random_psd(&mut rng, 5);
        let sb = random_psd(&mut rng, 5);
        let ab = csp(&sa, &sb, 2).unwrap();
        let ba = csp(&sb, &sa, 2).unwrap();
        // largest of (b, a) is smallest of (a, b)
        for k in 0..2 {
            assert!((ba.eigenvalues[k] - (1.0 - ab.eigenvalues[2 + k])).abs() < 1e-9);
            let u = ab.w.row(2 + k);
            let v = ba.w.row(k);
            assert!((u - v).norm() < 1e-7, "{u} vs {v}");
        }
    }

    #[test]
    fn csp_selection_invariant_to_class_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<Epoch> = (0..20).map(|_| epoch(gaussian(&mut rng, 3, 50, &[2.0, 1.0, 0.5]))).collect();
        let b: Vec<Epoch> = (0..20).map(|_| epoch(gaussian(&mut rng, 3, 50, &[0.5, 1.0, 2.0]))).collect();
        let scaled: Vec<Epoch> = a.iter().map(|e| epoch(&e.data * 7.5)).collect();
        let sb = class_covariance(&b).unwrap().sigma;
        let f1 = csp(&class_covariance(&a).unwrap().sigma, &sb, 1).unwrap();
        let f2 = csp(&class_covariance(&scaled).unwrap().sigma, &sb, 1).unwrap();
        assert!((f1.w - f2.w).norm() < 1e-9);
    }

    #[test]
    fn sscsp_reduces_to_csp() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sa = random_psd(&mut rng, 6);
        let sb = random_psd(&mut rng, 6);
        let su = random_psd(&mut rng, 6);
        let plain = csp(&sa, &sb, 3).unwrap();
        let off = sscsp(&sa, &sb, &su, 0.0, 3).unwrap();
        assert!((plain.w.clone() - off.w).abs().max() < 1e-9);
        let stationary = sscsp(&sa, &sb, &((&sa + &sb) * 0.5), 5.0, 3).unwrap();
        assert!((plain.w.clone() - stationary.w).abs().max() < 1e-9);
        let tiny = sscsp(&sa, &sb, &su, 1e-6, 3).unwrap();
        assert!((plain.w - tiny.w).abs().max() < 1e-4);
    }

    /// Largest root of det(a - l b) = 0 and its unit eigenvector, for 2x2 matrices.
    fn analytic_top_2x2(a: &DMatrix<f64>, b: &DMatrix<f64>) -> [f64; 2] {
        let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
        let (b11, b12, b22) = (b[(0, 0)], b[(0, 1)], b[(1, 1)]);
        let qa = b11 * b22 - b12 * b12;
        let qb = -(a11 * b22 + a22 * b11 - 2.0 * a12 * b12);
        let qc = a11 * a22 - a12 * a12;
        let l = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        // (a - l b) w = 0: w ∝ (-(a12 - l b12), a11 - l b11)
        let v = [-(a12 - l * b12), a11 - l * b11];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let s = if v[0].abs() >= v[1].abs() { v[0].signum() } else { v[1].signum() };
        [s * v[0] / n, s * v[1] / n]
    }

    #[test]
    fn sscsp_moves_away_from_nonstationary_channel() {
        let sa = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.5]);
        let sb = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 1.0]);
        let s_cal = (&sa + &sb) * 0.5;
        let s_use = &s_cal + DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 3.0]);
        let mut previous = f64::INFINITY;
        for nu in [0.0, 1.0, 10.0] {
            let denom = &sa + &sb + DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 3.0 * nu]);
            let oracle = analytic_top_2x2(&sa, &denom);
            let bank = sscsp(&sa, &sb, &s_use, nu, 1).unwrap();
            let row = bank.w.row(0);
            let unit = [row[0] / row.norm(), row[1] / row.norm()];
            assert!((unit[0] - oracle[0]).abs() < 1e-9 && (unit[1] - oracle[1]).abs() < 1e-9);
            assert!(unit[1].abs() < previous, "nu {nu}: {unit:?}");
            previous = unit[1].abs();
        }
    }

    #[test]
    fn refsf_finds_the_discriminative_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n_s = 40;
        let template: Vec<f64> = (0..n_s).map(|t| (-((t as f64 - 20.0) / 5.0).powi(2)).exp() * 3.0).collect();
        let make = |rng: &mut ChaCha8Rng, with: bool| {
            let mut x = gaussian(rng, 3, n_s, &[1.0, 1.0, 1.0]);
            if with {
                for t in 0..n_s {
                    x[(0, t)] += template[t];
                }
            }
            epoch(x)
        };
        let target: Vec<Epoch> = (0..60).map(|_| make(&mut rng, true)).collect();
        let other: Vec<Epoch> = (0..60).map(|_| make(&mut rng, false)).collect();
        let bank = refsf(&target, &other, 2, REFSF_GAMMA).unwrap();
        assert!(bank.w[(0, 0)].abs() >= 0.95, "{}", bank.w);
        for r in 0..2 {
            assert!((bank.w.row(r).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn refsf_residual_and_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let target: Vec<Epoch> = (0..5).map(|_| epoch(gaussian(&mut rng, 4, 10, &[1.0; 4]))).collect();
        let other: Vec<Epoch> = (0..7).map(|_| epoch(gaussian(&mut rng, 4, 10, &[1.0; 4]))).collect();
        let gamma = 1e-3;
        let bank = refsf(&target, &other, 3, gamma).unwrap();
        let (sb, sw) = ErpScatter::from_epochs(&target, &other).unwrap().scatter();
        let reg = &sw + DMatrix::identity(4, 4) * (gamma * sw.trace() / 4.0);
        let m = reg.clone().try_inverse().unwrap() * &sb;
        for (r, lambda) in bank.eigenvalues.iter().enumerate() {
            let w = bank.w.row(r).transpose();
            assert!((&m * &w - &w * *lambda).norm() <= 1e-8);
        }

        let same = target.clone();
        assert!(matches!(
            refsf(&target, &same, 2, gamma),
            Err(Error::NoDiscriminativeDirection(_))
        ));
        assert!(refsf(&target[..1], &other, 2, gamma).is_err());
    }
}
