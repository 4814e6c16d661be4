//! Symmetric and generalized symmetric eigenproblems on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    fn sorted(values: DVector<f64>, vectors: DMatrix<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let n = vectors.nrows();
        let mut out = DMatrix::zeros(n, order.len());
        for (j, &k) in order.iter().enumerate() {
            out.set_column(j, &vectors.column(k));
        }
        Self {
            values: order.iter().map(|&k| values[k]).collect(),
            vectors: out,
        }
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenPairs> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    Ok(EigenPairs::sorted(eig.eigenvalues, eig.eigenvectors))
}

/// Cholesky factor of `b`, retrying once with `1e-9 * trace/n` added to the
/// diagonal when `b` is numerically singular.
pub fn robust_cholesky(b: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let n = b.nrows();
    let sym = symmetrize(b);
    let jitter = 1e-9 * sym.trace().abs().max(f64::MIN_POSITIVE) / n as f64;
    if let Some(ch) = Cholesky::new(sym.clone()) {
        let l = ch.l_dirty();
        let min_diag = (0..n).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_diag * min_diag > jitter {
            return Ok(ch);
        }
    }
    let shifted = sym + DMatrix::identity(n, n) * jitter;
    Cholesky::new(shifted).ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))
}

/// Solves `a w = lambda b w` for symmetric `a` and symmetric positive
/// definite `b`. Eigenvectors come back `b`-orthonormal: `w' b w = 1`.
pub fn generalized_sym_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<EigenPairs> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let ch = robust_cholesky(b)?;
    let l = ch.l();
    // c = L^-1 a L^-T
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let eig = sym_eigen(&c)?;
    let vectors = l
        .transpose()
        .solve_upper_triangular(&eig.vectors)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok(EigenPairs {
        values: eig.values,
        vectors,
    })
}

/// Matrix absolute value `V |D| V'` of a symmetric matrix.
pub fn psd_abs(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let v = &eig.vectors;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|x| x.abs()),
    ));
    Ok(symmetrize(&(v * d * v.transpose())))
}

/// Flips `v` so its largest-magnitude coefficient is positive.
pub fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .map(|(_, x)| x)
        .unwrap_or(0.0);
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_pairs_satisfy_definition() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, 0.1, 0.0, 0.1, 1.0]);
        let eig = generalized_sym_eigen(&a, &b).unwrap();
        for j in 0..3 {
            let w = eig.vectors.column(j);
            let r = &a * w - &b * w * eig.values[j];
            assert!(r.norm() < 1e-10);
            assert!(((w.transpose() * &b * w)[0] - 1.0).abs() < 1e-10);
        }
        assert!(eig.values.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn abs_of_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let a = psd_abs(&m).unwrap();
        assert!((a - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn sign_convention() {
        let mut v = [0.1, -0.9, 0.5];
        fix_sign(&mut v);
        assert_eq!(v, [-0.1, 0.9, -0.5]);
    }

    #[test]
    fn singular_b_gets_jitter() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(robust_cholesky(&b).is_ok());
    }
}
