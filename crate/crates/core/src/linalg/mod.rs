//! Dense matrix primitives shared by every solver.

mod kron;
mod svd;
pub mod text;

use ndarray::{Array2, ArrayView2, Zip};

use crate::{Error, Result};

pub use kron::{grid_tr, KronStats};
pub use svd::{svd, SvdFactors, MAX_SWEEPS, ORTHOGONALITY_TOL};

/// Dense row-major real matrix, `m` rows by `n` columns.
pub type Matrix = Array2<f64>;

/// Scalar soft-thresholding (shrinkage) operator.
#[inline]
pub fn soft_threshold(x: f64, eps: f64) -> f64 {
    if x > eps {
        x - eps
    } else if x < -eps {
        x + eps
    } else {
        0.0
    }
}

/// Element-wise [`soft_threshold`].
pub fn soft_threshold_matrix(m: &ArrayView2<f64>, eps: f64) -> Matrix {
    m.mapv(|x| soft_threshold(x, eps))
}

/// Singular value thresholding, the proximal operator of `eps * ‖·‖_*`.
pub fn singular_value_threshold(m: &ArrayView2<f64>, eps: f64) -> Result<Matrix> {
    Ok(singular_value_threshold_with_rank(m, eps)?.0)
}

/// Like [`singular_value_threshold`], also returning the rank of the result.
pub fn singular_value_threshold_with_rank(m: &ArrayView2<f64>, eps: f64) -> Result<(Matrix, usize)> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::param(format!("threshold must be non-negative, got {eps}")));
    }
    let f = svd(m)?;
    let (rows, cols) = m.dim();
    let mut out = Matrix::zeros((rows, cols));
    let mut rank = 0;
    for (k, &sigma) in f.s.iter().enumerate() {
        let shrunk = soft_threshold(sigma, eps);
        if shrunk <= 0.0 {
            // singular values are sorted
            break;
        }
        rank += 1;
        let u = f.u.column(k);
        let v = f.v.column(k);
        for i in 0..rows {
            let ui = shrunk * u[i];
            if ui == 0.0 {
                continue;
            }
            let mut row = out.row_mut(i);
            for j in 0..cols {
                row[j] += ui * v[j];
            }
        }
    }
    Ok((out, rank))
}

/// The four norms the solvers need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixNorms {
    pub frobenius: f64,
    pub spectral: f64,
    pub l1: f64,
    pub max_abs: f64,
}

pub fn matrix_norms(m: &ArrayView2<f64>) -> Result<MatrixNorms> {
    ensure_finite(m)?;
    Ok(MatrixNorms {
        frobenius: frobenius(m),
        spectral: spectral_norm(m)?,
        l1: m.iter().map(|x| x.abs()).sum(),
        max_abs: max_abs(m),
    })
}

pub fn frobenius(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(m: &ArrayView2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest singular value.
pub fn spectral_norm(m: &ArrayView2<f64>) -> Result<f64> {
    Ok(svd(m)?.s.first().copied().unwrap_or(0.0))
}

/// Sum of singular values.
pub fn nuclear_norm(m: &ArrayView2<f64>) -> Result<f64> {
    Ok(svd(m)?.s.iter().sum())
}

/// `Tr(AᵀB)`, the Frobenius inner product.
pub fn trace_inner(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    let mut acc = 0.0;
    Zip::from(a).and(b).for_each(|&x, &y| acc += x * y);
    acc
}

pub fn ensure_finite(m: &ArrayView2<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_dims(m: &ArrayView2<f64>, expected: (usize, usize)) -> Result<()> {
    if m.dim() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found: m.dim() })
    }
}

/// Number of singular values strictly above `tol`.
pub fn numerical_rank(m: &ArrayView2<f64>, tol: f64) -> Result<usize> {
    Ok(svd(m)?.s.iter().filter(|&&s| s > tol).count())
}
