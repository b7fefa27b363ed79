//! Thin SVD by one-sided (Hestenes) Jacobi rotations.

use ndarray::{Array1, ArrayView2};

use super::Matrix;
use crate::{Error, Result};

/// Sweep cap before reporting non-convergence.
pub const MAX_SWEEPS: usize = 60;

/// A column pair is treated as orthogonal once `|aᵢ·aⱼ| <= tol·‖aᵢ‖‖aⱼ‖`.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Thin SVD `M = U·diag(s)·Vᵀ` with `r = min(m, n)`.
///
/// Singular values are non-increasing. Each column of `u` has its first
/// nonzero entry non-negative, with the matching column of `v` flipped
/// alongside, so the factorisation is reproducible.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub s: Array1<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        let us = &self.u * &self.s.view().insert_axis(ndarray::Axis(0));
        us.dot(&self.v.t())
    }
}

pub fn svd(m: &ArrayView2<f64>) -> Result<SvdFactors> {
    super::ensure_finite(m)?;
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("matrix with a zero dimension"));
    }
    // Rotate the shorter side: work on columns of a tall matrix.
    if rows >= cols {
        let (u, s, v) = jacobi_tall(m)?;
        Ok(finish(u, s, v))
    } else {
        let (u, s, v) = jacobi_tall(&m.t())?;
        Ok(finish(v, s, u))
    }
}

type Columns = Vec<Vec<f64>>;

/// Returns column-major `u` (p vectors of length rows), values, and `v`.
fn jacobi_tall(a: &ArrayView2<f64>) -> Result<(Columns, Vec<f64>, Columns)> {
    let (p, q) = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..q).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    // Columns below this squared norm are roundoff and are not rotated.
    let negligible = (f64::EPSILON * f64::EPSILON) * norms.iter().sum::<f64>();

    let mut converged = q < 2;
    let mut residual = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        residual = 0.0_f64;
        for i in 0..q - 1 {
            for j in i + 1..q {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let scale = (alpha * beta).sqrt();
                let gamma = dot(&cols[i], &cols[j]);
                let off = gamma.abs() / scale;
                residual = residual.max(off);
                if off <= ORTHOGONALITY_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (ci, cj) = pair_mut(&mut cols, i, j);
                rotate(ci, cj, c, s);
                let (vi, vj) = pair_mut(&mut v, i, j);
                rotate(vi, vj, c, s);
                norms[i] = dot(&cols[i], &cols[i]);
                norms[j] = dot(&cols[j], &cols[j]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS, residual });
    }

    let sigma: Vec<f64> = norms.iter().map(|&n| if n <= negligible { 0.0 } else { n.sqrt() }).collect();
    let mut order: Vec<usize> = (0..q).collect();
    // stable, so ties keep column order
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut s_sorted = Vec::with_capacity(q);
    let mut v_sorted = Vec::with_capacity(q);
    let mut missing = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        let sk = sigma[k];
        s_sorted.push(sk);
        v_sorted.push(v[k].clone());
        if sk > 0.0 {
            u_cols.push(cols[k].iter().map(|x| x / sk).collect());
        } else {
            u_cols.push(vec![0.0; p]);
            missing.push(slot);
        }
    }
    complete_basis(&mut u_cols, &missing);
    Ok((u_cols, s_sorted, v_sorted))
}

/// Fills the listed columns with unit vectors orthogonal to all others.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let p = cols[0].len();
    let mut filled: Vec<usize> = (0..cols.len()).filter(|k| !missing.contains(k)).collect();
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < p, "basis completion ran out of candidates");
            let mut e = vec![0.0; p];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for &k in &filled {
                    let proj = dot(&e, &cols[k]);
                    for (x, y) in e.iter_mut().zip(&cols[k]) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                cols[slot] = e.into_iter().map(|x| x / norm).collect();
                filled.push(slot);
                break;
            }
        }
    }
}

fn finish(u: Vec<Vec<f64>>, s: Vec<f64>, v: Vec<Vec<f64>>) -> SvdFactors {
    let r = s.len();
    let m = u[0].len();
    let n = v[0].len();
    let mut uu = Matrix::zeros((m, r));
    let mut vv = Matrix::zeros((n, r));
    for k in 0..r {
        let flip = u[k].iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for i in 0..m {
            uu[[i, k]] = sign * u[k][i];
        }
        for j in 0..n {
            vv[[j, k]] = sign * v[k][j];
        }
    }
    SvdFactors { u: uu, s: Array1::from(s), v: vv }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let xi = *x;
        let yi = *y;
        *x = c * xi - s * yi;
        *y = s * xi + c * yi;
    }
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (lo, hi) = v.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthonormality_error(q: &Matrix) -> f64 {
        let g = q.t().dot(q);
        let r = g.nrows();
        frobenius(&(g - Matrix::eye(r)).view())
    }

    fn check(m: &Matrix) {
        let f = svd(&m.view()).unwrap();
        let r = m.nrows().min(m.ncols());
        assert_eq!(f.s.len(), r);
        assert_eq!(f.u.dim(), (m.nrows(), r));
        assert_eq!(f.v.dim(), (m.ncols(), r));
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
        assert!(f.s.iter().all(|&x| x >= 0.0));
        assert!(f.s.windows(2).into_iter().all(|w| w[0] >= w[1]));
        let err = frobenius(&(f.reconstruct() - m).view());
        assert!(err <= 1e-10 * frobenius(&m.view()).max(1.0), "err {err}");
        for k in 0..r {
            let first = f.u.column(k).iter().copied().find(|x| *x != 0.0).unwrap();
            assert!(first > 0.0);
        }
    }

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity() {
        let f = svd(&Matrix::eye(3).view()).unwrap();
        assert_eq!(f.s.to_vec(), vec![1.0, 1.0, 1.0]);
        assert_eq!(f.u, Matrix::eye(3));
        assert_eq!(f.v, Matrix::eye(3));
    }

    #[test]
    fn diagonal_values() {
        let f = svd(&array![[3.0, 0.0], [0.0, 1.0]].view()).unwrap();
        assert_eq!(f.s.to_vec(), vec![3.0, 1.0]);
        let f = svd(&array![[1.0, 0.0], [0.0, -3.0]].view()).unwrap();
        assert_eq!(f.s.to_vec(), vec![3.0, 1.0]);
    }

    #[test]
    fn random_5x4_reconstructs() {
        let m = random(5, 4, 7);
        let f = svd(&m.view()).unwrap();
        let rel = frobenius(&(f.reconstruct() - &m).view()) / frobenius(&m.view());
        assert!(rel < 1e-10);
        check(&m);
    }

    #[test]
    fn wide_and_tall() {
        check(&random(3, 8, 1));
        check(&random(8, 3, 2));
        check(&random(50, 160, 3));
        check(&random(1, 5, 4));
        check(&random(5, 1, 5));
    }

    #[test]
    fn rank_deficient_gets_orthonormal_completion() {
        check(&Matrix::zeros((4, 3)));
        check(&Matrix::ones((4, 3)));
        let mut m = random(6, 4, 9);
        m.column_mut(2).fill(0.0);
        check(&m);
        let f = svd(&m.view()).unwrap();
        assert_eq!(f.s[3], 0.0);
    }

    #[test]
    fn deterministic() {
        let m = random(7, 5, 11);
        let a = svd(&m.view()).unwrap();
        let b = svd(&m.view()).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.s, b.s);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn rejects_non_finite() {
        let m = array![[1.0, f64::INFINITY]];
        assert!(matches!(svd(&m.view()), Err(Error::NonFinite)));
    }

    proptest! {
        #[test]
        fn factor_invariants(rows in 1usize..9, cols in 1usize..9, seed in any::<u64>(), scale in -3i32..4) {
            let m = random(rows, cols, seed) * 10f64.powi(scale);
            check(&m);
        }
    }
}
