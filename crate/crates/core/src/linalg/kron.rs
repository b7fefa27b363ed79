//! Kronecker-sum accumulator `Σ X⊗X` and its block-trace contraction.

use ndarray::{s, ArrayView2};

use super::{ensure_dims, Matrix};
use crate::Result;

/// Dense `(m·m) × (n·n)` accumulator viewed as an `m × n` grid of `m × n`
/// blocks. Block `(i, j)` holds `Σₜ Xₜ[i,j]·Xₜ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronStats {
    rows: usize,
    cols: usize,
    values: Matrix,
}

impl KronStats {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: Matrix::zeros((rows * rows, cols * cols)) }
    }

    /// Block dimensions `(m, n)`, which are also the sample dimensions.
    pub fn block_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// The full `(m·m) × (n·n)` matrix.
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn block(&self, i: usize, j: usize) -> ArrayView2<'_, f64> {
        let (m, n) = (self.rows, self.cols);
        self.values.slice(s![i * m..(i + 1) * m, j * n..(j + 1) * n])
    }

    /// Adds `X ⊗ X`. Accumulation runs row-major over `(i, j)` then `(p, q)`.
    pub fn accumulate(&mut self, x: &ArrayView2<f64>) -> Result<()> {
        ensure_dims(x, (self.rows, self.cols))?;
        let (m, n) = (self.rows, self.cols);
        for i in 0..m {
            for j in 0..n {
                let xij = x[[i, j]];
                let mut block = self.values.slice_mut(s![i * m..(i + 1) * m, j * n..(j + 1) * n]);
                block.scaled_add(xij, x);
            }
        }
        Ok(())
    }

    /// Element-wise sum of two accumulators with equal block dimensions.
    pub fn merged(&self, other: &KronStats) -> Result<KronStats> {
        ensure_dims(&other.values.view(), self.values.dim())?;
        Ok(KronStats { rows: self.rows, cols: self.cols, values: &self.values + &other.values })
    }
}

/// `out[i,j] = Tr(Zᵀ · block(i,j))`, equal to `Σₜ Tr(ZᵀXₜ)·Xₜ` when the
/// accumulator holds `Σₜ Xₜ⊗Xₜ`.
pub fn grid_tr(z: &ArrayView2<f64>, b: &KronStats) -> Result<Matrix> {
    let (m, n) = b.block_dims();
    ensure_dims(z, (m, n))?;
    let mut out = Matrix::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            out[[i, j]] = super::trace_inner(z, &b.block(i, j));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, trace_inner};
    use crate::Error;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_shape_fn((rows, cols), |_| rng.random_range(-2.0..2.0))
    }

    /// Textbook Kronecker product, independent of the block layout code.
    fn kron_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let (m1, n1) = a.dim();
        let (m2, n2) = b.dim();
        Matrix::from_shape_fn((m1 * m2, n1 * n2), |(r, c)| a[[r / m2, c / n2]] * b[[r % m2, c % n2]])
    }

    #[test]
    fn single_sample_blocks() {
        let x = array![[1.0, 2.0, 0.5], [-1.0, 3.0, 4.0]];
        let mut b = KronStats::zeros(2, 3);
        b.accumulate(&x.view()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(b.block(i, j), &x * x[[i, j]]);
            }
        }
    }

    #[test]
    fn negated_sample_adds_the_same_term() {
        // (-X)⊗(-X) = X⊗X: the accumulator is even in X and never cancels
        let x = array![[1.5, -2.0], [0.25, 3.0]];
        let mut once = KronStats::zeros(2, 2);
        once.accumulate(&x.view()).unwrap();
        let mut b = KronStats::zeros(2, 2);
        b.accumulate(&x.view()).unwrap();
        b.accumulate(&(-&x).view()).unwrap();
        assert_eq!(b.values, &once.values * 2.0);
    }

    #[test]
    fn matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = KronStats::zeros(2, 2);
        let mut expected = Matrix::zeros((4, 4));
        for _ in 0..3 {
            let x = random(2, 2, &mut rng);
            b.accumulate(&x.view()).unwrap();
            expected += &kron_oracle(&x, &x);
        }
        let err = frobenius(&(&expected - b.values()).view());
        assert!(err <= 1e-14 * frobenius(&expected.view()));
    }

    #[test]
    fn non_square_matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(3, 2, &mut rng);
        let mut b = KronStats::zeros(3, 2);
        b.accumulate(&x.view()).unwrap();
        assert_eq!(b.values(), &kron_oracle(&x, &x));
    }

    #[test]
    fn block_exchange_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut b = KronStats::zeros(3, 4);
        for _ in 0..4 {
            b.accumulate(&random(3, 4, &mut rng).view()).unwrap();
        }
        for i in 0..3 {
            for j in 0..4 {
                for p in 0..3 {
                    for q in 0..4 {
                        assert_eq!(b.block(i, j)[[p, q]], b.block(p, q)[[i, j]]);
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut b = KronStats::zeros(2, 3);
        let x = Matrix::zeros((3, 2));
        assert!(matches!(b.accumulate(&x.view()), Err(Error::DimensionMismatch { .. })));
        assert!(grid_tr(&x.view(), &b).is_err());
    }

    #[test]
    fn grid_tr_single_sample() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.0]];
        let z = array![[0.5, -1.0], [2.0, 1.0], [1.0, 1.0]];
        let mut b = KronStats::zeros(3, 2);
        b.accumulate(&x.view()).unwrap();
        let got = grid_tr(&z.view(), &b).unwrap();
        let expected = &x * trace_inner(&z.view(), &x.view());
        for (a, e) in got.iter().zip(expected.iter()) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_tr_zero_z() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut b = KronStats::zeros(3, 2);
        b.accumulate(&random(3, 2, &mut rng).view()).unwrap();
        let got = grid_tr(&Matrix::zeros((3, 2)).view(), &b).unwrap();
        assert!(got.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_tr_matches_sample_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Matrix> = (0..10).map(|_| random(3, 2, &mut rng)).collect();
        let z = random(3, 2, &mut rng);
        let mut b = KronStats::zeros(3, 2);
        let mut oracle = Matrix::zeros((3, 2));
        for x in &samples {
            b.accumulate(&x.view()).unwrap();
            oracle.scaled_add(trace_inner(&z.view(), &x.view()), x);
        }
        let got = grid_tr(&z.view(), &b).unwrap();
        let rel = frobenius(&(&got - &oracle).view()) / frobenius(&oracle.view());
        assert!(rel < 1e-12, "rel {rel}");
    }

    proptest! {
        #[test]
        fn grid_tr_is_linear(m in 1usize..5, n in 1usize..5, seed in any::<u64>(), alpha in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b1 = KronStats::zeros(m, n);
            let mut b2 = KronStats::zeros(m, n);
            for _ in 0..3 {
                b1.accumulate(&random(m, n, &mut rng).view()).unwrap();
                b2.accumulate(&random(m, n, &mut rng).view()).unwrap();
            }
            let z = random(m, n, &mut rng);
            let sum = grid_tr(&z.view(), &b1.merged(&b2).unwrap()).unwrap();
            let parts = grid_tr(&z.view(), &b1).unwrap() + grid_tr(&z.view(), &b2).unwrap();
            let scale = frobenius(&parts.view()).max(1e-300);
            prop_assert!(frobenius(&(&sum - &parts).view()) <= 1e-12 * scale.max(1.0));

            let scaled = grid_tr(&(&z * alpha).view(), &b1).unwrap();
            let expected = grid_tr(&z.view(), &b1).unwrap() * alpha;
            let scale = frobenius(&expected.view()).max(1.0);
            prop_assert!(frobenius(&(&scaled - &expected).view()) <= 1e-12 * scale);
        }
    }
}
