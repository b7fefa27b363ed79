//! Robust PCA: split `D = A + E` into a low-rank `A` and a sparse `E` by
//! minimising `‖A‖_* + λ‖E‖₁` with the inexact augmented Lagrange
//! multiplier method.

use ndarray::ArrayView2;

use crate::linalg::{
    ensure_finite, frobenius, max_abs, singular_value_threshold, soft_threshold, spectral_norm, Matrix,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpcaConfig {
    /// Weight of the `ℓ₁` term.
    pub lambda: f64,
    /// Initial penalty. `None` picks `1.25 / ‖D‖₂`, which keeps the solver
    /// scale-equivariant.
    pub mu0: Option<f64>,
    /// Penalty growth factor per iteration, `> 1`.
    pub rho: f64,
    /// Stop once `‖D − A − E‖_F / ‖D‖_F <= tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl RpcaConfig {
    pub const DEFAULT_RHO: f64 = 1.5;
    pub const DEFAULT_TOL: f64 = 1e-7;
    pub const DEFAULT_MAX_ITER: usize = 500;

    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            mu0: None,
            rho: Self::DEFAULT_RHO,
            tol: Self::DEFAULT_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
        }
    }

    /// `λ = 1/√max(m, n)`, the usual normalisation.
    pub fn for_shape(rows: usize, cols: usize) -> Self {
        Self::new(default_lambda(rows, cols))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return Err(Error::param(format!("mu0 must be > 0, got {mu0}")));
            }
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::param(format!("rho must be > 1, got {}", self.rho)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be positive"));
        }
        Ok(())
    }
}

pub fn default_lambda(rows: usize, cols: usize) -> f64 {
    1.0 / (rows.max(cols) as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct RpcaDecomposition {
    pub low_rank: Matrix,
    pub sparse: Matrix,
    pub iterations: usize,
    /// Final `‖D − A − E‖_F / ‖D‖_F`.
    pub residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
}

/// `J(D) = max(‖D‖₂, ‖D‖_∞ / λ)`, used to scale the initial multiplier.
pub fn dual_scaling(d: &ArrayView2<f64>, lambda: f64) -> Result<f64> {
    ensure_finite(d)?;
    let inf = max_abs(d);
    if inf == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(spectral_norm(d)?.max(inf / lambda))
}

pub fn rpca_ialm(d: &ArrayView2<f64>, cfg: &RpcaConfig) -> Result<RpcaDecomposition> {
    cfg.validate()?;
    ensure_finite(d)?;
    let d_norm = frobenius(d);
    if d_norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let spectral = spectral_norm(d)?;
    let scale = spectral.max(max_abs(d) / cfg.lambda);

    let mut y: Matrix = d.mapv(|x| x / scale);
    let mut e = Matrix::zeros(d.dim());
    let mut a = Matrix::zeros(d.dim());
    let mut mu = cfg.mu0.unwrap_or(1.25 / spectral);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;

    for _ in 0..cfg.max_iter {
        let inv_mu = 1.0 / mu;
        // A-step: SVT of D − E + Y/μ at 1/μ
        let target = d - &e + &(&y * inv_mu);
        a = singular_value_threshold(&target.view(), inv_mu)?;
        // E-step: shrink D − A + Y/μ at λ/μ
        let shrink = cfg.lambda * inv_mu;
        ndarray::Zip::from(&mut e)
            .and(d)
            .and(&a)
            .and(&y)
            .for_each(|e, &d, &a, &y| *e = soft_threshold(d - a + y * inv_mu, shrink));
        let gap = d - &a - &e;
        y.scaled_add(mu, &gap);
        mu *= cfg.rho;

        residual = frobenius(&gap.view()) / d_norm;
        history.push(residual);
        if residual <= cfg.tol {
            break;
        }
    }

    Ok(RpcaDecomposition {
        low_rank: a,
        sparse: e,
        iterations: history.len(),
        residual,
        converged: residual <= cfg.tol,
        residual_history: history,
    })
}
