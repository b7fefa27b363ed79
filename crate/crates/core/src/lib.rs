//! Trace-norm regularized learning for matrix-shaped samples.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense matrix primitives (norms, one-sided Jacobi SVD,
//!   soft thresholding, Kronecker accumulators and the block-trace
//!   contraction used by the online trainers).
//! - [`rpca`]: low-rank plus sparse decomposition by the inexact augmented
//!   Lagrange multiplier method.
//! - [`classifier`]: the linear matrix classifier `Tr(WᵀX) + b` with a
//!   trace-norm penalty, trained by accelerated proximal gradient.
//! - [`online`]: online trainers built on sufficient statistics, exact and
//!   inexact inner solvers, with optional mini-batches.
//! - [`audio`]: framing, MFCC rows, corruption injection and WAV ingestion.
//! - [`experiment`]: manifests, synthetic datasets, trainer dispatch with
//!   convergence traces, and the corruption robustness sweep.

pub mod audio;
pub mod classifier;
mod error;
pub mod experiment;
pub mod linalg;
pub mod online;
pub mod rpca;

pub use error::{Error, Result};
pub use linalg::Matrix;
