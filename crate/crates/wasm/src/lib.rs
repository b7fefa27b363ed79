//! Browser bindings for the demo page in `www/`.
//!
//! Matrices cross the boundary as row-major `Float64Array`s.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wasm_bindgen::prelude::*;

use tracenorm::audio::add_large_errors;
use tracenorm::classifier::{
    apg_fit_observed, objective, ApgConfig, LabeledSample, LinearMatrixModel, LipschitzBound,
};
use tracenorm::experiment::manifest::Split;
use tracenorm::experiment::synth::{generate, SynthParams};
use tracenorm::experiment::train::shuffled;
use tracenorm::linalg::{frobenius, singular_value_threshold, soft_threshold, svd};
use tracenorm::online::{online_fit_observed, OnlineConfig, OnlineMode};
use tracenorm::rpca::{rpca_ialm, RpcaConfig};
use tracenorm::Matrix;

fn js(e: tracenorm::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn flat(m: &Matrix) -> Vec<f64> {
    m.iter().copied().collect()
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Ground truth, corrupted input and recovered parts of one RPCA run.
#[wasm_bindgen]
pub struct RpcaDemo {
    rows: usize,
    cols: usize,
    truth: Vec<f64>,
    observed: Vec<f64>,
    low_rank: Vec<f64>,
    sparse: Vec<f64>,
    iterations: usize,
    relative_error: f64,
    residuals: Vec<f64>,
}

#[wasm_bindgen]
impl RpcaDemo {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn observed(&self) -> Vec<f64> {
        self.observed.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn low_rank(&self) -> Vec<f64> {
        self.low_rank.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn sparse(&self) -> Vec<f64> {
        self.sparse.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    /// `‖A − A_true‖_F / ‖A_true‖_F`.
    #[wasm_bindgen(getter)]
    pub fn relative_error(&self) -> f64 {
        self.relative_error
    }
    /// Per-iteration `‖D − A − E‖_F / ‖D‖_F`.
    #[wasm_bindgen(getter)]
    pub fn residuals(&self) -> Vec<f64> {
        self.residuals.clone()
    }
}

/// Corrupts a random rank-`rank` matrix with large errors on `fraction` of
/// its entries and separates it again. `lambda <= 0` picks `1/√max(m, n)`.
#[wasm_bindgen]
pub fn rpca_demo(
    rows: usize,
    cols: usize,
    rank: usize,
    fraction: f64,
    lambda: f64,
    seed: u64,
) -> Result<RpcaDemo, JsError> {
    if rows == 0 || cols == 0 || rank == 0 || rank > rows.min(cols) {
        return Err(JsError::new("need 1 <= rank <= min(rows, cols)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = gaussian(rows, rank, &mut rng).dot(&gaussian(rank, cols, &mut rng));
    let observed = add_large_errors(&truth.view(), fraction, seed).map_err(js)?;
    let cfg = if lambda > 0.0 { RpcaConfig::new(lambda) } else { RpcaConfig::for_shape(rows, cols) };
    let r = rpca_ialm(&observed.view(), &cfg).map_err(js)?;
    let relative_error = frobenius(&(&r.low_rank - &truth).view()) / frobenius(&truth.view());
    Ok(RpcaDemo {
        rows,
        cols,
        truth: flat(&truth),
        observed: flat(&observed),
        low_rank: flat(&r.low_rank),
        sparse: flat(&r.sparse),
        iterations: r.iterations,
        relative_error,
        residuals: r.residual_history,
    })
}

/// Singular values of a random `rows×cols` matrix followed by those of its
/// singular value thresholding at `eps`; both halves sorted descending.
#[wasm_bindgen]
pub fn svt_spectrum(rows: usize, cols: usize, eps: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = gaussian(rows, cols, &mut rng);
    let before = svd(&m.view()).map_err(js)?.s;
    let shrunk = singular_value_threshold(&m.view(), eps).map_err(js)?;
    let after = svd(&shrunk.view()).map_err(js)?.s;
    Ok(before.iter().chain(after.iter()).copied().collect())
}

/// `soft(x, eps)` sampled at `points` evenly spaced `x` in `[lo, hi]`.
#[wasm_bindgen]
pub fn soft_threshold_curve(eps: f64, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    (0..points).map(|k| soft_threshold(lo + step * k as f64, eps)).collect()
}

/// Objective over the training set against cumulative SVD calls, for
/// `"apg"`, `"ol_apg"` or `"ol_iapg"` on a synthetic two-class set.
/// Returned as interleaved `[svd_calls, objective, …]` pairs.
#[wasm_bindgen]
pub fn convergence_trace(
    trainer: &str,
    rows: usize,
    cols: usize,
    per_class: usize,
    lambda: f64,
    tight: bool,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let p =
        SynthParams { rows, cols, train_per_class: per_class, test_per_class: 0, seed, ..Default::default() };
    let train: Vec<LabeledSample> =
        generate(&p).map_err(js)?.into_iter().filter(|s| s.split == Split::Train).map(|s| s.sample).collect();
    let bound = if tight { LipschitzBound::Tight } else { LipschitzBound::Explicit };
    let mut out = Vec::new();
    let mut record = |calls: usize, model: &LinearMatrixModel| -> Result<(), JsError> {
        out.push(calls as f64);
        out.push(objective(&train, model).map_err(js)?);
        Ok(())
    };
    let mut failure = None;
    match trainer {
        "apg" => {
            let cfg = ApgConfig { lipschitz: bound, ..ApgConfig::new(lambda) };
            apg_fit_observed(&train, &cfg, None, |v| {
                let model = LinearMatrixModel { w: v.w.clone(), b: v.b, lambda };
                if let Err(e) = record(v.iteration, &model) {
                    failure.get_or_insert(e);
                }
            })
            .map_err(js)?;
        }
        "ol_apg" | "ol_iapg" => {
            let mode = if trainer == "ol_apg" { OnlineMode::Exact } else { OnlineMode::Inexact };
            let cfg = OnlineConfig { lipschitz: bound, ..OnlineConfig::new(lambda, mode) };
            online_fit_observed(shuffled(&train, seed), &cfg, |_, t| {
                if let Err(e) = record(t.svd_calls(), &t.model()) {
                    failure.get_or_insert(e);
                }
            })
            .map_err(js)?;
        }
        other => return Err(JsError::new(&format!("unknown trainer {other:?}"))),
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
