//! Linear matrix classifier `ŷ = Tr(WᵀX) + b` trained on the squared loss
//! with a trace-norm penalty `λ‖W‖_*`, by accelerated proximal gradient
//! with a fixed, explicit step size.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use ndarray::ArrayView2;

use crate::linalg::text::{append_rows, fmt_f64, next_content_line, parse_dims, read_rows};
use crate::linalg::{
    ensure_dims, ensure_finite, frobenius, nuclear_norm, singular_value_threshold, trace_inner, Matrix,
};
use crate::{Error, Result};

/// One training instance `(X, y)` with `y ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Matrix,
    pub y: f64,
}

impl LabeledSample {
    pub fn new(x: Matrix, y: f64) -> Result<Self> {
        if y != 1.0 && y != -1.0 {
            return Err(Error::param(format!("label must be -1 or +1, got {y}")));
        }
        ensure_finite(&x.view())?;
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.x.dim()
    }
}

/// Checks that the set is non-empty and dimension-consistent; returns `(m, n)`.
pub fn sample_dims(samples: &[LabeledSample]) -> Result<(usize, usize)> {
    let first = samples.first().ok_or(Error::Empty("sample list"))?;
    let expected = first.dim();
    for (index, s) in samples.iter().enumerate().skip(1) {
        if s.dim() != expected {
            return Err(Error::SampleDimension { index, expected, found: s.dim() });
        }
    }
    Ok(expected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMatrixModel {
    pub w: Matrix,
    pub b: f64,
    pub lambda: f64,
}

impl LinearMatrixModel {
    pub fn zeros(rows: usize, cols: usize, lambda: f64) -> Self {
        Self { w: Matrix::zeros((rows, cols)), b: 0.0, lambda }
    }

    /// Serialises as `W m n`, the rows of `W`, then `b <value>` and
    /// `lambda <value>`, all with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "W {} {}", self.w.nrows(), self.w.ncols());
        append_rows(&mut out, &self.w);
        let _ = writeln!(out, "b {}", fmt_f64(self.b));
        let _ = writeln!(out, "lambda {}", fmt_f64(self.lambda));
        out
    }

    pub fn from_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = next_content_line(&mut lines)?.ok_or_else(|| Error::format("empty model file"))?;
        let dims = header
            .strip_prefix("W ")
            .and_then(|rest| parse_dims(rest, 2))
            .ok_or_else(|| Error::format(format!("bad model header {header:?}")))?;
        let w = read_rows(&mut lines, dims[0], dims[1])?;
        let b = keyed_value(&mut lines, "b")?;
        let lambda = keyed_value(&mut lines, "lambda")?;
        if let Some(extra) = next_content_line(&mut lines)? {
            return Err(Error::format(format!("trailing content {extra:?}")));
        }
        Ok(Self { w, b, lambda })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_text(std::io::BufReader::new(f))
    }
}

fn keyed_value<I>(lines: &mut I, key: &str) -> Result<f64>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let line = next_content_line(lines)?.ok_or_else(|| Error::format(format!("missing {key}")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::format(format!("bad {key} value {v:?}"))),
        _ => Err(Error::format(format!("expected \"{key} <value>\", got {line:?}"))),
    }
}

/// Residual `y − Tr(WᵀX) − b` of one sample.
#[inline]
fn residual(s: &LabeledSample, w: &ArrayView2<f64>, b: f64) -> f64 {
    s.y - trace_inner(w, &s.x.view()) - b
}

/// Smooth part `f_s(W, b) = Σᵢ (yᵢ − Tr(WᵀXᵢ) − b)²`.
pub fn smooth_loss(samples: &[LabeledSample], w: &ArrayView2<f64>, b: f64) -> Result<f64> {
    let dims = sample_dims(samples)?;
    ensure_dims(w, dims)?;
    Ok(samples.iter().map(|s| residual(s, w, b).powi(2)).sum())
}

/// Full objective `f_s(W, b) + λ‖W‖_*`.
pub fn objective(samples: &[LabeledSample], model: &LinearMatrixModel) -> Result<f64> {
    let loss = smooth_loss(samples, &model.w.view(), model.b)?;
    Ok(loss + model.lambda * nuclear_norm(&model.w.view())?)
}

/// `∇_W f_s(W, b) = −2 Σᵢ (yᵢ − Tr(WᵀXᵢ) − b) Xᵢ`.
pub fn gradient(samples: &[LabeledSample], w: &ArrayView2<f64>, b: f64) -> Result<Matrix> {
    let dims = sample_dims(samples)?;
    ensure_dims(w, dims)?;
    let mut g = Matrix::zeros(dims);
    for s in samples {
        g.scaled_add(-2.0 * residual(s, w, b), &s.x);
    }
    Ok(g)
}

/// Which Lipschitz constant fixes the step size `1/L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LipschitzBound {
    /// `L = 2mn Σ‖Xᵢ‖_F²`.
    #[default]
    Explicit,
    /// `L = 2 Σ‖Xᵢ‖_F²`, the Cauchy–Schwarz bound. Larger steps, same
    /// guarantee.
    Tight,
}

impl LipschitzBound {
    /// Factor multiplying `2 Σ‖Xᵢ‖_F²` for `m × n` samples.
    pub fn dim_factor(self, rows: usize, cols: usize) -> f64 {
        match self {
            LipschitzBound::Explicit => (rows * cols) as f64,
            LipschitzBound::Tight => 1.0,
        }
    }
}

/// `2mn Σᵢ ‖Xᵢ‖_F²`.
pub fn lipschitz_constant(samples: &[LabeledSample]) -> Result<f64> {
    lipschitz_with(samples, LipschitzBound::Explicit)
}

pub fn lipschitz_with(samples: &[LabeledSample], bound: LipschitzBound) -> Result<f64> {
    let (m, n) = sample_dims(samples)?;
    let energy: f64 = samples.iter().map(|s| s.x.iter().map(|x| x * x).sum::<f64>()).sum();
    Ok(2.0 * bound.dim_factor(m, n) * energy)
}

/// Exact minimiser over `b` with `W` fixed: the mean of `yᵢ − Tr(WᵀXᵢ)`.
pub fn bias_update(samples: &[LabeledSample], w: &ArrayView2<f64>) -> Result<f64> {
    let dims = sample_dims(samples)?;
    ensure_dims(w, dims)?;
    let total: f64 = samples.iter().map(|s| residual(s, w, 0.0)).sum();
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApgConfig {
    pub lambda: f64,
    /// Relative weight-change tolerance.
    pub eps1: f64,
    /// Relative bias-change tolerance.
    pub eps2: f64,
    pub max_iter: usize,
    pub lipschitz: LipschitzBound,
}

impl ApgConfig {
    pub const DEFAULT_EPS: f64 = 1e-8;
    pub const DEFAULT_MAX_ITER: usize = 2000;

    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            eps1: Self::DEFAULT_EPS,
            eps2: Self::DEFAULT_EPS,
            max_iter: Self::DEFAULT_MAX_ITER,
            lipschitz: LipschitzBound::Explicit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.lambda, self.eps1, self.eps2, self.max_iter)
    }
}

pub(crate) fn validate_common(lambda: f64, eps1: f64, eps2: f64, max_iter: usize) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("lambda must be > 0, got {lambda}")));
    }
    if !(eps1 > 0.0 && eps2 > 0.0) {
        return Err(Error::param("tolerances must be > 0"));
    }
    if max_iter == 0 {
        return Err(Error::param("max_iter must be positive"));
    }
    Ok(())
}

/// Relative changes between consecutive iterates, with denominators
/// guarded by `max(1, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChange {
    pub weight: f64,
    pub bias: f64,
}

impl StepChange {
    pub fn between(w_old: &Matrix, w_new: &Matrix, b_old: f64, b_new: f64) -> Self {
        Self {
            weight: frobenius(&(w_new - w_old).view()) / frobenius(&w_old.view()).max(1.0),
            bias: (b_new - b_old).abs() / b_old.abs().max(1.0),
        }
    }

    pub fn within(&self, eps1: f64, eps2: f64) -> bool {
        self.weight < eps1 && self.bias < eps2
    }
}

/// Outcome of an iterative fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    pub last_change: StepChange,
    pub svd_calls: usize,
}

#[derive(Debug, Clone)]
pub struct ApgFit {
    pub model: LinearMatrixModel,
    pub report: FitReport,
}

/// State after one outer APG iteration, handed to observers.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub iteration: usize,
    pub w: &'a Matrix,
    pub b: f64,
    pub change: StepChange,
}

pub fn apg_fit(
    samples: &[LabeledSample],
    cfg: &ApgConfig,
    warm: Option<&LinearMatrixModel>,
) -> Result<ApgFit> {
    apg_fit_observed(samples, cfg, warm, |_| {})
}

/// Batch APG. Each iteration takes a proximal step on `W` from the
/// extrapolated point `Z`, advances the momentum sequence, and then
/// refits the bias exactly for the new `W`.
pub fn apg_fit_observed(
    samples: &[LabeledSample],
    cfg: &ApgConfig,
    warm: Option<&LinearMatrixModel>,
    mut observe: impl FnMut(&IterationView<'_>),
) -> Result<ApgFit> {
    cfg.validate()?;
    let dims = sample_dims(samples)?;
    let (mut w_prev, mut b) = match warm {
        Some(m) => {
            ensure_dims(&m.w.view(), dims)?;
            (m.w.clone(), m.b)
        }
        None => (Matrix::zeros(dims), 0.0),
    };
    let lipschitz = lipschitz_with(samples, cfg.lipschitz)?;
    if lipschitz == 0.0 {
        // all-zero samples: W is irrelevant, only the bias matters
        let b = bias_update(samples, &w_prev.view())?;
        return Ok(ApgFit {
            model: LinearMatrixModel { w: w_prev, b, lambda: cfg.lambda },
            report: FitReport {
                iterations: 0,
                converged: true,
                last_change: StepChange { weight: 0.0, bias: 0.0 },
                svd_calls: 0,
            },
        });
    }
    let step = 1.0 / lipschitz;
    let mut z = w_prev.clone();
    let mut alpha = 1.0_f64;
    let mut change = StepChange { weight: f64::INFINITY, bias: f64::INFINITY };
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut target = gradient(samples, &z.view(), b)?;
        target *= -step;
        target += &z;
        let w = singular_value_threshold(&target.view(), cfg.lambda * step)?;
        let alpha_next = (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt()) / 2.0;
        let momentum = (alpha - 1.0) / alpha_next;
        z = &w + &((&w - &w_prev) * momentum);
        let b_next = bias_update(samples, &w.view())?;

        change = StepChange::between(&w_prev, &w, b, b_next);
        w_prev = w;
        b = b_next;
        alpha = alpha_next;
        observe(&IterationView { iteration: iterations, w: &w_prev, b, change });
        if change.within(cfg.eps1, cfg.eps2) {
            converged = true;
            break;
        }
    }

    Ok(ApgFit {
        model: LinearMatrixModel { w: w_prev, b, lambda: cfg.lambda },
        report: FitReport { iterations, converged, last_change: change, svd_calls: iterations },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    pub label: f64,
}

/// Score `Tr(WᵀX) + b`; label `+1` when the score is non-negative.
pub fn predict(model: &LinearMatrixModel, x: &ArrayView2<f64>) -> Result<Prediction> {
    ensure_dims(x, model.w.dim())?;
    let score = trace_inner(&model.w.view(), x) + model.b;
    Ok(Prediction { score, label: if score >= 0.0 { 1.0 } else { -1.0 } })
}

/// Fraction of samples whose predicted label matches.
pub fn accuracy(model: &LinearMatrixModel, samples: &[LabeledSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut correct = 0usize;
    for s in samples {
        if predict(model, &s.x.view())?.label == s.y {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}
