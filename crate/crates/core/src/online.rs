//! Online trainers driven by sufficient statistics.
//!
//! After `t` samples the statistics `A = Σ yX`, `B = Σ X⊗X`, `c = Σ y`,
//! `D = Σ X` and `L` reproduce the full-data gradient
//! `−2A + 2·GridTr(W, B) + 2bD` without keeping any sample around. Each
//! arriving sample (or mini-batch) updates them, then the model is refined
//! from the previous one as a warm start, either by a full inner APG solve
//! or by exactly two proximal steps.

use ndarray::ArrayView2;

use crate::classifier::{validate_common, LabeledSample, LinearMatrixModel, LipschitzBound, StepChange};
use crate::linalg::{
    ensure_dims, grid_tr, nuclear_norm, singular_value_threshold, trace_inner, KronStats, Matrix,
};
use crate::{Error, Result};

/// Largest `m·n` accepted; `B` holds `(m·n)²` entries.
pub const MAX_CELLS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSufficientStats {
    /// `Σ yₜ Xₜ`
    pub a: Matrix,
    /// `Σ Xₜ ⊗ Xₜ`
    pub b: KronStats,
    /// `Σ yₜ`
    pub c: f64,
    /// `Σ Xₜ`
    pub d: Matrix,
    /// Accumulated Lipschitz constant.
    pub lipschitz: f64,
    /// Number of samples folded in.
    pub t: usize,
    /// `Σ yₜ²`, equal to `t` for ±1 labels; kept for the loss identity.
    y_sq: f64,
    bound: LipschitzBound,
}

impl OnlineSufficientStats {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        Self::with_bound(rows, cols, LipschitzBound::Explicit)
    }

    pub fn with_bound(rows: usize, cols: usize, bound: LipschitzBound) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("sample dimensions must be positive"));
        }
        if rows * cols > MAX_CELLS {
            return Err(Error::TooLarge { rows, cols, limit: MAX_CELLS });
        }
        Ok(Self {
            a: Matrix::zeros((rows, cols)),
            b: KronStats::zeros(rows, cols),
            c: 0.0,
            d: Matrix::zeros((rows, cols)),
            lipschitz: 0.0,
            t: 0,
            y_sq: 0.0,
            bound,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.a.dim()
    }

    /// Folds a batch in, sample by sample in order. The batch is checked
    /// up front, so a dimension error leaves the statistics untouched.
    pub fn update(&mut self, batch: &[LabeledSample]) -> Result<()> {
        let dims = self.dims();
        for (index, s) in batch.iter().enumerate() {
            if s.dim() != dims {
                return Err(Error::SampleDimension { index, expected: dims, found: s.dim() });
            }
        }
        let factor = 2.0 * self.bound.dim_factor(dims.0, dims.1);
        for s in batch {
            self.a.scaled_add(s.y, &s.x);
            self.b.accumulate(&s.x.view())?;
            self.c += s.y;
            self.d += &s.x;
            self.lipschitz += factor * s.x.iter().map(|x| x * x).sum::<f64>();
            self.y_sq += s.y * s.y;
            self.t += 1;
        }
        Ok(())
    }

    /// `−2A + 2·GridTr(Z, B) + 2bD`, the gradient of the squared loss over
    /// every sample seen so far.
    pub fn surrogate_gradient(&self, z: &ArrayView2<f64>, b: f64) -> Result<Matrix> {
        ensure_dims(z, self.dims())?;
        let mut g = grid_tr(z, &self.b)?;
        g *= 2.0;
        g.scaled_add(-2.0, &self.a);
        g.scaled_add(2.0 * b, &self.d);
        Ok(g)
    }

    /// Squared loss over the accumulated set, expanded in the statistics:
    /// `Σy² − 2⟨W,A⟩ − 2bc + ⟨W, GridTr(W,B)⟩ + 2b⟨W,D⟩ + t·b²`.
    pub fn smooth_loss(&self, w: &ArrayView2<f64>, b: f64) -> Result<f64> {
        ensure_dims(w, self.dims())?;
        let quad = trace_inner(w, &grid_tr(w, &self.b)?.view());
        let loss = self.y_sq - 2.0 * trace_inner(w, &self.a.view()) - 2.0 * b * self.c
            + quad
            + 2.0 * b * trace_inner(w, &self.d.view())
            + self.t as f64 * b * b;
        // cancellation can leave a tiny negative value
        Ok(loss.max(0.0))
    }

    /// Exact bias for `W` over the accumulated set: `(c − ⟨W, D⟩) / t`.
    pub fn bias_for(&self, w: &ArrayView2<f64>) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        (self.c - trace_inner(w, &self.d.view())) / self.t as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineMode {
    /// Solve each subproblem with an inner APG loop.
    Exact,
    /// Two proximal steps per arrival, bias refit once afterwards.
    Inexact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineConfig {
    pub lambda: f64,
    pub inner_eps1: f64,
    pub inner_eps2: f64,
    pub inner_max_iter: usize,
    pub mode: OnlineMode,
    /// Samples folded into the statistics per update.
    pub batch_size: usize,
    pub lipschitz: LipschitzBound,
}

impl OnlineConfig {
    pub const DEFAULT_INNER_MAX_ITER: usize = 200;

    pub fn new(lambda: f64, mode: OnlineMode) -> Self {
        Self {
            lambda,
            inner_eps1: 1e-8,
            inner_eps2: 1e-8,
            inner_max_iter: Self::DEFAULT_INNER_MAX_ITER,
            mode,
            batch_size: 1,
            lipschitz: LipschitzBound::Explicit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.lambda, self.inner_eps1, self.inner_eps2, self.inner_max_iter)?;
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Report for one processed sample or mini-batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineStep {
    /// 1-based update index.
    pub step: usize,
    /// Samples seen so far.
    pub t: usize,
    pub inner_iterations: usize,
    /// False when the exact inner loop hit its cap.
    pub converged: bool,
    pub last_change: StepChange,
    pub svd_calls: usize,
}

/// Single-owner online learner.
#[derive(Debug, Clone)]
pub struct OnlineTrainer {
    cfg: OnlineConfig,
    stats: OnlineSufficientStats,
    w: Matrix,
    b: f64,
    steps: usize,
    svd_calls: usize,
}

impl OnlineTrainer {
    pub fn new(rows: usize, cols: usize, cfg: OnlineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            stats: OnlineSufficientStats::with_bound(rows, cols, cfg.lipschitz)?,
            w: Matrix::zeros((rows, cols)),
            b: 0.0,
            steps: 0,
            svd_calls: 0,
            cfg,
        })
    }

    pub fn stats(&self) -> &OnlineSufficientStats {
        &self.stats
    }

    pub fn model(&self) -> LinearMatrixModel {
        LinearMatrixModel { w: self.w.clone(), b: self.b, lambda: self.cfg.lambda }
    }

    pub fn svd_calls(&self) -> usize {
        self.svd_calls
    }

    /// Objective `F_t(W, b)` of the current model over every sample seen.
    pub fn objective(&self) -> Result<f64> {
        Ok(self.stats.smooth_loss(&self.w.view(), self.b)? + self.cfg.lambda * nuclear_norm(&self.w.view())?)
    }

    /// Folds in one sample or mini-batch and refines the model.
    pub fn push(&mut self, batch: &[LabeledSample]) -> Result<OnlineStep> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        self.stats.update(batch)?;
        self.steps += 1;
        let before = self.svd_calls;
        let (inner_iterations, converged, last_change) = if self.stats.lipschitz == 0.0 {
            // only zero samples so far: nothing to learn about W
            let b = self.stats.bias_for(&self.w.view());
            let change = StepChange::between(&self.w, &self.w, self.b, b);
            self.b = b;
            (0, true, change)
        } else {
            match self.cfg.mode {
                OnlineMode::Exact => self.inner_apg()?,
                OnlineMode::Inexact => self.two_step()?,
            }
        };
        Ok(OnlineStep {
            step: self.steps,
            t: self.stats.t,
            inner_iterations,
            converged,
            last_change,
            svd_calls: self.svd_calls - before,
        })
    }

    fn prox(&mut self, z: &Matrix, b: f64) -> Result<Matrix> {
        let step = 1.0 / self.stats.lipschitz;
        let mut target = self.stats.surrogate_gradient(&z.view(), b)?;
        target *= -step;
        target += z;
        self.svd_calls += 1;
        singular_value_threshold(&target.view(), self.cfg.lambda * step)
    }

    /// Warm-started APG with the bias refit after every inner step.
    fn inner_apg(&mut self) -> Result<(usize, bool, StepChange)> {
        let mut w_prev = self.w.clone();
        let mut z = self.w.clone();
        let mut b = self.b;
        let mut alpha = 1.0_f64;
        let mut change = StepChange { weight: f64::INFINITY, bias: f64::INFINITY };
        let mut k = 0;
        let mut converged = false;
        while k < self.cfg.inner_max_iter {
            k += 1;
            let w = self.prox(&z, b)?;
            let alpha_next = (1.0 + (1.0 + 4.0 * alpha * alpha).sqrt()) / 2.0;
            z = &w + &((&w - &w_prev) * ((alpha - 1.0) / alpha_next));
            let b_next = self.stats.bias_for(&w.view());
            change = StepChange::between(&w_prev, &w, b, b_next);
            w_prev = w;
            b = b_next;
            alpha = alpha_next;
            if change.within(self.cfg.inner_eps1, self.cfg.inner_eps2) {
                converged = true;
                break;
            }
        }
        self.w = w_prev;
        self.b = b;
        Ok((k, converged, change))
    }

    /// Two proximal steps at the previous bias, then one bias refit.
    fn two_step(&mut self) -> Result<(usize, bool, StepChange)> {
        let w1 = self.prox(&self.w.clone(), self.b)?;
        let w2 = self.prox(&w1, self.b)?;
        let b = self.stats.bias_for(&w2.view());
        let change = StepChange::between(&self.w, &w2, self.b, b);
        self.w = w2;
        self.b = b;
        Ok((2, true, change))
    }
}

/// What an observer sees after each update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineProgress {
    pub step: OnlineStep,
    /// Objective of the current model over every sample seen so far.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct OnlineFit {
    pub model: LinearMatrixModel,
    pub stats: OnlineSufficientStats,
    pub steps: usize,
    pub svd_calls: usize,
    /// Updates whose exact inner loop hit `inner_max_iter`.
    pub capped_steps: usize,
}

pub fn online_fit<I>(stream: I, cfg: &OnlineConfig) -> Result<OnlineFit>
where
    I: IntoIterator<Item = LabeledSample>,
{
    online_fit_observed(stream, cfg, |_, _| {})
}

/// Streams samples through an [`OnlineTrainer`] in batches of
/// `cfg.batch_size` (a trailing partial batch is processed as is). The
/// observer runs after every update and may inspect the trainer.
pub fn online_fit_observed<I>(
    stream: I,
    cfg: &OnlineConfig,
    mut observe: impl FnMut(&OnlineProgress, &OnlineTrainer),
) -> Result<OnlineFit>
where
    I: IntoIterator<Item = LabeledSample>,
{
    cfg.validate()?;
    let mut trainer: Option<OnlineTrainer> = None;
    let mut batch: Vec<LabeledSample> = Vec::with_capacity(cfg.batch_size);
    let mut capped = 0usize;

    let mut flush = |batch: &mut Vec<LabeledSample>, trainer: &mut OnlineTrainer| -> Result<()> {
        let step = trainer.push(batch)?;
        batch.clear();
        if !step.converged {
            capped += 1;
        }
        let progress = OnlineProgress { step, objective: trainer.objective()? };
        observe(&progress, trainer);
        Ok(())
    };

    for (index, sample) in stream.into_iter().enumerate() {
        let tr = match trainer.as_mut() {
            Some(tr) => tr,
            None => {
                let (m, n) = sample.dim();
                trainer.insert(OnlineTrainer::new(m, n, *cfg)?)
            }
        };
        if sample.dim() != tr.stats.dims() {
            return Err(Error::SampleDimension { index, expected: tr.stats.dims(), found: sample.dim() });
        }
        batch.push(sample);
        if batch.len() == cfg.batch_size {
            flush(&mut batch, tr)?;
        }
    }
    let mut trainer = trainer.ok_or(Error::Empty("sample stream"))?;
    if !batch.is_empty() {
        flush(&mut batch, &mut trainer)?;
    }
    Ok(OnlineFit {
        model: trainer.model(),
        steps: trainer.steps,
        svd_calls: trainer.svd_calls,
        stats: trainer.stats,
        capped_steps: capped,
    })
}
