//! Trainer dispatch and convergence traces.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{accuracy, apg_fit_observed, objective, LabeledSample, LinearMatrixModel};
use crate::linalg::text::fmt_f64;
use crate::online::online_fit_observed;
use crate::{Error, Result};

use super::config::ExperimentConfig;
use super::dataset::Dataset;

/// One trace row: after batch iteration `t`, or after the online update
/// that brought the sample count to `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    /// Training time so far; evaluation for the trace is excluded.
    pub wall_seconds: f64,
    /// Full objective over the whole training split.
    pub objective: f64,
    /// `NaN` when there is no test split.
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearMatrixModel,
    pub trace: Vec<TraceRow>,
    pub svd_calls: usize,
    /// Batch: whether the stopping rule fired. Online: whether no inner
    /// loop hit its cap.
    pub converged: bool,
}

/// Training order for online trainers: a seeded Fisher–Yates shuffle.
pub fn shuffled(train: &[LabeledSample], seed: u64) -> Vec<LabeledSample> {
    let mut out = train.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

struct Clock {
    spent: Duration,
    since: Instant,
}

impl Clock {
    fn start() -> Self {
        Self { spent: Duration::ZERO, since: Instant::now() }
    }

    fn pause(&mut self) -> f64 {
        self.spent += self.since.elapsed();
        self.spent.as_secs_f64()
    }

    fn resume(&mut self) {
        self.since = Instant::now();
    }
}

pub fn train(data: &Dataset, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::Empty("train split"));
    }
    let mut trace = Vec::new();
    let mut failure: Option<Error> = None;
    let mut evaluate = |t: usize, model: &LinearMatrixModel, clock: &mut Clock| {
        let wall_seconds = clock.pause();
        let row = objective(&data.train, model).and_then(|objective| {
            let test_accuracy = if data.test.is_empty() { f64::NAN } else { accuracy(model, &data.test)? };
            Ok(TraceRow { t, wall_seconds, objective, test_accuracy })
        });
        match row {
            Ok(row) => trace.push(row),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
        clock.resume();
    };

    let mut clock = Clock::start();
    let outcome = match cfg.online_config() {
        None => {
            let fit = apg_fit_observed(&data.train, &cfg.apg_config(), None, |view| {
                let model = LinearMatrixModel { w: view.w.clone(), b: view.b, lambda: cfg.lambda };
                evaluate(view.iteration, &model, &mut clock);
            })?;
            TrainOutcome {
                model: fit.model,
                trace: Vec::new(),
                svd_calls: fit.report.svd_calls,
                converged: fit.report.converged,
            }
        }
        Some(ocfg) => {
            let stream = shuffled(&data.train, cfg.seed);
            let fit = online_fit_observed(stream, &ocfg, |progress, trainer| {
                evaluate(progress.step.t, &trainer.model(), &mut clock);
            })?;
            TrainOutcome {
                model: fit.model,
                trace: Vec::new(),
                svd_calls: fit.svd_calls,
                converged: fit.capped_steps == 0,
            }
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(TrainOutcome { trace, ..outcome })
}

pub const TRACE_HEADER: &str = "t,wall_seconds,objective,test_accuracy";

pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRow]) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{}",
            r.t,
            fmt_f64(r.wall_seconds),
            fmt_f64(r.objective),
            fmt_f64(r.test_accuracy)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::Trainer;
    use crate::experiment::manifest::Split;
    use crate::experiment::synth::{generate, SynthParams};

    fn data(per_class: usize) -> Dataset {
        let p = SynthParams {
            rows: 4,
            cols: 3,
            train_per_class: per_class,
            test_per_class: 5,
            ..Default::default()
        };
        let mut d = Dataset::default();
        for s in generate(&p).unwrap() {
            match s.split {
                Split::Train => d.train.push(s.sample),
                Split::Test => {
                    d.test_paths.push("x".into());
                    d.test.push(s.sample)
                }
            }
        }
        d
    }

    #[test]
    fn trace_lengths() {
        let d = data(25);
        for (trainer, rows) in [(Trainer::OlApg, 50), (Trainer::OlIapg, 50), (Trainer::OlIapgBatch, 10)] {
            let cfg = ExperimentConfig { trainer, batch_size: 5, ..Default::default() };
            let out = train(&d, &cfg).unwrap();
            assert_eq!(out.trace.len(), rows, "{trainer}");
            assert_eq!(out.trace.last().unwrap().t, 50);
        }
        let out = train(&d, &ExperimentConfig { max_iter: Some(30), ..Default::default() }).unwrap();
        assert_eq!(out.trace.len(), out.svd_calls);
        assert!(out.trace.len() <= 30);
    }

    #[test]
    fn time_is_monotone_and_final_row_matches_model() {
        let d = data(10);
        let cfg = ExperimentConfig { trainer: Trainer::OlApg, ..Default::default() };
        let out = train(&d, &cfg).unwrap();
        assert!(out.trace.windows(2).all(|w| w[0].wall_seconds <= w[1].wall_seconds));
        let last = out.trace.last().unwrap();
        assert_eq!(last.objective, objective(&d.train, &out.model).unwrap());
        assert_eq!(last.test_accuracy, accuracy(&out.model, &d.test).unwrap());
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let d = data(10);
        let a = shuffled(&d.train, 1);
        assert_eq!(a, shuffled(&d.train, 1));
        assert_ne!(a, shuffled(&d.train, 2));
        let mut ys: Vec<f64> = a.iter().map(|s| s.y).collect();
        ys.sort_by(f64::total_cmp);
        assert_eq!(ys.iter().filter(|&&y| y > 0.0).count(), 10);
    }

    #[test]
    fn trace_csv_format() {
        let mut buf = Vec::new();
        let row = TraceRow { t: 3, wall_seconds: 0.5, objective: 0.1, test_accuracy: 1.0 };
        write_trace(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,wall_seconds,objective,test_accuracy\n3,5.0000000000000000e-1,1.0000000000000001e-1,1.0000000000000000e0\n"
        );
    }
}
