//! Accuracy under corruption, with and without low-rank features.

use std::io::Write;
use std::time::Instant;

use crate::audio::Corruption;
use crate::classifier::accuracy;
use crate::linalg::text::fmt_f64;
use crate::Result;

use super::config::ExperimentConfig;
use super::dataset::load_dataset;
use super::manifest::Manifest;
use super::train::train;

/// Clean, WGN at +5/0/−5 dB, large errors at 10/30/50%.
pub const CONDITIONS: [Corruption; 7] = [
    Corruption::None,
    Corruption::Wgn { snr_db: 5.0 },
    Corruption::Wgn { snr_db: 0.0 },
    Corruption::Wgn { snr_db: -5.0 },
    Corruption::LargeErrors { fraction: 0.1 },
    Corruption::LargeErrors { fraction: 0.3 },
    Corruption::LargeErrors { fraction: 0.5 },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    Plain,
    Rpca,
}

impl FeatureMode {
    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Plain => "plain",
            FeatureMode::Rpca => "rpca",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessRow {
    pub condition: Corruption,
    pub mode: FeatureMode,
    /// The cell's result, or the error that stopped it.
    pub outcome: std::result::Result<CellResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub accuracy: f64,
    pub train_seconds: f64,
}

/// Runs one cell: load with the cell's corruption and feature mode, train,
/// and score the test split.
pub fn run_cell(
    manifest: &Manifest,
    base: &ExperimentConfig,
    condition: Corruption,
    mode: FeatureMode,
) -> Result<CellResult> {
    let cfg = ExperimentConfig { corruption: condition, use_rpca: mode == FeatureMode::Rpca, ..base.clone() };
    let data = load_dataset(manifest, &cfg)?;
    let start = Instant::now();
    let outcome = train(&data, &cfg)?;
    let train_seconds = start.elapsed().as_secs_f64();
    Ok(CellResult { accuracy: accuracy(&outcome.model, &data.test)?, train_seconds })
}

/// All 14 cells in table order: conditions outer, plain before RPCA.
/// A failing cell is recorded and the sweep continues.
pub fn run_robustness(manifest: &Manifest, base: &ExperimentConfig) -> Vec<RobustnessRow> {
    let mut rows = Vec::with_capacity(2 * CONDITIONS.len());
    for condition in CONDITIONS {
        for mode in [FeatureMode::Plain, FeatureMode::Rpca] {
            let outcome = run_cell(manifest, base, condition, mode).map_err(|e| e.to_string());
            rows.push(RobustnessRow { condition, mode, outcome });
        }
    }
    rows
}

pub const ROBUSTNESS_HEADER: &str = "condition,feature_mode,accuracy,train_seconds,error";

/// Failed cells get empty numeric fields and the error message.
pub fn write_robustness<W: Write>(mut w: W, rows: &[RobustnessRow]) -> Result<()> {
    writeln!(w, "{ROBUSTNESS_HEADER}")?;
    for r in rows {
        let (acc, secs, err) = match &r.outcome {
            Ok(c) => (fmt_f64(c.accuracy), fmt_f64(c.train_seconds), String::new()),
            Err(e) => (String::new(), String::new(), format!("\"{}\"", e.replace('"', "'"))),
        };
        writeln!(w, "{},{},{acc},{secs},{err}", r.condition.label(), r.mode.name())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::manifest::{ManifestEntry, Split};
    use crate::experiment::synth::{generate, SynthParams};
    use crate::linalg::text::write_matrix_file;

    #[test]
    fn fourteen_rows_and_failures_marked() {
        let dir = tempfile::tempdir().unwrap();
        let p = SynthParams { rows: 6, cols: 5, train_per_class: 4, test_per_class: 2, ..Default::default() };
        let mut entries = Vec::new();
        for (i, s) in generate(&p).unwrap().into_iter().enumerate() {
            let name = format!("s{i}.txt");
            write_matrix_file(&dir.path().join(&name), &s.sample.x).unwrap();
            entries.push(ManifestEntry { path: name.into(), label: s.sample.y, split: s.split });
        }
        entries.push(ManifestEntry { path: "missing.txt".into(), label: 1.0, split: Split::Test });
        let broken = Manifest::new(entries.clone(), dir.path());
        entries.pop();
        let ok = Manifest::new(entries, dir.path());

        let base = ExperimentConfig { max_iter: Some(50), ..Default::default() };
        let rows = run_robustness(&ok, &base);
        assert_eq!(rows.len(), 14);
        assert!(rows.iter().all(|r| r.outcome.is_ok()));

        let rows = run_robustness(&broken, &base);
        assert_eq!(rows.len(), 14);
        assert!(rows.iter().all(|r| r.outcome.as_ref().unwrap_err().contains("missing.txt")));
        let mut buf = Vec::new();
        write_robustness(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 15);
        assert!(text.lines().nth(1).unwrap().starts_with("clean,plain,,,\""));
    }
}
