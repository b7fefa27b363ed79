//! Turns manifest entries into labelled feature matrices.
//!
//! WAV entries are framed, optionally corrupted in the raw domain, cleaned
//! by RPCA when requested and converted to MFCCs. Matrix-text entries are
//! used as feature matrices directly: corrupted, then optionally replaced
//! by their low-rank component.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{self, frame_len_for, frame_segment, read_wav};
use crate::classifier::LabeledSample;
use crate::linalg::text::read_matrix_file;
use crate::linalg::Matrix;
use crate::rpca::{rpca_ialm, RpcaConfig};
use crate::{Error, Result};

use super::config::{CorruptionDomain, ExperimentConfig};
use super::manifest::{Manifest, ManifestEntry, Split};

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    /// Manifest paths of `test`, in order.
    pub test_paths: Vec<PathBuf>,
}

fn is_wav(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn rpca_config(cfg: &ExperimentConfig, m: &Matrix) -> RpcaConfig {
    match cfg.rpca_lambda {
        Some(l) => RpcaConfig::new(l),
        None => RpcaConfig::for_shape(m.nrows(), m.ncols()),
    }
}

fn low_rank(cfg: &ExperimentConfig, m: Matrix) -> Result<Matrix> {
    if !cfg.use_rpca {
        return Ok(m);
    }
    let rc = rpca_config(cfg, &m);
    Ok(rpca_ialm(&m.view(), &rc)?.low_rank)
}

/// Feature matrix of one file. `seed` drives its corruption.
pub fn load_feature(path: &Path, cfg: &ExperimentConfig, seed: u64) -> Result<Matrix> {
    if !is_wav(path) {
        let m = read_matrix_file(path)?;
        let m = cfg.corruption.apply(&m.view(), seed)?;
        return low_rank(cfg, m);
    }
    let seg = read_wav(path)?;
    let frames = frame_segment(&seg, frame_len_for(seg.sample_rate), cfg.frames)?;
    match cfg.corruption_domain {
        CorruptionDomain::Raw => {
            let frames = cfg.corruption.apply(&frames.view(), seed)?;
            let frames = low_rank(cfg, frames)?;
            audio::mfcc_rows(&frames.view(), seg.sample_rate)
        }
        CorruptionDomain::Features => {
            let feats = audio::mfcc_rows(&frames.view(), seg.sample_rate)?;
            let feats = cfg.corruption.apply(&feats.view(), seed)?;
            low_rank(cfg, feats)
        }
    }
}

/// Corruption seeds of the first `count` manifest entries.
pub fn entry_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Loads every entry in manifest order, corrupting entry `i` with
/// `entry_seeds(cfg.seed, ..)[i]`. The first entry fixes the feature
/// dimension; a later mismatch aborts with its path.
pub fn load_dataset(manifest: &Manifest, cfg: &ExperimentConfig) -> Result<Dataset> {
    manifest.require_both_splits()?;
    let seeds = entry_seeds(cfg.seed, manifest.entries.len());
    let mut data = Dataset::default();
    let mut dims = None;
    for (index, (entry, &seed)) in manifest.entries.iter().zip(&seeds).enumerate() {
        let sample = load_entry(manifest, entry, cfg, seed).map_err(|e| entry_err(entry, e))?;
        let expected = *dims.get_or_insert(sample.dim());
        if sample.dim() != expected {
            let err = Error::SampleDimension { index, expected, found: sample.dim() };
            return Err(entry_err(entry, err));
        }
        match entry.split {
            Split::Train => data.train.push(sample),
            Split::Test => {
                data.test_paths.push(entry.path.clone());
                data.test.push(sample);
            }
        }
    }
    Ok(data)
}

pub fn load_entry(
    manifest: &Manifest,
    entry: &ManifestEntry,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<LabeledSample> {
    let x = load_feature(&manifest.resolve(entry), cfg, seed)?;
    LabeledSample::new(x, entry.label)
}

pub(crate) fn entry_err(entry: &ManifestEntry, e: Error) -> Error {
    Error::Entry { path: entry.path.display().to_string(), source: Box::new(e) }
}
