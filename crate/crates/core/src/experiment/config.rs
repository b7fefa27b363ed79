//! Experiment configuration and its `key=value` file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::audio::{Corruption, DEFAULT_FRAMES};
use crate::classifier::{ApgConfig, LipschitzBound};
use crate::online::{OnlineConfig, OnlineMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trainer {
    Apg,
    OlApg,
    OlIapg,
    OlApgBatch,
    OlIapgBatch,
}

impl Trainer {
    pub const ALL: [Trainer; 5] =
        [Trainer::Apg, Trainer::OlApg, Trainer::OlIapg, Trainer::OlApgBatch, Trainer::OlIapgBatch];

    pub fn name(self) -> &'static str {
        match self {
            Trainer::Apg => "apg",
            Trainer::OlApg => "ol_apg",
            Trainer::OlIapg => "ol_iapg",
            Trainer::OlApgBatch => "ol_apg_batch",
            Trainer::OlIapgBatch => "ol_iapg_batch",
        }
    }

    /// `None` for the batch solver.
    pub fn online_mode(self) -> Option<OnlineMode> {
        match self {
            Trainer::Apg => None,
            Trainer::OlApg | Trainer::OlApgBatch => Some(OnlineMode::Exact),
            Trainer::OlIapg | Trainer::OlIapgBatch => Some(OnlineMode::Inexact),
        }
    }

    pub fn is_mini_batch(self) -> bool {
        matches!(self, Trainer::OlApgBatch | Trainer::OlIapgBatch)
    }
}

impl fmt::Display for Trainer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trainer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Trainer::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::param(format!("unknown trainer {s:?}")))
    }
}

/// Where corruption is injected for audio entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorruptionDomain {
    /// The raw frame matrix, before RPCA and MFCC.
    #[default]
    Raw,
    /// The MFCC matrix; RPCA then runs on the corrupted features.
    Features,
}

impl FromStr for CorruptionDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(CorruptionDomain::Raw),
            "features" => Ok(CorruptionDomain::Features),
            other => Err(Error::param(format!("unknown corruption domain {other:?}"))),
        }
    }
}

impl fmt::Display for CorruptionDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorruptionDomain::Raw => "raw",
            CorruptionDomain::Features => "features",
        })
    }
}

fn parse_bound(s: &str) -> Result<LipschitzBound> {
    match s {
        "explicit" => Ok(LipschitzBound::Explicit),
        "tight" => Ok(LipschitzBound::Tight),
        other => Err(Error::param(format!("unknown lipschitz bound {other:?}"))),
    }
}

fn bound_name(b: LipschitzBound) -> &'static str {
    match b {
        LipschitzBound::Explicit => "explicit",
        LipschitzBound::Tight => "tight",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub trainer: Trainer,
    pub lambda: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Iteration cap of the batch solver, or of each online inner loop.
    /// `None` picks the solver's default.
    pub max_iter: Option<usize>,
    /// Mini-batch size; only the `*_batch` trainers use it.
    pub batch_size: usize,
    pub lipschitz: LipschitzBound,
    pub corruption: Corruption,
    pub corruption_domain: CorruptionDomain,
    pub use_rpca: bool,
    /// RPCA weight; `None` means `1/√max(m, n)` of each matrix.
    pub rpca_lambda: Option<f64>,
    /// Frames per audio feature matrix.
    pub frames: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trainer: Trainer::Apg,
            lambda: 1.0,
            eps1: ApgConfig::DEFAULT_EPS,
            eps2: ApgConfig::DEFAULT_EPS,
            max_iter: None,
            batch_size: 10,
            lipschitz: LipschitzBound::Explicit,
            corruption: Corruption::None,
            corruption_domain: CorruptionDomain::Raw,
            use_rpca: false,
            rpca_lambda: None,
            frames: DEFAULT_FRAMES,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped; unknown keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("config line {}: expected key=value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::format(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::param(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "trainer" => self.trainer = value.parse()?,
            "lambda" => self.lambda = num(key, value)?,
            "eps1" => self.eps1 = num(key, value)?,
            "eps2" => self.eps2 = num(key, value)?,
            "max_iter" => self.max_iter = Some(num(key, value)?),
            "batch_size" => self.batch_size = num(key, value)?,
            "lipschitz" => self.lipschitz = parse_bound(value)?,
            "snr_db" => self.corruption = Corruption::Wgn { snr_db: num(key, value)? },
            "le_fraction" => self.corruption = Corruption::LargeErrors { fraction: num(key, value)? },
            "corruption" if value == "none" => self.corruption = Corruption::None,
            "corruption_domain" => self.corruption_domain = value.parse()?,
            "use_rpca" => self.use_rpca = num(key, value)?,
            "rpca_lambda" => self.rpca_lambda = Some(num(key, value)?),
            "frames" => self.frames = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::param(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Serialises every field so that `apply_text` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "trainer={}\nlambda={}\neps1={}\neps2={}\n",
            self.trainer, self.lambda, self.eps1, self.eps2
        );
        if let Some(k) = self.max_iter {
            out.push_str(&format!("max_iter={k}\n"));
        }
        out.push_str(&format!("batch_size={}\nlipschitz={}\n", self.batch_size, bound_name(self.lipschitz)));
        match self.corruption {
            Corruption::None => out.push_str("corruption=none\n"),
            Corruption::Wgn { snr_db } => out.push_str(&format!("snr_db={snr_db}\n")),
            Corruption::LargeErrors { fraction } => out.push_str(&format!("le_fraction={fraction}\n")),
        }
        out.push_str(&format!("corruption_domain={}\nuse_rpca={}\n", self.corruption_domain, self.use_rpca));
        if let Some(l) = self.rpca_lambda {
            out.push_str(&format!("rpca_lambda={l}\n"));
        }
        out.push_str(&format!("frames={}\nseed={}\n", self.frames, self.seed));
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.apg_config().validate()?;
        if let Some(cfg) = self.online_config() {
            cfg.validate()?;
        }
        if self.frames == 0 {
            return Err(Error::param("frames must be positive"));
        }
        if let Some(l) = self.rpca_lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::param(format!("rpca_lambda must be positive, got {l}")));
            }
        }
        match self.corruption {
            Corruption::LargeErrors { fraction } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::param(format!("le_fraction must be in (0, 1], got {fraction}")))
            }
            Corruption::Wgn { snr_db } if !snr_db.is_finite() => Err(Error::param("snr_db must be finite")),
            _ => Ok(()),
        }
    }

    pub fn apg_config(&self) -> ApgConfig {
        ApgConfig {
            lambda: self.lambda,
            eps1: self.eps1,
            eps2: self.eps2,
            max_iter: self.max_iter.unwrap_or(ApgConfig::DEFAULT_MAX_ITER),
            lipschitz: self.lipschitz,
        }
    }

    /// `None` for the batch trainer.
    pub fn online_config(&self) -> Option<OnlineConfig> {
        let mode = self.trainer.online_mode()?;
        let mut cfg = OnlineConfig::new(self.lambda, mode);
        cfg.inner_eps1 = self.eps1;
        cfg.inner_eps2 = self.eps2;
        cfg.inner_max_iter = self.max_iter.unwrap_or(OnlineConfig::DEFAULT_INNER_MAX_ITER);
        cfg.batch_size = if self.trainer.is_mini_batch() { self.batch_size } else { 1 };
        cfg.lipschitz = self.lipschitz;
        Some(cfg)
    }
}
