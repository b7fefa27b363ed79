use ndarray::ArrayView2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Uniform};

use crate::linalg::{ensure_finite, frobenius, max_abs, Matrix};
use crate::{Error, Result};

/// Adds i.i.d. Gaussian noise whose power is `‖M‖²_F/(mn) / 10^(snr_db/10)`.
pub fn add_wgn(m: &ArrayView2<f64>, snr_db: f64, seed: u64) -> Result<Matrix> {
    ensure_finite(m)?;
    if !snr_db.is_finite() {
        return Err(Error::param(format!("SNR must be finite, got {snr_db}")));
    }
    let cells = m.len() as f64;
    let signal_power = frobenius(m).powi(2) / cells;
    if signal_power == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let sd = (signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sd).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = m.to_owned();
    out.iter_mut().for_each(|x| *x += rng.sample(normal));
    Ok(out)
}

/// Replaces `round(fraction·mn)` distinct entries with values uniform in
/// `[−5σ, 5σ]`, `σ = max|M|`.
pub fn add_large_errors(m: &ArrayView2<f64>, fraction: f64, seed: u64) -> Result<Matrix> {
    add_large_errors_with_positions(m, fraction, seed).map(|(out, _)| out)
}

/// [`add_large_errors`] plus the sorted row-major indices that were replaced.
pub fn add_large_errors_with_positions(
    m: &ArrayView2<f64>,
    fraction: f64,
    seed: u64,
) -> Result<(Matrix, Vec<usize>)> {
    ensure_finite(m)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("error fraction must be in (0, 1], got {fraction}")));
    }
    let cells = m.len();
    let count = (fraction * cells as f64).round() as usize;
    let mut out = m.as_standard_layout().into_owned();
    if count == 0 {
        return Ok((out, Vec::new()));
    }
    let sigma = max_abs(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = index::sample(&mut rng, cells, count).into_vec();
    positions.sort_unstable();
    let flat = out.as_slice_mut().expect("standard layout");
    if sigma > 0.0 {
        let dist =
            Uniform::new_inclusive(-5.0 * sigma, 5.0 * sigma).map_err(|e| Error::param(e.to_string()))?;
        for &p in &positions {
            flat[p] = rng.sample(dist);
        }
    }
    Ok((out, positions))
}

/// How an experiment damages its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Corruption {
    #[default]
    None,
    Wgn {
        snr_db: f64,
    },
    LargeErrors {
        fraction: f64,
    },
}

impl Corruption {
    pub fn apply(&self, m: &ArrayView2<f64>, seed: u64) -> Result<Matrix> {
        match *self {
            Corruption::None => Ok(m.to_owned()),
            Corruption::Wgn { snr_db } => add_wgn(m, snr_db, seed),
            Corruption::LargeErrors { fraction } => add_large_errors(m, fraction, seed),
        }
    }

    /// Short name used in result tables, e.g. `wgn_-5db`, `le_30pct`.
    pub fn label(&self) -> String {
        match *self {
            Corruption::None => "clean".into(),
            Corruption::Wgn { snr_db } => format!("wgn_{snr_db}db"),
            Corruption::LargeErrors { fraction } => format!("le_{}pct", (fraction * 100.0).round()),
        }
    }
}
