//! Per-row MFCCs: Hamming window, zero-padded FFT, triangular mel
//! filterbank from 0 Hz to Nyquist, log, orthonormal DCT-II. Each output
//! row is `c1..c12` followed by the log frame energy.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::ArrayView2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::linalg::{ensure_finite, Matrix};
use crate::{Error, Result};

pub const MEL_FILTERS: usize = 26;
pub const NUM_CEPSTRA: usize = 12;
/// Cepstra plus the log-energy column.
pub const MFCC_COLS: usize = NUM_CEPSTRA + 1;
/// Floor applied before every logarithm.
pub const ENERGY_FLOOR: f64 = 1e-10;

const MIN_FRAME: usize = 32;

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// `MEL_FILTERS + 2` band edges in Hz, equally spaced on the mel scale.
fn band_edges(sample_rate: u32) -> Vec<f64> {
    let top = hz_to_mel(sample_rate as f64 / 2.0);
    (0..MEL_FILTERS + 2).map(|k| mel_to_hz(top * k as f64 / (MEL_FILTERS + 1) as f64)).collect()
}

/// Center frequency of each mel filter in Hz.
pub fn mel_filter_centers(sample_rate: u32) -> Vec<f64> {
    band_edges(sample_rate)[1..=MEL_FILTERS].to_vec()
}

struct Frontend {
    frame_len: usize,
    fft: Arc<dyn Fft<f64>>,
    fft_len: usize,
    window: Vec<f64>,
    /// `weights[k][bin]` for bins `0..=fft_len/2`.
    weights: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
}

impl Frontend {
    fn new(frame_len: usize, sample_rate: u32) -> Result<Self> {
        if frame_len < MIN_FRAME {
            return Err(Error::param(format!(
                "MFCC needs at least {MIN_FRAME} samples per row, got {frame_len}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        let fft_len = frame_len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let window = (0..frame_len)
            .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (frame_len - 1) as f64).cos())
            .collect();

        let edges = band_edges(sample_rate);
        let bins = fft_len / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_len as f64;
        let weights = (0..MEL_FILTERS)
            .map(|k| {
                let (lo, mid, hi) = (edges[k], edges[k + 1], edges[k + 2]);
                (0..bins)
                    .map(|b| {
                        let f = b as f64 * bin_hz;
                        if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        }
                    })
                    .collect()
            })
            .collect();

        let n = MEL_FILTERS as f64;
        let dct = (1..=NUM_CEPSTRA)
            .map(|k| {
                (0..MEL_FILTERS)
                    .map(|i| (2.0 / n).sqrt() * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .collect()
            })
            .collect();

        Ok(Self { frame_len, fft, fft_len, window, weights, dct })
    }

    fn filter_energies(&self, frame: &[f64]) -> Vec<f64> {
        debug_assert_eq!(frame.len(), self.frame_len);
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.fft_len)
            .collect();
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..=self.fft_len / 2].iter().map(|c| c.norm_sqr()).collect();
        self.weights.iter().map(|w| w.iter().zip(&power).map(|(a, p)| a * p).sum()).collect()
    }

    fn row(&self, frame: &[f64], out: &mut [f64]) {
        let log_bands: Vec<f64> =
            self.filter_energies(frame).into_iter().map(|e| e.max(ENERGY_FLOOR).ln()).collect();
        for (c, basis) in out.iter_mut().zip(&self.dct) {
            *c = basis.iter().zip(&log_bands).map(|(a, b)| a * b).sum();
        }
        let energy: f64 = frame.iter().map(|x| x * x).sum();
        out[NUM_CEPSTRA] = energy.max(ENERGY_FLOOR).ln();
    }
}

/// Mel filterbank energies (before the log) of a single frame.
pub fn mel_filterbank_energies(frame: &[f64], sample_rate: u32) -> Result<Vec<f64>> {
    Ok(Frontend::new(frame.len(), sample_rate)?.filter_energies(frame))
}

/// MFCC row (`c1..c12`, log energy) of a single frame.
pub fn mfcc_row(frame: &[f64], sample_rate: u32) -> Result<Vec<f64>> {
    let fe = Frontend::new(frame.len(), sample_rate)?;
    let mut out = vec![0.0; MFCC_COLS];
    fe.row(frame, &mut out);
    Ok(out)
}

/// Transforms each row of a frame matrix independently.
pub fn mfcc_rows(frames: &ArrayView2<f64>, sample_rate: u32) -> Result<Matrix> {
    ensure_finite(frames)?;
    let fe = Frontend::new(frames.ncols(), sample_rate)?;
    let mut out = Matrix::zeros((frames.nrows(), MFCC_COLS));
    let mut scratch = vec![0.0; frames.ncols()];
    for (src, mut dst) in frames.rows().into_iter().zip(out.rows_mut()) {
        scratch.iter_mut().zip(src.iter()).for_each(|(s, x)| *s = *x);
        fe.row(&scratch, dst.as_slice_mut().expect("standard layout"));
    }
    Ok(out)
}
