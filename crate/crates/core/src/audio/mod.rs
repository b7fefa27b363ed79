//! Audio segments to matrix features: framing, optional low-rank cleanup,
//! per-row MFCCs, and corruption injection.

mod corrupt;
mod framing;
mod mfcc;
mod wav;

pub use corrupt::{add_large_errors, add_large_errors_with_positions, add_wgn, Corruption};
pub use framing::{frame_len_for, frame_segment, AudioSegment, DEFAULT_FRAMES, FRAME_SECONDS};
pub use mfcc::{
    mel_filter_centers, mel_filterbank_energies, mfcc_row, mfcc_rows, ENERGY_FLOOR, MEL_FILTERS, MFCC_COLS,
    NUM_CEPSTRA,
};
pub use wav::{read_wav, read_wav_bytes, write_wav};

use ndarray::ArrayView2;

use crate::linalg::Matrix;
use crate::rpca::{rpca_ialm, RpcaConfig};
use crate::Result;

/// MFCC matrix of a segment, optionally after replacing the frame matrix
/// by its low-rank component.
pub fn extract_feature(seg: &AudioSegment, n_frames: usize, rpca: Option<&RpcaConfig>) -> Result<Matrix> {
    let frames = frame_segment(seg, frame_len_for(seg.sample_rate), n_frames)?;
    features_from_frames(&frames.view(), seg.sample_rate, rpca)
}

/// The part of [`extract_feature`] after framing, so callers can corrupt
/// the raw frame matrix first.
pub fn features_from_frames(
    frames: &ArrayView2<f64>,
    sample_rate: u32,
    rpca: Option<&RpcaConfig>,
) -> Result<Matrix> {
    match rpca {
        Some(cfg) => {
            let low_rank = rpca_ialm(frames, cfg)?.low_rank;
            mfcc_rows(&low_rank.view(), sample_rate)
        }
        None => mfcc_rows(frames, sample_rate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Segment whose 50×160 frame matrix has rank 2: every frame mixes the
    /// same two 160-sample waveforms with slowly varying weights.
    fn low_rank_segment() -> AudioSegment {
        let sr = 8000;
        let wave_a: Vec<f64> =
            (0..160).map(|k| (2.0 * std::f64::consts::PI * 500.0 * k as f64 / sr as f64).sin()).collect();
        let wave_b: Vec<f64> =
            (0..160).map(|k| (2.0 * std::f64::consts::PI * 1500.0 * k as f64 / sr as f64).cos()).collect();
        let mut samples = Vec::with_capacity(8000);
        for i in 0..50 {
            let (wa, wb) = (1.0 + 0.5 * (i as f64 * 0.2).sin(), 0.6 + 0.3 * (i as f64 * 0.13).cos());
            for k in 0..160 {
                samples.push(wa * wave_a[k] + wb * wave_b[k]);
            }
        }
        AudioSegment::new(samples, sr).unwrap()
    }

    #[test]
    fn plain_pipeline_is_mfcc_of_frames() {
        let seg = low_rank_segment();
        let got = extract_feature(&seg, 50, None).unwrap();
        let frames = frame_segment(&seg, 160, 50).unwrap();
        assert_eq!(got, mfcc_rows(&frames.view(), 8000).unwrap());
        assert_eq!(got.dim(), (50, MFCC_COLS));
    }

    #[test]
    fn rpca_is_near_identity_on_low_rank_input() {
        let seg = low_rank_segment();
        let cfg = RpcaConfig::for_shape(50, 160);
        let plain = extract_feature(&seg, 50, None).unwrap();
        let cleaned = extract_feature(&seg, 50, Some(&cfg)).unwrap();
        let rel = frobenius(&(&cleaned - &plain).view()) / frobenius(&plain.view());
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn rpca_features_resist_large_errors() {
        let seg = low_rank_segment();
        let frames = frame_segment(&seg, 160, 50).unwrap();
        let corrupted = add_large_errors(&frames.view(), 0.1, 3).unwrap();
        let cfg = RpcaConfig::for_shape(50, 160);
        let clean = features_from_frames(&frames.view(), 8000, None).unwrap();
        let plain = features_from_frames(&corrupted.view(), 8000, None).unwrap();
        let robust = features_from_frames(&corrupted.view(), 8000, Some(&cfg)).unwrap();
        let d_plain = frobenius(&(&plain - &clean).view());
        let d_robust = frobenius(&(&robust - &clean).view());
        assert!(d_robust < d_plain, "{d_robust} vs {d_plain}");
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples: Vec<f64> = (0..8000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let seg = AudioSegment::new(samples, 8000).unwrap();
        let cfg = RpcaConfig::for_shape(50, 160);
        let a = extract_feature(&seg, 50, Some(&cfg)).unwrap();
        let b = extract_feature(&seg, 50, Some(&cfg)).unwrap();
        assert_eq!(a, b);
    }
}
