use crate::linalg::Matrix;
use crate::{Error, Result};

/// Frame length in seconds (non-overlapping).
pub const FRAME_SECONDS: f64 = 0.020;

/// Frames per feature matrix: one second of 20 ms frames.
pub const DEFAULT_FRAMES: usize = 50;

/// Samples per 20 ms frame at this rate, rounded.
pub fn frame_len_for(sample_rate: u32) -> usize {
    (FRAME_SECONDS * sample_rate as f64).round() as usize
}

/// Mono audio normalised to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSegment {
    /// Normalises `samples`. A constant signal becomes all zeros.
    pub fn new(mut samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::Empty("audio segment"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
        for x in &mut samples {
            *x = (*x - mean) * scale;
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Stacks `n_frames` consecutive frames of `frame_len` samples as rows;
/// samples past the last full frame are dropped.
pub fn frame_segment(seg: &AudioSegment, frame_len: usize, n_frames: usize) -> Result<Matrix> {
    if frame_len == 0 || n_frames == 0 {
        return Err(Error::param("frame length and frame count must be positive"));
    }
    let needed = frame_len * n_frames;
    if seg.len() < needed {
        return Err(Error::InsufficientSamples { needed, got: seg.len() });
    }
    Ok(Matrix::from_shape_vec((n_frames, frame_len), seg.samples[..needed].to_vec()).expect("length checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(samples: Vec<f64>) -> AudioSegment {
        AudioSegment { samples, sample_rate: 8000 }
    }

    #[test]
    fn frame_lengths() {
        assert_eq!(frame_len_for(8000), 160);
        assert_eq!(frame_len_for(16000), 320);
        assert_eq!(frame_len_for(22050), 441);
        assert_eq!(frame_len_for(11025), 221);
    }

    #[test]
    fn two_frames_copy_row_major() {
        let seg = raw((0..320).map(f64::from).collect());
        let f = frame_segment(&seg, 160, 2).unwrap();
        assert_eq!(f.dim(), (2, 160));
        assert_eq!(f[[1, 0]], 160.0);
        assert_eq!(f[[1, 159]], 319.0);
    }

    #[test]
    fn ramp_row_starts() {
        let seg = raw((0..800).map(f64::from).collect());
        let f = frame_segment(&seg, 160, 5).unwrap();
        assert_eq!(f[[2, 0]], 320.0);
    }

    #[test]
    fn flatten_recovers_prefix() {
        let samples: Vec<f64> = (0..1000).map(|k| (k as f64 * 0.37).sin()).collect();
        let seg = raw(samples.clone());
        let f = frame_segment(&seg, 160, 6).unwrap();
        let flat: Vec<f64> = f.iter().copied().collect();
        assert_eq!(flat, samples[..960]);
    }

    #[test]
    fn too_short() {
        let seg = raw(vec![0.0; 100]);
        assert!(matches!(
            frame_segment(&seg, 160, 1),
            Err(Error::InsufficientSamples { needed: 160, got: 100 })
        ));
    }

    #[test]
    fn normalisation() {
        let samples: Vec<f64> = (0..5000).map(|k| 3.0 + 7.0 * (k as f64 * 0.01).sin()).collect();
        let seg = AudioSegment::new(samples, 8000).unwrap();
        let n = seg.len() as f64;
        let mean = seg.samples.iter().sum::<f64>() / n;
        let var = seg.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-3);
        let silent = AudioSegment::new(vec![2.0; 10], 8000).unwrap();
        assert!(silent.samples.iter().all(|&x| x == 0.0));
    }
}
