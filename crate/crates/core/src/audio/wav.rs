use std::io::{Cursor, Read};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::framing::AudioSegment;
use crate::{Error, Result};

/// Reads a mono 16-bit PCM WAV file into a normalised segment.
pub fn read_wav(path: &Path) -> Result<AudioSegment> {
    let reader = WavReader::open(path).map_err(|e| wav_err(e, path.display()))?;
    decode(reader, path.display())
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<AudioSegment> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(|e| wav_err(e, "<bytes>"))?;
    decode(reader, "<bytes>")
}

fn decode<R: Read>(mut reader: WavReader<R>, name: impl std::fmt::Display) -> Result<AudioSegment> {
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::format(format!("{name}: expected mono, found {} channels", spec.channels)));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::format(format!(
            "{name}: expected 16-bit integer PCM, found {}-bit {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(f64::from))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_err(e, &name))?;
    AudioSegment::new(samples, spec.sample_rate)
}

/// Writes mono 16-bit PCM.
pub fn write_wav(path: &Path, samples: &[i16], sample_rate: u32) -> Result<()> {
    let spec = WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_err(e, path.display()))?;
    for &s in samples {
        writer.write_sample(s).map_err(|e| wav_err(e, path.display()))?;
    }
    writer.finalize().map_err(|e| wav_err(e, path.display()))
}

fn wav_err(e: hound::Error, name: impl std::fmt::Display) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::format(format!("{name}: {other}")),
    }
}
