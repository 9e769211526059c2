//! Mono 16-bit PCM RIFF/WAVE on top of `hound`.

use std::io::Cursor;
use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::synth::PcmClip;

fn unsupported(path: &Path, err: hound::Error) -> Error {
    Error::UnsupportedFormat {
        path: path.to_path_buf(),
        msg: err.to_string(),
    }
}

fn spec(sample_rate: u32) -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

/// Decodes WAV bytes; `path` only labels errors.
pub fn decode_wav(path: &Path, bytes: &[u8]) -> Result<PcmClip> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| unsupported(path, e))?;
    let found = reader.spec();
    if found != spec(found.sample_rate) {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            msg: format!(
                "{} channel(s), {}-bit {:?}; only mono 16-bit integer PCM is supported",
                found.channels, found.bits_per_sample, found.sample_format
            ),
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| unsupported(path, e))?;
    PcmClip::new(samples, found.sample_rate).map_err(|e| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn read_wav(path: &Path) -> Result<PcmClip> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(path, &bytes)
}

/// Encodes as 16-bit mono PCM. Samples are scaled by 32768, rounded and
/// saturated.
pub fn encode_wav(clip: &PcmClip) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::with_capacity(44 + clip.len() * 2));
    {
        // Writing into memory only fails past the 4 GiB RIFF limit.
        let mut w = hound::WavWriter::new(&mut buf, spec(clip.sample_rate())).expect("in-memory WAV header");
        let mut w16 = w.get_i16_writer(clip.len() as u32);
        for &s in clip.samples() {
            w16.write_sample((s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16);
        }
        w16.flush().expect("in-memory WAV data");
        w.finalize().expect("in-memory WAV finalize");
    }
    buf.into_inner()
}

pub fn write_wav(clip: &PcmClip, path: &Path) -> Result<()> {
    write_bytes(path, &encode_wav(clip))
}
