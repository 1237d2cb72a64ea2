//! WAV ingestion and resampling to the fixed analysis rate.

use crate::error::CoactError;
use std::fs;
use std::path::Path;

/// Decoded PCM audio, samples in [-1, 1].
#[derive(Debug)]
pub struct AudioClip {
    pub sample_rate: u32,
    pub channels: u16,
    /// Interleaved when `channels > 1`.
    pub samples: Vec<f64>,
}

impl AudioClip {
    /// Average across channels into a mono signal.
    pub fn to_mono(&self) -> Vec<f64> {
        if self.channels <= 1 {
            return self.samples.clone();
        }
        let ch = self.channels as usize;
        self.samples
            .chunks_exact(ch)
            .map(|frame| frame.iter().sum::<f64>() / ch as f64)
            .collect()
    }

    /// Extract one channel of the interleave.
    pub fn channel(&self, index: usize) -> Result<Vec<f64>, CoactError> {
        let ch = self.channels as usize;
        if index >= ch {
            return Err(CoactError::Data {
                detail: format!("channel {index} out of {ch}"),
            });
        }
        Ok(self
            .samples
            .iter()
            .skip(index)
            .step_by(ch)
            .copied()
            .collect())
    }
}

fn format_err(detail: impl Into<String>, offset: u64) -> CoactError {
    CoactError::Format {
        detail: detail.into(),
        offset: Some(offset),
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, CoactError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err("truncated while reading u32", at as u64))
}

fn read_u16(bytes: &[u8], at: usize) -> Result<u16, CoactError> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| format_err("truncated while reading u16", at as u64))
}

/// Parse a RIFF/WAVE file containing 16-bit PCM. Walks the chunk list, so
/// extra chunks (LIST, fact, ...) are tolerated.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, CoactError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(format_err("not a RIFF/WAVE file", 0));
    }
    let mut at = 12usize;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = read_u32(bytes, at + 4)? as usize;
        let body_at = at + 8;
        if body_at + size > bytes.len() {
            return Err(format_err(
                format!(
                    "chunk {} claims {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ),
                at as u64,
            ));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(format_err("fmt chunk shorter than 16 bytes", at as u64));
                }
                let audio_format = read_u16(bytes, body_at)?;
                let channels = read_u16(bytes, body_at + 2)?;
                let sample_rate = read_u32(bytes, body_at + 4)?;
                let bits = read_u16(bytes, body_at + 14)?;
                format = Some((audio_format, channels, sample_rate, bits));
            }
            b"data" => data = Some(&bytes[body_at..body_at + size]),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        at = body_at + size + (size & 1);
    }
    let (audio_format, channels, sample_rate, bits) =
        format.ok_or_else(|| format_err("missing fmt chunk", 12))?;
    if audio_format != 1 {
        return Err(format_err(
            format!("unsupported WAVE format tag {audio_format}, want PCM (1)"),
            12,
        ));
    }
    if bits != 16 {
        return Err(format_err(format!("unsupported bit depth {bits}, want 16"), 12));
    }
    if channels == 0 || sample_rate == 0 {
        return Err(format_err("fmt chunk declares zero channels or rate", 12));
    }
    let data = data.ok_or_else(|| format_err("missing data chunk", 12))?;
    if data.len() % 2 != 0 {
        return Err(format_err("data chunk length is odd", 12));
    }
    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok(AudioClip {
        sample_rate,
        channels,
        samples,
    })
}

pub fn read_wav(path: &Path) -> Result<AudioClip, CoactError> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

/// Serialize mono PCM16; used by tests and the synthetic data writer.
pub fn write_wav_mono(path: &Path, sample_rate: u32, samples: &[f64]) -> Result<(), CoactError> {
    let mut pcm = Vec::with_capacity(samples.len() * 2);
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        pcm.extend_from_slice(&v.to_le_bytes());
    }
    let mut bytes = Vec::with_capacity(44 + pcm.len());
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + pcm.len() as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&sample_rate.to_le_bytes());
    bytes.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(pcm.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&pcm);
    fs::write(path, bytes)?;
    Ok(())
}

/// Linear-interpolation resample. Endpoints map to endpoints; a rate change
/// of 1 returns the input unchanged.
pub fn resample_linear(samples: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    if from_rate == to_rate || samples.len() < 2 {
        return samples.to_vec();
    }
    let out_len =
        ((samples.len() as u64 * to_rate as u64) / from_rate as u64).max(1) as usize;
    let scale = (samples.len() - 1) as f64 / (out_len - 1).max(1) as f64;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(samples.len() - 1);
            let frac = pos - lo as f64;
            samples[lo] * (1.0 - frac) + samples[hi] * frac
        })
        .collect()
}
