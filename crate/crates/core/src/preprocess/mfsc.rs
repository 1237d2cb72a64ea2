//! Mel-frequency spectral coefficients: log filterbank energies per frame,
//! S(m) = log(sum_k |X(k)|^2 H_m(k)), without MFCC's DCT step. One second of
//! 10,240 Hz audio yields 20 non-overlapping 512-point frames and 36 bands.

use crate::error::{config_err, CoactError};
use crate::preprocess::resize::bilinear;
use coact_nn::Tensor;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Sample rate every input is resampled to; 20 frames of 512 samples tile
/// one second exactly.
pub const MFSC_SAMPLE_RATE: u32 = 10_240;
pub const FRAME_LEN: usize = 512;
pub const FRAMES_PER_SECOND: usize = 20;
pub const BANDS: usize = 36;

/// Band filter shape for H_m. The mel triangle is the standard reading;
/// a Hamming-shaped band response is available for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandFilterShape {
    Triangle,
    Hamming,
}

#[derive(Debug, Clone, Copy)]
pub struct MfscConfig {
    pub bands: usize,
    pub frame_len: usize,
    pub frames_per_second: usize,
    pub filter_shape: BandFilterShape,
    /// Floor inside the log; silence maps to ln(log_floor).
    pub log_floor: f64,
}

impl Default for MfscConfig {
    fn default() -> Self {
        MfscConfig {
            bands: BANDS,
            frame_len: FRAME_LEN,
            frames_per_second: FRAMES_PER_SECOND,
            filter_shape: BandFilterShape::Triangle,
            log_floor: 1e-10,
        }
    }
}

/// Raw frame-by-band energies plus the square map the network consumes.
pub struct MfscMap {
    /// frames x bands log energies.
    pub raw: Tensor<f64>,
    /// 64 x 64 bilinear upsample of `raw`.
    pub presented: Tensor<f64>,
}

pub const PRESENTED_EXTENT: usize = 64;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Band centers and edges on the one-sided spectrum, as fractional bin
/// positions. Returns `bands + 2` boundary points.
fn mel_points(bands: usize, frame_len: usize, sample_rate: u32) -> Vec<f64> {
    let nyquist = sample_rate as f64 / 2.0;
    let (mel_lo, mel_hi) = (hz_to_mel(0.0), hz_to_mel(nyquist));
    (0..bands + 2)
        .map(|i| {
            let mel = mel_lo + (mel_hi - mel_lo) * i as f64 / (bands + 1) as f64;
            mel_to_hz(mel) * frame_len as f64 / sample_rate as f64
        })
        .collect()
}

/// Filter weights over one-sided bins 0..=frame_len/2 for every band.
pub fn band_filters(
    bands: usize,
    frame_len: usize,
    sample_rate: u32,
    shape: BandFilterShape,
) -> Vec<Vec<f64>> {
    let points = mel_points(bands, frame_len, sample_rate);
    let half = frame_len / 2;
    (0..bands)
        .map(|m| {
            let (left, center, right) = (points[m], points[m + 1], points[m + 2]);
            let mut filter = vec![0.0; half + 1];
            for (k, w) in filter.iter_mut().enumerate() {
                let kf = k as f64;
                if kf <= left || kf >= right {
                    continue;
                }
                *w = match shape {
                    BandFilterShape::Triangle => {
                        if kf <= center {
                            (kf - left) / (center - left)
                        } else {
                            (right - kf) / (right - center)
                        }
                    }
                    BandFilterShape::Hamming => {
                        let phase = (kf - left) / (right - left);
                        0.54 - 0.46 * (2.0 * std::f64::consts::PI * phase).cos()
                    }
                };
            }
            filter
        })
        .collect()
}

/// Center frequency of band `m` in Hz, used by tests and signal synthesis.
pub fn band_center_hz(m: usize, bands: usize, sample_rate: u32) -> f64 {
    let nyquist = sample_rate as f64 / 2.0;
    let (mel_lo, mel_hi) = (hz_to_mel(0.0), hz_to_mel(nyquist));
    mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) as f64 / (bands + 1) as f64)
}

/// One second of samples to a frames x bands log-energy map plus its 64 x 64
/// presentation. Requires exactly enough samples to tile the frames.
pub fn mfsc_extract(samples: &[f64], config: &MfscConfig) -> Result<MfscMap, CoactError> {
    let needed = config.frame_len * config.frames_per_second;
    if samples.len() < needed {
        return Err(config_err(format!(
            "mfsc needs {needed} samples per second, got {}",
            samples.len()
        )));
    }
    if config.log_floor <= 0.0 {
        return Err(config_err("mfsc log floor must be positive"));
    }
    let filters = band_filters(
        config.bands,
        config.frame_len,
        MFSC_SAMPLE_RATE,
        config.filter_shape,
    );
    let hamming: Vec<f64> = (0..config.frame_len)
        .map(|n| {
            0.54 - 0.46
                * (2.0 * std::f64::consts::PI * n as f64 / (config.frame_len - 1) as f64).cos()
        })
        .collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(config.frame_len);
    let half = config.frame_len / 2;
    let mut raw = Tensor::zeros(&[config.frames_per_second, config.bands]);
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); config.frame_len];
    for frame in 0..config.frames_per_second {
        let start = frame * config.frame_len;
        for n in 0..config.frame_len {
            buf[n] = Complex::new(samples[start + n] * hamming[n], 0.0);
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..=half].iter().map(|c| c.norm_sqr()).collect();
        for (m, filter) in filters.iter().enumerate() {
            let energy: f64 = power.iter().zip(filter).map(|(p, h)| p * h).sum();
            raw.data_mut()[frame * config.bands + m] = energy.max(config.log_floor).ln();
        }
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
    }
    let presented = bilinear(&raw, PRESENTED_EXTENT, PRESENTED_EXTENT);
    Ok(MfscMap { raw, presented })
}
