//! Synthetic multimodal cases: ground-truth activity bits drawn from
//! idle-gated start processes with normal durations and optional forced
//! co-occurrence, rasterized into aligned depth, audio, and RSS streams
//! where every active bit injects a recoverable activity-specific pattern.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use coact_nn::tensor::hwc_index;
use coact_nn::{Scalar, Tensor};

use crate::error::{config_err, CoactError};
use crate::model::{Modality, NetworkConfig, SecondInputs};
use crate::training::CaseSequence;

/// Temporal process for one activity: while idle, start each second with
/// probability `rate`; durations are normal, clamped to at least one second.
#[derive(Debug, Clone, Copy)]
pub struct ActivityProcess {
    pub rate: f64,
    pub mean_duration: f64,
    pub sd_duration: f64,
}

/// When `trigger` starts, `partner` also starts with this probability, and
/// its event is stretched to cover the trigger's.
#[derive(Debug, Clone, Copy)]
pub struct CoOccurrence {
    pub trigger: usize,
    pub partner: usize,
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCaseSpec {
    pub seconds: usize,
    pub activities: Vec<ActivityProcess>,
    pub co_occurrence: Vec<CoOccurrence>,
    /// Signal-to-noise amplitude ratio; noise amplitude = signal / snr.
    pub snr: f64,
}

impl SyntheticCaseSpec {
    pub fn activity_count(&self) -> usize {
        self.activities.len()
    }

    pub fn validate(&self) -> Result<(), CoactError> {
        if self.activities.is_empty() {
            return Err(config_err("need at least one activity process"));
        }
        for (k, a) in self.activities.iter().enumerate() {
            if !(0.0..=1.0).contains(&a.rate) {
                return Err(config_err(format!("activity {k}: rate {} outside [0, 1]", a.rate)));
            }
            if !(a.mean_duration > 0.0) || a.sd_duration < 0.0 {
                return Err(config_err(format!(
                    "activity {k}: duration mean {} / sd {} invalid",
                    a.mean_duration, a.sd_duration
                )));
            }
        }
        for c in &self.co_occurrence {
            if c.trigger >= self.activities.len() || c.partner >= self.activities.len() {
                return Err(config_err(format!(
                    "co-occurrence ({}, {}) names a missing activity",
                    c.trigger, c.partner
                )));
            }
            if c.trigger == c.partner {
                return Err(config_err("co-occurrence pair must name two activities"));
            }
            if !(0.0..=1.0).contains(&c.probability) {
                return Err(config_err(format!(
                    "co-occurrence probability {} outside [0, 1]",
                    c.probability
                )));
            }
        }
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(config_err(format!("snr {} must be > 0", self.snr)));
        }
        Ok(())
    }
}

/// Uniform processes sized for a quick run against the tiny presets.
pub fn tiny_spec(activities: usize, seconds: usize) -> SyntheticCaseSpec {
    SyntheticCaseSpec {
        seconds,
        activities: vec![
            ActivityProcess {
                rate: 0.05,
                mean_duration: 6.0,
                sd_duration: 2.0,
            };
            activities
        ],
        co_occurrence: Vec::new(),
        snr: 9.0,
    }
}

/// A 35-activity process tuned so well over half of all seconds carry at
/// least two concurrent activities, echoing the crowded dataset shape.
pub fn trauma_like_spec(seconds: usize) -> SyntheticCaseSpec {
    let mut spec = SyntheticCaseSpec {
        seconds,
        activities: (0..35)
            .map(|k| ActivityProcess {
                rate: 0.015 + 0.01 * (k % 3) as f64,
                mean_duration: 5.0 + (k % 7) as f64,
                sd_duration: 2.0,
            })
            .collect(),
        co_occurrence: Vec::new(),
        snr: 9.0,
    };
    // A few forced pairings, the way related interventions cluster.
    for (a, b) in [(0usize, 1usize), (4, 5), (10, 11)] {
        spec.co_occurrence.push(CoOccurrence {
            trigger: a,
            partner: b,
            probability: 0.9,
        });
    }
    spec
}

/// Per-activity event list (start, duration) plus the per-second raster.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// One row per second, N bits each.
    pub bits: Vec<Vec<u8>>,
    /// Per activity: non-overlapping events sorted by start.
    pub events: Vec<Vec<(usize, usize)>>,
}

fn draw_duration(process: &ActivityProcess, rng: &mut ChaCha8Rng) -> usize {
    let sampled = if process.sd_duration > 0.0 {
        Normal::new(process.mean_duration, process.sd_duration)
            .expect("validated parameters")
            .sample(rng)
    } else {
        process.mean_duration
    };
    sampled.round().max(1.0) as usize
}

/// Draw the truth process. Same-type events can never overlap: a start is
/// gated on being idle, and a co-occurrence landing on an active partner
/// extends the open event instead of opening a second one.
pub fn ground_truth(spec: &SyntheticCaseSpec, seed: u64) -> Result<GroundTruth, CoactError> {
    spec.validate()?;
    let n = spec.activities.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut active_until = vec![0usize; n];
    let mut events: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];

    let start_or_extend =
        |events: &mut Vec<Vec<(usize, usize)>>, active_until: &mut Vec<usize>, k: usize, t: usize, dur: usize| {
            let end = t + dur;
            if t < active_until[k] {
                if end > active_until[k] {
                    let last = events[k].last_mut().expect("active implies an open event");
                    last.1 = end - last.0;
                    active_until[k] = end;
                }
            } else {
                events[k].push((t, dur));
                active_until[k] = end;
            }
        };

    for t in 0..spec.seconds {
        for k in 0..n {
            let process = spec.activities[k];
            if t >= active_until[k] && rng.gen_bool(process.rate) {
                let dur = draw_duration(&process, &mut rng);
                start_or_extend(&mut events, &mut active_until, k, t, dur);
                for pair in &spec.co_occurrence {
                    if pair.trigger == k && rng.gen_bool(pair.probability) {
                        let partner_dur =
                            draw_duration(&spec.activities[pair.partner], &mut rng).max(dur);
                        start_or_extend(&mut events, &mut active_until, pair.partner, t, partner_dur);
                    }
                }
            }
        }
    }

    let mut bits = vec![vec![0u8; n]; spec.seconds];
    for (k, list) in events.iter().enumerate() {
        for &(start, dur) in list {
            for row in bits.iter_mut().skip(start).take(dur) {
                row[k] = 1;
            }
        }
    }
    Ok(GroundTruth { bits, events })
}

const SIGNAL: f64 = 0.9;

/// Deterministic activity-k landmark inside an h x w plane: a 2x2 block
/// whose position is a fixed function of k.
fn block_origin(k: usize, h: usize, w: usize) -> (usize, usize) {
    ((k * 3) % (h - 1), (k * 5) % (w - 1))
}

fn write_block(data: &mut [f64], w: usize, ch: usize, y: usize, x: usize, c: usize) {
    for dy in 0..2 {
        for dx in 0..2 {
            data[hwc_index(w, ch, y + dy, x + dx, c)] = SIGNAL;
        }
    }
}

fn finish_plane<T: Scalar>(
    mut data: Vec<f64>,
    shape: &[usize],
    noise_amp: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Tensor<T>, CoactError> {
    for v in data.iter_mut() {
        *v = (*v + rng.gen_range(0.0..noise_amp)).clamp(0.0, 1.0);
    }
    let plane = Tensor::from_vec(shape, data)?;
    Ok(plane.cast())
}

fn branch_shape(
    config: &NetworkConfig,
    modality: Modality,
) -> Option<[usize; 3]> {
    config.branch(modality).map(|b| b.conv.input)
}

/// Rasterize one case: for every second, each active bit k writes its
/// k-specific pattern (depth block, audio band, RSS blob) into whichever of
/// the three modalities the config enables, over uniform noise.
pub fn synth_case<T: Scalar>(
    case_id: &str,
    spec: &SyntheticCaseSpec,
    config: &NetworkConfig,
    seed: u64,
) -> Result<CaseSequence<T>, CoactError> {
    let truth = ground_truth(spec, seed)?;
    let n = spec.activities.len();
    if config.activity_count != n {
        return Err(config_err(format!(
            "config expects {} activities, spec has {n}",
            config.activity_count
        )));
    }
    let depth_shape = branch_shape(config, Modality::Depth);
    let audio_shape = branch_shape(config, Modality::Audio);
    let rss_shape = branch_shape(config, Modality::Rss);
    if depth_shape.is_none() && audio_shape.is_none() && rss_shape.is_none() {
        return Err(config_err(
            "config has no depth, audio, or RSS branch to synthesize for",
        ));
    }
    for shape in [depth_shape, audio_shape, rss_shape].into_iter().flatten() {
        if shape[0] < 3 || shape[1] < 3 {
            return Err(config_err(format!(
                "input plane {shape:?} too small for synthetic landmarks"
            )));
        }
    }

    let noise_amp = SIGNAL / spec.snr;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5167_7a11);
    let mut case = CaseSequence::new(case_id);
    for row in &truth.bits {
        let mut inputs = SecondInputs::default();
        if let Some(shape) = depth_shape {
            let [h, w, c] = shape;
            let mut data = vec![0.0; h * w * c];
            for (k, bit) in row.iter().enumerate() {
                if *bit == 1 {
                    let (y, x) = block_origin(k, h, w);
                    write_block(&mut data, w, c, y, x, 0);
                }
            }
            inputs.set(Modality::Depth, finish_plane(data, &shape, noise_amp, &mut rng)?);
        }
        if let Some(shape) = audio_shape {
            let [h, w, c] = shape;
            let mut data = vec![0.0; h * w * c];
            for (k, bit) in row.iter().enumerate() {
                if *bit == 1 {
                    // A held tone: band k lights its whole row.
                    let band = k % h;
                    for x in 0..w {
                        data[hwc_index(w, c, band, x, 0)] = SIGNAL;
                    }
                }
            }
            inputs.set(Modality::Audio, finish_plane(data, &shape, noise_amp, &mut rng)?);
        }
        if let Some(shape) = rss_shape {
            let [h, w, c] = shape;
            let mut data = vec![0.0; h * w * c];
            for (k, bit) in row.iter().enumerate() {
                if *bit == 1 {
                    let (y, x) = block_origin(k, h, w);
                    write_block(&mut data, w, c, y, x, k % c);
                }
            }
            inputs.set(Modality::Rss, finish_plane(data, &shape, noise_amp, &mut rng)?);
        }
        case.push(inputs, row.clone());
    }
    Ok(case)
}
