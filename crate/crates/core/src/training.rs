//! Whole-case training protocol: deterministic case-level splits, sequential
//! per-case iteration with state resets at case boundaries, fixed-length
//! window minibatches (gradients truncate at window edges, state values carry
//! forward), one Adam update per window, periodic checkpoints.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use coact_nn::{Adam, AdamConfig, Scalar, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{config_err, data_err, CoactError};
use crate::model::{Network, SecondInputs};

/// One recorded case: per-second inputs paired index-for-index with
/// ground-truth activity bits. The vector index is the second, so ordering
/// and gaplessness hold by construction.
#[derive(Debug, Clone, Default)]
pub struct CaseSequence<T: Scalar> {
    pub case_id: String,
    pub inputs: Vec<SecondInputs<T>>,
    pub truth: Vec<Vec<u8>>,
}

impl<T: Scalar> CaseSequence<T> {
    pub fn new(case_id: impl Into<String>) -> Self {
        CaseSequence {
            case_id: case_id.into(),
            inputs: Vec::new(),
            truth: Vec::new(),
        }
    }

    pub fn push(&mut self, inputs: SecondInputs<T>, truth: Vec<u8>) {
        self.inputs.push(inputs);
        self.truth.push(truth);
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn validate(&self, activity_count: usize) -> Result<(), CoactError> {
        if self.case_id.is_empty() || self.case_id.contains(char::is_whitespace) {
            return Err(data_err(format!(
                "case id {:?} must be non-empty without whitespace",
                self.case_id
            )));
        }
        if self.inputs.len() != self.truth.len() {
            return Err(data_err(format!(
                "case {}: {} input seconds vs {} truth seconds",
                self.case_id,
                self.inputs.len(),
                self.truth.len()
            )));
        }
        for (second, code) in self.truth.iter().enumerate() {
            if code.len() != activity_count {
                return Err(data_err(format!(
                    "case {} second {}: {} truth bits, expected {}",
                    self.case_id,
                    second,
                    code.len(),
                    activity_count
                )));
            }
            if code.iter().any(|b| *b > 1) {
                return Err(data_err(format!(
                    "case {} second {}: truth bits must be 0 or 1",
                    self.case_id, second
                )));
            }
        }
        Ok(())
    }
}

/// Training hyperparameters. `minibatch_seconds` admits exactly the two
/// published window lengths; everything else scales freely between the
/// full protocol and desk runs.
#[derive(Debug, Clone)]
pub struct TrainPlan {
    pub split_fraction: f64,
    pub epochs: usize,
    pub minibatch_seconds: usize,
    pub lr: f64,
    pub dropout_rate: f64,
    pub seed: u64,
    /// Save a numbered checkpoint every this many epochs (0 disables).
    pub checkpoint_every: usize,
    /// Optional per-activity loss weights for rare-activity emphasis; `None`
    /// trains unweighted.
    pub bit_weights: Option<Vec<f64>>,
}

impl TrainPlan {
    /// The full protocol: 1000 epochs, one-minute windows.
    pub fn paper_faithful() -> Self {
        TrainPlan {
            split_fraction: 0.8,
            epochs: 1000,
            minibatch_seconds: 60,
            lr: 1e-3,
            dropout_rate: 0.5,
            seed: 7,
            checkpoint_every: 10,
            bit_weights: None,
        }
    }

    /// Desk scale: same protocol, few enough epochs to finish in minutes.
    pub fn desk() -> Self {
        TrainPlan {
            epochs: 50,
            ..TrainPlan::paper_faithful()
        }
    }

    pub fn validate(&self) -> Result<(), CoactError> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(config_err(format!(
                "split fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if self.minibatch_seconds != 60 && self.minibatch_seconds != 120 {
            return Err(config_err(format!(
                "minibatch of {} seconds; only 60 or 120 are supported",
                self.minibatch_seconds
            )));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(config_err(format!("learning rate {} must be > 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(config_err(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if let Some(w) = &self.bit_weights {
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(config_err("bit weights must be finite and positive"));
            }
        }
        Ok(())
    }
}

/// Deterministic whole-case split: shuffle by seed, first ceil(fraction * K)
/// cases train, the rest test. No case ever lands in both.
pub fn split_cases<'a, T: Scalar>(
    cases: &'a [CaseSequence<T>],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<&'a CaseSequence<T>>, Vec<&'a CaseSequence<T>>), CoactError> {
    if cases.len() < 2 {
        return Err(data_err(format!(
            "need at least 2 cases to split, have {}",
            cases.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(config_err(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..cases.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (fraction * cases.len() as f64).ceil() as usize;
    let train = order[..n_train].iter().map(|&i| &cases[i]).collect();
    let test = order[n_train..].iter().map(|&i| &cases[i]).collect();
    Ok((train, test))
}

/// Runtime leakage check: the two sets must not share a case id.
pub fn assert_no_leakage<T: Scalar>(
    train: &[&CaseSequence<T>],
    test: &[&CaseSequence<T>],
) -> Result<(), CoactError> {
    let train_ids: HashSet<&str> = train.iter().map(|c| c.case_id.as_str()).collect();
    for case in test {
        if train_ids.contains(case.case_id.as_str()) {
            return Err(data_err(format!(
                "case {} appears in both train and test",
                case.case_id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// Total optimizer updates (one per window).
    pub updates: usize,
}

impl TrainLog {
    /// One row per epoch: epoch, mean loss, wall seconds.
    pub fn render(&self) -> String {
        let mut out = String::from("epoch\tmean_loss\twall_secs\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.3}\n",
                r.epoch, r.mean_loss, r.wall_secs
            ));
        }
        out
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|r| r.mean_loss)
    }
}

fn checkpoint_path(dir: &Path, name: &str) -> std::path::PathBuf {
    dir.join(format!("{name}.ckpt"))
}

/// On a mid-training failure, preserve the last good weights beside the
/// error so a long run is not lost.
fn dump_abort<T: Scalar>(net: &Network<T>, dir: Option<&Path>, err: CoactError) -> CoactError {
    if let Some(dir) = dir {
        let path = checkpoint_path(dir, "abort");
        if net.save(&path).is_ok() {
            return data_err(format!("{err}; weights dumped to {}", path.display()));
        }
    }
    err
}

/// Run the training protocol over whole cases. Per epoch, per case: reset
/// recurrent states, walk seconds in order in `minibatch_seconds` windows,
/// one Adam update per window. Returns the per-epoch loss log; the network
/// and its optimizer state advance in place.
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    cases: &[&CaseSequence<T>],
    plan: &TrainPlan,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainLog, CoactError> {
    plan.validate()?;
    let n = net.config().activity_count;
    let mut seen = HashSet::new();
    for case in cases {
        case.validate(n)?;
        if !seen.insert(case.case_id.as_str()) {
            return Err(data_err(format!("duplicate case id {}", case.case_id)));
        }
    }
    let weights = match &plan.bit_weights {
        Some(w) => {
            if w.len() != n {
                return Err(config_err(format!(
                    "{} bit weights for {} activities",
                    w.len(),
                    n
                )));
            }
            Some(Tensor::from_vec(
                &[n],
                w.iter().map(|v| T::of(*v)).collect(),
            )?)
        }
        None => None,
    };
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut adam = Adam::new(AdamConfig {
        lr: plan.lr,
        ..AdamConfig::default()
    });
    // Dropout draws come from a stream separate from init so adding epochs
    // never perturbs the initial weights.
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(plan.seed.wrapping_add(0x5eed));
    let mut log = TrainLog::default();
    let mut best = f64::INFINITY;

    for epoch in 1..=plan.epochs {
        let t0 = Instant::now();
        let mut loss_sum = 0.0;
        let mut second_count = 0usize;
        for case in cases {
            net.reset_states();
            let mut start = 0;
            while start < case.len() {
                let end = (start + plan.minibatch_seconds).min(case.len());
                let (loss, grads) = net
                    .train_window(
                        &case.inputs[start..end],
                        &case.truth[start..end],
                        plan.dropout_rate,
                        &mut dropout_rng,
                        weights.as_ref(),
                    )
                    .map_err(|e| dump_abort(net, checkpoint_dir, e))?;
                if !loss.as_f64().is_finite() {
                    let err = data_err(format!(
                        "non-finite loss in epoch {epoch}, case {}, seconds {start}..{end}",
                        case.case_id
                    ));
                    return Err(dump_abort(net, checkpoint_dir, err));
                }
                net.params_mut().set_grads(grads)?;
                adam.step(net.params_mut())
                    .map_err(|e| dump_abort(net, checkpoint_dir, e.into()))?;
                log.updates += 1;
                loss_sum += loss.as_f64() * (end - start) as f64;
                second_count += end - start;
                start = end;
            }
        }
        let mean_loss = if second_count > 0 {
            loss_sum / second_count as f64
        } else {
            0.0
        };
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            wall_secs: t0.elapsed().as_secs_f64(),
        });
        if let Some(dir) = checkpoint_dir {
            if plan.checkpoint_every > 0 && epoch % plan.checkpoint_every == 0 {
                net.save(&checkpoint_path(dir, &format!("epoch{epoch:04}")))?;
            }
            if mean_loss < best {
                best = mean_loss;
                net.save(&checkpoint_path(dir, "best"))?;
            }
        }
    }
    Ok(log)
}

/// One evaluated second: retained scores for ranking plus thresholded bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub case_id: String,
    pub second: usize,
    pub scores: Vec<f64>,
    pub bits: Vec<u8>,
}

/// Stream every test case through the network, resetting state at each case
/// start. Window length only bounds tape memory; outputs are identical for
/// any chunking because state values carry across windows.
pub fn evaluate<T: Scalar>(
    net: &mut Network<T>,
    cases: &[&CaseSequence<T>],
    window_seconds: usize,
) -> Result<Vec<PredictionRow>, CoactError> {
    if window_seconds == 0 {
        return Err(config_err("evaluation window must be at least 1 second"));
    }
    let mut rows = Vec::new();
    for case in cases {
        case.validate(net.config().activity_count)?;
        net.reset_states();
        let mut start = 0;
        while start < case.len() {
            let end = (start + window_seconds).min(case.len());
            let codes = net.infer_window(&case.inputs[start..end])?;
            for (offset, code) in codes.into_iter().enumerate() {
                rows.push(PredictionRow {
                    case_id: case.case_id.clone(),
                    second: start + offset,
                    scores: code.scores.iter().map(|s| s.as_f64()).collect(),
                    bits: code.bits,
                });
            }
            start = end;
        }
    }
    Ok(rows)
}

/// Prediction file: one row per (case, second) holding N scores then N bits,
/// whitespace separated.
pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<(), CoactError> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.case_id);
        out.push(' ');
        out.push_str(&row.second.to_string());
        for s in &row.scores {
            out.push_str(&format!(" {s:.6}"));
        }
        for b in &row.bits {
            out.push_str(&format!(" {b}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, CoactError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| {
            data_err(format!("{}:{}: {}", path.display(), lineno + 1, what))
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 4 || (tokens.len() - 2) % 2 != 0 {
            return Err(bad("expected case id, second, N scores, N bits"));
        }
        let n = (tokens.len() - 2) / 2;
        let second: usize = tokens[1].parse().map_err(|_| bad("bad second index"))?;
        let scores = tokens[2..2 + n]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad score")))
            .collect::<Result<Vec<_>, _>>()?;
        let bits = tokens[2 + n..]
            .iter()
            .map(|t| match *t {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(bad("bit must be 0 or 1")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(PredictionRow {
            case_id: tokens[0].to_string(),
            second,
            scores,
            bits,
        });
    }
    Ok(rows)
}
