//! The recognition pipeline end to end: sensor files to case bundles,
//! bundles to a trained model, model to predictions, predictions to scores.
//! The working precision throughout is 32-bit.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use coact_core::data::bundle::{load_case, load_cases, save_case};
use coact_core::metrics::{
    concurrency_profile, confusion, exact_match_accuracy, mean_average_precision,
    per_activity_metrics, render_metrics_report, render_profile, xnor_accuracy, BitMatrix,
    ScoreMatrix,
};
use coact_core::model::network::SecondInputs;
use coact_core::model::{presets, Modality, Network};
use coact_core::preprocess::depth::depth_prepare;
use coact_core::preprocess::formats::{read_depth_recording, read_labels, read_rfid_log};
use coact_core::preprocess::mfsc::{mfsc_extract, MFSC_SAMPLE_RATE, PRESENTED_EXTENT};
use coact_core::preprocess::rss::build_rss_map;
use coact_core::preprocess::{audio, resample_linear};
use coact_core::synth::synth_case;
use coact_core::training::{
    self, assert_no_leakage, split_cases, write_predictions, CaseSequence,
};
use coact_nn::Tensor;

use crate::{load_env, write_out, Common};

#[derive(Args)]
pub struct SynthArgs {
    #[command(flatten)]
    common: Common,
}

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let (spec, count) = env.config.synth_spec()?;
    let net_config = if env.has_network() {
        env.config.network(None)?
    } else {
        presets::tiny_multimodal(spec.activities.len())
    };
    let dir = env.out.join("cases");
    for i in 0..count {
        let case: CaseSequence<f32> = synth_case(
            &format!("synth{i:03}"),
            &spec,
            &net_config,
            env.seed.wrapping_add(i as u64),
        )?;
        save_case(&dir, &case)?;
    }
    crate::emitln(&format!(
        "{count} cases x {} seconds, {} activities, under {}",
        spec.seconds,
        spec.activities.len(),
        dir.display()
    ));
    Ok(())
}

#[derive(Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    common: Common,

    /// Depth recording (frame-stream file).
    #[arg(long)]
    depth: Option<PathBuf>,

    /// Audio file (PCM16 WAV).
    #[arg(long)]
    audio: Option<PathBuf>,

    /// RFID read log (timestamp,tag,antenna,rss lines).
    #[arg(long)]
    rfid: Option<PathBuf>,

    /// Ground-truth bits, one 0/1 row per second.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Tagged-object count; the RSS map gets one channel per object.
    #[arg(long, default_value_t = 25)]
    objects: usize,

    /// Truth-row width; defaults to the configured network's activity count.
    #[arg(long)]
    activities: Option<usize>,

    /// Name of the produced case bundle.
    #[arg(long, default_value = "case0")]
    case_id: String,
}

pub fn preprocess(args: PreprocessArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    if args.depth.is_none() && args.audio.is_none() && args.rfid.is_none() {
        bail!("nothing to preprocess: pass at least one of --depth, --audio, --rfid");
    }
    let activities = match args.activities {
        Some(n) => n,
        None if env.has_network() => env.config.network(None)?.activity_count,
        None => bail!("pass --activities or configure a network to size the truth rows"),
    };

    let depth = args
        .depth
        .as_deref()
        .map(read_depth_recording)
        .transpose()?;
    let clip = args.audio.as_deref().map(audio::read_wav).transpose()?;
    let samples = match &clip {
        Some(c) => Some(match env.config.mfsc.audio_channel {
            None => c.to_mono(),
            Some(i) => c.channel(i)?,
        }),
        None => None,
    };
    let reads = args.rfid.as_deref().map(read_rfid_log).transpose()?;
    let truth_rows = args
        .labels
        .as_deref()
        .map(|p| read_labels(p, activities))
        .transpose()?;

    // Whole seconds every present stream (and the truth) can fill.
    let mut seconds = usize::MAX;
    if let Some(d) = &depth {
        seconds = seconds.min(d.frames.len() / d.fps as usize);
    }
    if let (Some(s), Some(c)) = (&samples, &clip) {
        seconds = seconds.min(s.len() / c.sample_rate as usize);
    }
    if let Some(r) = &reads {
        let last = r.iter().map(|x| x.timestamp).fold(f64::NEG_INFINITY, f64::max);
        seconds = seconds.min(if last.is_finite() { last.floor() as usize + 1 } else { 0 });
    }
    if let Some(t) = &truth_rows {
        seconds = seconds.min(t.len());
    }
    if seconds == 0 || seconds == usize::MAX {
        bail!("no whole second of data across the supplied streams");
    }

    let mfsc_config = env.config.mfsc()?;
    let geometry = env.config.geometry(&env.base_dir)?;
    let normalization = env.config.rss_normalization();

    let mut case: CaseSequence<f32> = CaseSequence::new(&args.case_id);
    let mut skipped_reads = 0usize;
    for t in 0..seconds {
        let mut inputs = SecondInputs::default();
        if let Some(d) = &depth {
            // The second's representative frame: its middle one.
            let fps = d.fps as usize;
            let frame = &d.frames[t * fps + fps / 2];
            let prepared = depth_prepare(frame, d.height, d.width, d.max_range_mm)?;
            inputs.set(Modality::Depth, prepared.map.cast());
        }
        if let (Some(s), Some(c)) = (&samples, &clip) {
            let rate = c.sample_rate as usize;
            let second = resample_linear(&s[t * rate..(t + 1) * rate], c.sample_rate, MFSC_SAMPLE_RATE);
            let map = mfsc_extract(&second, &mfsc_config)?;
            let plane = Tensor::from_vec(
                &[PRESENTED_EXTENT, PRESENTED_EXTENT, 1],
                map.presented.data().to_vec(),
            )?;
            inputs.set(Modality::Audio, plane.cast());
        }
        if let Some(r) = &reads {
            let in_second: Vec<_> = r
                .iter()
                .filter(|x| x.timestamp >= t as f64 && x.timestamp < (t + 1) as f64)
                .cloned()
                .collect();
            let build = build_rss_map(&in_second, &geometry, args.objects, normalization)?;
            skipped_reads += build.skipped;
            inputs.set(Modality::Rss, build.map.cast());
        }
        let bits = match &truth_rows {
            Some(rows) => rows[t].clone(),
            None => vec![0; activities],
        };
        case.push(inputs, bits);
    }
    case.validate(activities)?;
    if skipped_reads > 0 {
        eprintln!("note: {skipped_reads} reads skipped for unknown tag or antenna ids");
    }
    let dir = env.out.join("cases");
    save_case(&dir, &case)?;
    crate::emitln(&format!(
        "case {} with {seconds} seconds under {}",
        args.case_id,
        dir.display()
    ));
    Ok(())
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,

    /// Case-bundle directory; defaults to <out>/cases.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn split_file(out: &Path) -> PathBuf {
    out.join("split.txt")
}

fn read_split(path: &Path) -> anyhow::Result<(BTreeSet<String>, BTreeSet<String>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("{}: no case split recorded (run train first)", path.display()))?;
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match line.split_once(char::is_whitespace) {
            Some(("train", id)) => {
                train.insert(id.trim().to_string());
            }
            Some(("test", id)) => {
                test.insert(id.trim().to_string());
            }
            _ => bail!("{}: unrecognized split line {line:?}", path.display()),
        }
    }
    Ok((train, test))
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let net_config = env.network(None, None)?;
    let mut plan = env.config.plan(net_config.dropout_rate)?;
    plan.seed = env.seed;

    let data = args.data.unwrap_or_else(|| env.out.join("cases"));
    let cases: Vec<CaseSequence<f32>> = load_cases(&data, net_config.activity_count)?;
    let (train_cases, test_cases) = split_cases(&cases, plan.split_fraction, plan.seed)?;
    assert_no_leakage(&train_cases, &test_cases)?;
    let mut split_text = String::new();
    for c in &train_cases {
        split_text.push_str(&format!("train {}\n", c.case_id));
    }
    for c in &test_cases {
        split_text.push_str(&format!("test {}\n", c.case_id));
    }
    write_out(&split_file(&env.out), &split_text)?;

    let mut net: Network<f32> = Network::build(net_config, plan.seed)?;
    let checkpoints = env.out.join("checkpoints");
    let log = training::train(&mut net, &train_cases, &plan, Some(&checkpoints))?;
    net.save(&env.out.join("model.ckpt"))?;
    write_out(&env.out.join("training.log"), &log.render())?;
    crate::emitln(&format!(
        "trained on {} cases ({} held out) for {} epochs, final mean loss {:.6}",
        train_cases.len(),
        test_cases.len(),
        plan.epochs,
        log.final_loss().unwrap_or(f64::NAN)
    ));
    Ok(())
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    common: Common,

    /// Case-bundle directory; defaults to <out>/cases.
    #[arg(long)]
    data: Option<PathBuf>,

    /// Trained weights; defaults to <out>/model.ckpt.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Which cases to score: test, train, or all. Defaults to the recorded
    /// test split when one exists, otherwise all.
    #[arg(long)]
    split: Option<String>,
}

pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let net_config = env.network(None, None)?;
    let window = env.config.plan(net_config.dropout_rate)?.minibatch_seconds;
    let mut net: Network<f32> = Network::build(net_config, env.seed)?;
    net.load(&args.model.unwrap_or_else(|| env.out.join("model.ckpt")))?;

    let data = args.data.unwrap_or_else(|| env.out.join("cases"));
    let cases: Vec<CaseSequence<f32>> = load_cases(&data, net.config().activity_count)?;
    let choice = match args.split.as_deref() {
        Some(s) => s.to_string(),
        None if split_file(&env.out).exists() => "test".to_string(),
        None => "all".to_string(),
    };
    let selected: Vec<&CaseSequence<f32>> = match choice.as_str() {
        "all" => cases.iter().collect(),
        "train" | "test" => {
            let (train_ids, test_ids) = read_split(&split_file(&env.out))?;
            let ids = if choice == "train" { train_ids } else { test_ids };
            cases
                .iter()
                .filter(|c| ids.contains(&c.case_id))
                .collect()
        }
        other => bail!("unknown split {other:?} (want all, train, or test)"),
    };
    if selected.is_empty() {
        bail!("no cases in the {choice} split under {}", data.display());
    }
    let rows = training::evaluate(&mut net, &selected, window)?;
    write_predictions(&env.out.join("predictions.txt"), &rows)?;
    crate::emitln(&format!(
        "{} prediction rows from {} {choice} cases -> {}",
        rows.len(),
        selected.len(),
        env.out.join("predictions.txt").display()
    ));
    Ok(())
}

#[derive(Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    common: Common,

    /// Case-bundle directory holding the ground truth.
    #[arg(long)]
    data: Option<PathBuf>,

    /// Prediction file; defaults to <out>/predictions.txt.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

pub fn metrics(args: MetricsArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let path = args
        .predictions
        .unwrap_or_else(|| env.out.join("predictions.txt"));
    let rows = training::read_predictions(&path)?;
    if rows.is_empty() {
        bail!("{}: no prediction rows", path.display());
    }
    let activities = rows[0].scores.len();

    let data = args.data.unwrap_or_else(|| env.out.join("cases"));
    let ids: BTreeSet<&str> = rows.iter().map(|r| r.case_id.as_str()).collect();
    let mut truth_by_case = std::collections::HashMap::new();
    for id in ids {
        let case: CaseSequence<f32> = load_case(&data.join(id), activities)?;
        truth_by_case.insert(id.to_string(), case.truth);
    }
    let mut truth_rows = Vec::with_capacity(rows.len());
    for row in &rows {
        let truth = &truth_by_case[&row.case_id];
        let Some(bits) = truth.get(row.second) else {
            bail!(
                "case {} second {} has a prediction but only {} truth rows",
                row.case_id,
                row.second,
                truth.len()
            );
        };
        truth_rows.push(bits.clone());
    }

    let predicted = BitMatrix::from_second_rows(
        &rows.iter().map(|r| r.bits.clone()).collect::<Vec<_>>(),
    )?;
    let actual = BitMatrix::from_second_rows(&truth_rows)?;
    let scores = ScoreMatrix::from_second_rows(
        &rows.iter().map(|r| r.scores.clone()).collect::<Vec<_>>(),
    )?;

    let xnor = xnor_accuracy(&predicted, &actual)?;
    let exact = exact_match_accuracy(&predicted, &actual)?;
    let per_activity = per_activity_metrics(&confusion(&predicted, &actual)?);
    let map = match mean_average_precision(&scores, &actual) {
        Ok(m) => Some(m),
        Err(e) => {
            eprintln!("note: {e}");
            None
        }
    };
    let mut text = render_metrics_report(xnor, exact, &per_activity, map.as_ref());
    text.push('\n');
    text.push_str(&render_profile(&concurrency_profile(&actual)));
    write_out(&env.out.join("metrics.txt"), &text)?;
    match &map {
        Some(m) => crate::emitln(&format!(
            "xnor {xnor:.4}  exact {exact:.4}  map {:.4}  over {} seconds",
            m.map,
            rows.len()
        )),
        None => crate::emitln(&format!(
            "xnor {xnor:.4}  exact {exact:.4}  map undefined  over {} seconds",
            rows.len()
        )),
    }
    Ok(())
}
