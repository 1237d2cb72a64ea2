//! Composite-image experiments over the supplied image datasets: the single
//! full run (generate, train, evaluate) and the labeled-subset sweep.
//! Composites are rendered lazily from tile indices so the 50k-image runs
//! never hold the whole set in memory.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use coact_core::data::cifar::read_cifar100;
use coact_core::data::composites::{
    composite_image, composite_label, make_composites, CompositeSpec, TileSource,
};
use coact_core::data::idx::{read_idx_images, read_idx_labels};
use coact_core::data::sweep::{label_subset_sweep, render_sweep};
use coact_core::metrics::{
    confusion, exact_match_accuracy, mean_average_precision, per_activity_metrics,
    render_metrics_report, xnor_accuracy, BitMatrix, ScoreMatrix,
};
use coact_core::model::network::SecondInputs;
use coact_core::model::{presets, Modality, Network, NetworkConfig};
use coact_core::training::{write_predictions, PredictionRow, TrainLog};
use coact_nn::{Adam, AdamConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{load_env, write_out, Common, Env};

#[derive(Args)]
struct SourceArgs {
    /// Source dataset: mnist or cifar.
    #[arg(long)]
    dataset: String,

    /// IDX image file (mnist).
    #[arg(long)]
    train_images: Option<PathBuf>,

    /// IDX label file (mnist).
    #[arg(long)]
    train_labels: Option<PathBuf>,

    /// CIFAR-100 binary file (cifar).
    #[arg(long)]
    train_bin: Option<PathBuf>,
}

impl SourceArgs {
    fn load(&self) -> anyhow::Result<TileSource> {
        load_source(
            &self.dataset,
            self.train_images.as_ref(),
            self.train_labels.as_ref(),
            self.train_bin.as_ref(),
            "--train-images/--train-labels",
            "--train-bin",
        )
    }

    fn preset_name(&self) -> anyhow::Result<&'static str> {
        match self.dataset.as_str() {
            "mnist" => Ok("mnist_composite"),
            "cifar" => Ok("cifar_composite"),
            other => bail!("unknown dataset {other:?} (want mnist or cifar)"),
        }
    }
}

fn load_source(
    dataset: &str,
    images: Option<&PathBuf>,
    labels: Option<&PathBuf>,
    bin: Option<&PathBuf>,
    idx_flags: &str,
    bin_flag: &str,
) -> anyhow::Result<TileSource> {
    match dataset {
        "mnist" => {
            let (Some(im), Some(lb)) = (images, labels) else {
                bail!("mnist needs {idx_flags}");
            };
            let images = read_idx_images(im).with_context(|| im.display().to_string())?;
            let labels = read_idx_labels(lb).with_context(|| lb.display().to_string())?;
            Ok(TileSource::from_idx(images, labels)?)
        }
        "cifar" => {
            let Some(b) = bin else {
                bail!("cifar needs {bin_flag}");
            };
            let ds = read_cifar100(b).with_context(|| b.display().to_string())?;
            Ok(TileSource::from_cifar100(ds)?)
        }
        other => bail!("unknown dataset {other:?} (want mnist or cifar)"),
    }
}

/// Pick the network for a tile source: the configured one, or the dataset's
/// preset, resized to the labeled subset and checked against the stitched
/// image shape.
fn tiles_network(
    env: &Env,
    source_args: &SourceArgs,
    stitched: [usize; 3],
    activity_count: usize,
) -> anyhow::Result<NetworkConfig> {
    let mut config = if env.has_network() {
        env.config.network(None)?
    } else {
        presets::by_name(source_args.preset_name()?)?
    };
    config.activity_count = activity_count;
    let branch = config
        .branches
        .iter()
        .find(|b| b.modality == Modality::Tiles)
        .ok_or_else(|| anyhow::anyhow!("the configured network has no tiles branch"))?;
    if branch.conv.input != stitched {
        bail!(
            "tiles branch expects input {:?} but the composite grid stitches {:?}; \
             configure a matching [[network.branch]]",
            branch.conv.input,
            stitched
        );
    }
    config.validate()?;
    Ok(config)
}

#[derive(Args)]
pub struct CompositeArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    source: SourceArgs,

    /// IDX image file for the held-out set (mnist).
    #[arg(long)]
    test_images: Option<PathBuf>,

    /// IDX label file for the held-out set (mnist).
    #[arg(long)]
    test_labels: Option<PathBuf>,

    /// CIFAR-100 binary file for the held-out set (cifar).
    #[arg(long)]
    test_bin: Option<PathBuf>,

    /// Override the config's epoch count.
    #[arg(long)]
    epochs: Option<usize>,
}

pub fn composite(args: CompositeArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let plan = env.config.composite_plan()?;
    let train_source = args.source.load()?;
    let test_source = load_source(
        &args.source.dataset,
        args.test_images.as_ref(),
        args.test_labels.as_ref(),
        args.test_bin.as_ref(),
        "--test-images/--test-labels",
        "--test-bin",
    )?;

    let subset_len = plan.subset_size.unwrap_or(train_source.class_count as usize);
    if subset_len == 0 || subset_len > train_source.class_count as usize {
        bail!(
            "subset_size {subset_len} outside 1..={} classes",
            train_source.class_count
        );
    }
    let subset: Vec<u16> = (0..subset_len as u16).collect();
    let spec = CompositeSpec {
        rows: plan.rows,
        cols: plan.cols,
        labeled_subset: subset.clone(),
        distinct_classes: plan.distinct_classes,
        seed: env.seed,
    };
    let mut test_spec = spec.clone();
    test_spec.seed = env.seed ^ 0x7e57_0000;
    let train_set = make_composites(&train_source, plan.train_count, &spec)?;
    let test_set = make_composites(&test_source, plan.test_count, &test_spec)?;

    let stitched = [
        plan.rows * train_source.height,
        plan.cols * train_source.width,
        train_source.channels,
    ];
    let net_config = tiles_network(&env, &args.source, stitched, subset.len())?;
    let tplan = env.config.plan(net_config.dropout_rate)?;
    let epochs = args.epochs.unwrap_or(tplan.epochs);

    let mut net: Network<f32> = Network::build(net_config, env.seed)?;
    let mut adam = Adam::new(AdamConfig {
        lr: tplan.lr,
        ..AdamConfig::default()
    });
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(tplan.seed.wrapping_add(0x5eed));
    let checkpoints = env.out.join("checkpoints");
    std::fs::create_dir_all(&checkpoints)?;
    let mut log = TrainLog::default();
    let mut best = f64::INFINITY;
    let t_train = Instant::now();
    for epoch in 1..=epochs {
        let t0 = Instant::now();
        let mut loss_sum = 0.0;
        for sample in &train_set.samples {
            let image = composite_image::<f32>(&train_source, sample, &spec)?;
            let inputs = [SecondInputs::just(Modality::Tiles, image)];
            let truth = [composite_label(&train_source, sample, &subset)];
            net.reset_states();
            let (loss, grads) =
                net.train_window(&inputs, &truth, tplan.dropout_rate, &mut dropout_rng, None)?;
            if !(loss as f64).is_finite() {
                net.save(&checkpoints.join("abort.ckpt"))?;
                bail!(
                    "non-finite loss in epoch {epoch}; weights dumped to {}",
                    checkpoints.join("abort.ckpt").display()
                );
            }
            net.params_mut().set_grads(grads)?;
            adam.step(net.params_mut())?;
            log.updates += 1;
            loss_sum += loss as f64;
        }
        let mean_loss = loss_sum / train_set.samples.len() as f64;
        log.epochs.push(coact_core::training::EpochRecord {
            epoch,
            mean_loss,
            wall_secs: t0.elapsed().as_secs_f64(),
        });
        if tplan.checkpoint_every > 0 && epoch % tplan.checkpoint_every == 0 {
            net.save(&checkpoints.join(format!("epoch{epoch:04}.ckpt")))?;
        }
        if mean_loss < best {
            best = mean_loss;
            net.save(&checkpoints.join("best.ckpt"))?;
        }
        crate::emitln(&format!("epoch {epoch}/{epochs}: mean loss {mean_loss:.6}"));
    }
    let train_wall = t_train.elapsed().as_secs_f64();
    net.save(&env.out.join("model.ckpt"))?;
    write_out(&env.out.join("training.log"), &log.render())?;

    let mut rows = Vec::with_capacity(test_set.samples.len());
    let mut truth_rows = Vec::with_capacity(test_set.samples.len());
    for (i, sample) in test_set.samples.iter().enumerate() {
        let image = composite_image::<f32>(&test_source, sample, &test_spec)?;
        net.reset_states();
        let codes = net.infer_window(&[SecondInputs::just(Modality::Tiles, image)])?;
        let code = &codes[0];
        rows.push(PredictionRow {
            case_id: format!("test{i:05}"),
            second: 0,
            scores: code.scores.iter().map(|&s| s as f64).collect(),
            bits: code.bits.clone(),
        });
        truth_rows.push(composite_label(&test_source, sample, &subset));
    }
    write_predictions(&env.out.join("predictions.txt"), &rows)?;

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
    let map = mean_average_precision(&scores, &actual)?;

    let mut text = render_metrics_report(xnor, exact, &per_activity, Some(&map));
    text.push_str(&format!(
        "\ntrain_composites\t{}\ntest_composites\t{}\nepochs\t{epochs}\ntrain_wall_secs\t{train_wall:.1}\n",
        train_set.samples.len(),
        test_set.samples.len(),
    ));
    write_out(&env.out.join("metrics.txt"), &text)?;
    crate::emitln(&format!(
        "xnor {xnor:.4}  exact {exact:.4}  map {:.4}  ({} updates, {train_wall:.1}s training)",
        map.map, log.updates
    ));
    Ok(())
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    source: SourceArgs,
}

pub fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let env = load_env(&args.common)?;
    let source = args.source.load()?;
    let base = if env.has_network() {
        env.config.network(None)?
    } else {
        presets::by_name(args.source.preset_name()?)?
    };
    let sweep_config = env.config.sweep(env.seed);
    let table = label_subset_sweep::<f32>(&source, &base, &sweep_config)?;
    let text = render_sweep(&table);
    crate::emit(&text);
    write_out(&env.out.join("sweep.csv"), &text)?;
    Ok(())
}
