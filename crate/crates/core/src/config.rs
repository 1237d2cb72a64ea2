//! Run configuration: one TOML file resolving to the typed configs the rest
//! of the crate consumes. Every default a command bakes in (dropout, learning
//! rate, filter shapes, composite grid, ...) can be overridden here; unknown
//! keys are rejected so typos fail loudly.

use std::path::Path;

use coact_nn::ops::activation::Activation;
use serde::Deserialize;

use crate::data::sweep::SweepConfig;
use crate::error::{config_err, CoactError};
use crate::model::presets;
use crate::model::{BranchConfig, ConvLayer, Modality, ModalityConvSpec, NetworkConfig};
use crate::preprocess::mfsc::{BandFilterShape, MfscConfig};
use crate::preprocess::rss::{default_geometry, AntennaGeometry};
use crate::synth::{tiny_spec, trauma_like_spec, SyntheticCaseSpec};
use crate::training::TrainPlan;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub mfsc: MfscSection,
    #[serde(default)]
    pub rss: RssSection,
    #[serde(default)]
    pub composite: CompositeSection,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Named architecture; mutually exclusive with inline `[[network.branch]]`
    /// tables.
    pub preset: Option<String>,
    pub activity_count: Option<usize>,
    pub level2_width: Option<usize>,
    pub fusion_width: Option<usize>,
    pub threshold: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub leaky_alpha: Option<f64>,
    /// "sigmoid" (default) or "tanh" on every branch's final feature conv.
    pub feature_activation: Option<String>,
    #[serde(default, rename = "branch")]
    pub branches: Vec<BranchSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSection {
    pub modality: String,
    pub input: [usize; 3],
    pub lstm_width: usize,
    pub layers: Vec<LayerEntry>,
}

/// One conv-schedule entry; exactly one of `conv`, `pool`, `collapse` is set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub conv: Option<usize>,
    pub filters: Option<usize>,
    pub activation: Option<String>,
    pub pool: Option<[usize; 2]>,
    pub collapse: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    /// "desk" (default, 50 epochs) or "paper" (1000 epochs).
    pub protocol: Option<String>,
    pub split_fraction: Option<f64>,
    pub epochs: Option<usize>,
    pub minibatch_seconds: Option<usize>,
    pub lr: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub seed: Option<u64>,
    pub checkpoint_every: Option<usize>,
    /// Per-activity loss weights for rare-activity emphasis.
    pub bit_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfscSection {
    /// "triangle" (default) or "hamming".
    pub filter_shape: Option<String>,
    pub bands: Option<usize>,
    pub frame_len: Option<usize>,
    pub frames_per_second: Option<usize>,
    pub log_floor: Option<f64>,
    /// Channel index to extract; absent means mono mixdown.
    pub audio_channel: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RssSection {
    /// Antenna geometry file; absent uses the built-in eight-antenna layout.
    pub geometry: Option<String>,
    pub offset_dbm: Option<f64>,
    pub range_db: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSection {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub distinct_classes: Option<bool>,
    /// Labeled subset is classes 0..subset_size; absent labels every class.
    pub subset_size: Option<usize>,
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    /// "tiny" (default) or "trauma_like".
    pub kind: Option<String>,
    pub activities: Option<usize>,
    pub seconds: Option<usize>,
    pub snr: Option<f64>,
    pub cases: Option<usize>,
    /// Per-second event trigger probability, applied to every activity.
    pub rate: Option<f64>,
    /// Event duration moments, applied to every activity.
    pub mean_duration: Option<f64>,
    pub sd_duration: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Option<Vec<usize>>,
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
    pub epochs: Option<usize>,
    pub update_budget: Option<usize>,
    pub lr: Option<f64>,
}

/// Composite experiment scale after defaults are applied.
#[derive(Debug, Clone)]
pub struct CompositePlan {
    pub rows: usize,
    pub cols: usize,
    pub distinct_classes: bool,
    pub subset_size: Option<usize>,
    pub train_count: usize,
    pub test_count: usize,
}

fn parse_activation(name: &str, leaky_alpha: f64) -> Result<Activation, CoactError> {
    match name {
        "sigmoid" => Ok(Activation::Sigmoid),
        "tanh" => Ok(Activation::Tanh),
        "leaky" => Ok(Activation::leaky(leaky_alpha)),
        other => Err(config_err(format!(
            "unknown activation {other:?} (want sigmoid, tanh, or leaky)"
        ))),
    }
}

fn parse_modality(name: &str) -> Result<Modality, CoactError> {
    match name {
        "depth" => Ok(Modality::Depth),
        "audio" => Ok(Modality::Audio),
        "rss" => Ok(Modality::Rss),
        "rgb" => Ok(Modality::Rgb),
        "tiles" => Ok(Modality::Tiles),
        other => Err(config_err(format!(
            "unknown modality {other:?} (want depth, audio, rss, rgb, or tiles)"
        ))),
    }
}

impl LayerEntry {
    fn to_layer(&self, branch: &str, index: usize, alpha: f64) -> Result<ConvLayer, CoactError> {
        let kinds =
            self.conv.is_some() as u8 + self.pool.is_some() as u8 + self.collapse.is_some() as u8;
        if kinds != 1 {
            return Err(config_err(format!(
                "{branch} layer {index}: set exactly one of conv, pool, collapse"
            )));
        }
        if let Some(kernel) = self.conv {
            let filters = self.filters.ok_or_else(|| {
                config_err(format!("{branch} layer {index}: conv needs `filters`"))
            })?;
            let activation = match &self.activation {
                Some(name) => parse_activation(name, alpha)?,
                None => Activation::leaky(alpha),
            };
            return Ok(ConvLayer::Conv {
                kernel,
                filters,
                activation,
            });
        }
        if self.filters.is_some() || self.activation.is_some() {
            return Err(config_err(format!(
                "{branch} layer {index}: filters/activation only apply to conv"
            )));
        }
        if let Some([ph, pw]) = self.pool {
            return Ok(ConvLayer::Pool { ph, pw });
        }
        Ok(ConvLayer::CollapseMax)
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, CoactError> {
        toml::from_str(text).map_err(|e| config_err(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CoactError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Build the network description. `preset_flag` is a command-line preset
    /// that wins over the file's; scalar overrides from the file apply to
    /// either source.
    pub fn network(&self, preset_flag: Option<&str>) -> Result<NetworkConfig, CoactError> {
        let n = &self.network;
        let preset = preset_flag.or(n.preset.as_deref());
        let mut config = match (preset, n.branches.is_empty()) {
            (Some(_), false) => {
                return Err(config_err(
                    "choose a preset or inline [[network.branch]] tables, not both",
                ))
            }
            (Some(name), true) => presets::by_name(name)?,
            (None, false) => self.inline_network()?,
            (None, true) => {
                return Err(config_err(
                    "no network configured: name a preset or define [[network.branch]] tables",
                ))
            }
        };
        if let Some(v) = n.activity_count {
            config.activity_count = v;
        }
        if let Some(v) = n.level2_width {
            config.level2_width = v;
        }
        if let Some(v) = n.fusion_width {
            config.fusion_width = Some(v);
        }
        if let Some(v) = n.threshold {
            config.threshold = v;
        }
        if let Some(v) = n.dropout_rate {
            config.dropout_rate = v;
        }
        if let Some(v) = n.leaky_alpha {
            config.leaky_alpha = v;
        }
        if let Some(name) = &n.feature_activation {
            let act = parse_activation(name, config.leaky_alpha)?;
            config.set_feature_activation(act);
        }
        config.validate()?;
        Ok(config)
    }

    fn inline_network(&self) -> Result<NetworkConfig, CoactError> {
        let n = &self.network;
        let alpha = n.leaky_alpha.unwrap_or(presets::DEFAULT_LEAKY_ALPHA);
        let mut branches = Vec::with_capacity(n.branches.len());
        for b in &n.branches {
            let modality = parse_modality(&b.modality)?;
            let layers = b
                .layers
                .iter()
                .enumerate()
                .map(|(i, entry)| entry.to_layer(&b.modality, i, alpha))
                .collect::<Result<Vec<_>, _>>()?;
            branches.push(BranchConfig {
                modality,
                conv: ModalityConvSpec {
                    input: b.input,
                    layers,
                },
                lstm_width: b.lstm_width,
            });
        }
        let multi = branches.len() > 1;
        Ok(NetworkConfig {
            branches,
            fusion_width: if multi { n.fusion_width } else { None },
            level2_width: n
                .level2_width
                .ok_or_else(|| config_err("inline network needs level2_width"))?,
            activity_count: n
                .activity_count
                .ok_or_else(|| config_err("inline network needs activity_count"))?,
            threshold: n.threshold.unwrap_or(presets::DEFAULT_THRESHOLD),
            dropout_rate: n.dropout_rate.unwrap_or(0.5),
            leaky_alpha: alpha,
            preset: None,
        })
    }

    /// Build the training plan. `network_dropout` fills the plan's dropout
    /// when the `[train]` section does not set its own.
    pub fn plan(&self, network_dropout: f64) -> Result<TrainPlan, CoactError> {
        let t = &self.train;
        let mut plan = match t.protocol.as_deref() {
            None | Some("desk") => TrainPlan::desk(),
            Some("paper") => TrainPlan::paper_faithful(),
            Some(other) => {
                return Err(config_err(format!(
                    "unknown protocol {other:?} (want desk or paper)"
                )))
            }
        };
        plan.dropout_rate = network_dropout;
        if let Some(v) = t.split_fraction {
            plan.split_fraction = v;
        }
        if let Some(v) = t.epochs {
            plan.epochs = v;
        }
        if let Some(v) = t.minibatch_seconds {
            plan.minibatch_seconds = v;
        }
        if let Some(v) = t.lr {
            plan.lr = v;
        }
        if let Some(v) = t.dropout_rate {
            plan.dropout_rate = v;
        }
        if let Some(v) = t.seed {
            plan.seed = v;
        }
        if let Some(v) = t.checkpoint_every {
            plan.checkpoint_every = v;
        }
        plan.bit_weights = t.bit_weights.clone();
        plan.validate()?;
        Ok(plan)
    }

    pub fn mfsc(&self) -> Result<MfscConfig, CoactError> {
        let m = &self.mfsc;
        let mut config = MfscConfig::default();
        if let Some(shape) = &m.filter_shape {
            config.filter_shape = match shape.as_str() {
                "triangle" => BandFilterShape::Triangle,
                "hamming" => BandFilterShape::Hamming,
                other => {
                    return Err(config_err(format!(
                        "unknown filter shape {other:?} (want triangle or hamming)"
                    )))
                }
            };
        }
        if let Some(v) = m.bands {
            config.bands = v;
        }
        if let Some(v) = m.frame_len {
            config.frame_len = v;
        }
        if let Some(v) = m.frames_per_second {
            config.frames_per_second = v;
        }
        if let Some(v) = m.log_floor {
            config.log_floor = v;
        }
        Ok(config)
    }

    /// Antenna layout, loaded from `rss.geometry` resolved against
    /// `base_dir`, or the built-in layout when unset.
    pub fn geometry(&self, base_dir: &Path) -> Result<AntennaGeometry, CoactError> {
        match &self.rss.geometry {
            None => Ok(default_geometry()),
            Some(rel) => {
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                AntennaGeometry::from_toml(&text)
            }
        }
    }

    /// (offset_dbm, range_db) for signal-strength normalization.
    pub fn rss_normalization(&self) -> (f64, f64) {
        (
            self.rss.offset_dbm.unwrap_or(95.0),
            self.rss.range_db.unwrap_or(65.0),
        )
    }

    pub fn composite_plan(&self) -> Result<CompositePlan, CoactError> {
        let c = &self.composite;
        let plan = CompositePlan {
            rows: c.rows.unwrap_or(2),
            cols: c.cols.unwrap_or(3),
            distinct_classes: c.distinct_classes.unwrap_or(true),
            subset_size: c.subset_size,
            train_count: c.train_count.unwrap_or(50_000),
            test_count: c.test_count.unwrap_or(10_000),
        };
        if plan.rows == 0 || plan.cols == 0 {
            return Err(config_err("composite grid needs at least one tile"));
        }
        if plan.train_count == 0 || plan.test_count == 0 {
            return Err(config_err("composite counts must be positive"));
        }
        Ok(plan)
    }

    /// Synthetic-case process plus how many cases to generate.
    pub fn synth_spec(&self) -> Result<(SyntheticCaseSpec, usize), CoactError> {
        let s = &self.synth;
        let seconds = s.seconds.unwrap_or(240);
        let mut spec = match s.kind.as_deref() {
            None | Some("tiny") => tiny_spec(s.activities.unwrap_or(6), seconds),
            Some("trauma_like") => {
                if let Some(a) = s.activities {
                    let fixed = trauma_like_spec(seconds).activities.len();
                    if a != fixed {
                        return Err(config_err(format!(
                            "trauma_like generates {fixed} activities, not {a}"
                        )));
                    }
                }
                trauma_like_spec(seconds)
            }
            Some(other) => {
                return Err(config_err(format!(
                    "unknown synth kind {other:?} (want tiny or trauma_like)"
                )))
            }
        };
        if let Some(v) = s.snr {
            spec.snr = v;
        }
        for a in &mut spec.activities {
            if let Some(v) = s.rate {
                a.rate = v;
            }
            if let Some(v) = s.mean_duration {
                a.mean_duration = v;
            }
            if let Some(v) = s.sd_duration {
                a.sd_duration = v;
            }
        }
        spec.validate()?;
        Ok((spec, s.cases.unwrap_or(6)))
    }

    pub fn sweep(&self, seed: u64) -> SweepConfig {
        let s = &self.sweep;
        SweepConfig {
            sizes: s.sizes.clone().unwrap_or_else(|| vec![10, 50, 100]),
            train_count: s.train_count.unwrap_or(300),
            test_count: s.test_count.unwrap_or(100),
            epochs: s.epochs.unwrap_or(3),
            update_budget: s.update_budget.unwrap_or(10_000),
            lr: s.lr.unwrap_or(1e-3),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_resolves_to_defaults() {
        let config = AppConfig::from_toml("").unwrap();
        let plan = config.plan(0.5).unwrap();
        assert_eq!(plan.epochs, 50);
        assert_eq!(plan.minibatch_seconds, 60);
        assert_eq!(plan.dropout_rate, 0.5);
        let mfsc = config.mfsc().unwrap();
        assert_eq!(mfsc.bands, 36);
        assert_eq!(mfsc.filter_shape, BandFilterShape::Triangle);
        assert_eq!(config.rss_normalization(), (95.0, 65.0));
        assert_eq!(config.geometry(Path::new(".")).unwrap().antennas.len(), 8);
        // No preset and no branches is an error, not a silent default.
        assert!(config.network(None).is_err());
    }

    #[test]
    fn preset_with_scalar_overrides() {
        let text = r#"
            [network]
            preset = "trauma35"
            dropout_rate = 0.25
            threshold = 0.6
            feature_activation = "tanh"
        "#;
        let config = AppConfig::from_toml(text).unwrap();
        let net = config.network(None).unwrap();
        assert_eq!(net.activity_count, 35);
        assert_eq!(net.dropout_rate, 0.25);
        assert_eq!(net.threshold, 0.6);
        for branch in &net.branches {
            let last_conv = branch
                .conv
                .layers
                .iter()
                .rev()
                .find_map(|l| match l {
                    ConvLayer::Conv { activation, .. } => Some(*activation),
                    _ => None,
                })
                .unwrap();
            assert_eq!(last_conv, Activation::Tanh);
        }
    }

    #[test]
    fn command_line_preset_wins_over_the_file() {
        let text = "[network]\npreset = \"trauma35\"\n";
        let config = AppConfig::from_toml(text).unwrap();
        let net = config.network(Some("olympic16")).unwrap();
        assert_eq!(net.activity_count, 16);
    }

    #[test]
    fn inline_branches_build_and_validate() {
        let text = r#"
            [network]
            level2_width = 4
            activity_count = 6
            dropout_rate = 0.0

            [[network.branch]]
            modality = "depth"
            input = [8, 8, 1]
            lstm_width = 5
            layers = [
                { conv = 3, filters = 4 },
                { pool = [2, 2] },
                { conv = 3, filters = 6, activation = "sigmoid" },
                { pool = [4, 4] },
            ]
        "#;
        let config = AppConfig::from_toml(text).unwrap();
        let net = config.network(None).unwrap();
        assert_eq!(net.validate().unwrap(), [6]);
        assert_eq!(net.fusion_width, None);
        assert_eq!(net.dropout_rate, 0.0);
    }

    #[test]
    fn preset_and_inline_branches_conflict() {
        let text = r#"
            [network]
            preset = "trauma35"

            [[network.branch]]
            modality = "depth"
            input = [8, 8, 1]
            lstm_width = 5
            layers = [{ collapse = true }]
        "#;
        let config = AppConfig::from_toml(text).unwrap();
        let err = config.network(None).unwrap_err().to_string();
        assert!(err.contains("not both"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(AppConfig::from_toml("[train]\nlearning_rate = 0.1\n").is_err());
        assert!(AppConfig::from_toml("[nets]\n").is_err());
    }

    #[test]
    fn bad_enum_strings_name_the_value() {
        let config = AppConfig::from_toml("[mfsc]\nfilter_shape = \"boxcar\"\n").unwrap();
        let err = config.mfsc().unwrap_err().to_string();
        assert!(err.contains("boxcar"), "{err}");

        let config =
            AppConfig::from_toml("[network]\npreset = \"trauma35\"\nfeature_activation = \"elu\"\n")
                .unwrap();
        let err = config.network(None).unwrap_err().to_string();
        assert!(err.contains("elu"), "{err}");
    }

    #[test]
    fn layer_entries_must_pick_one_kind() {
        let text = r#"
            [network]
            level2_width = 4
            activity_count = 2

            [[network.branch]]
            modality = "depth"
            input = [4, 4, 1]
            lstm_width = 3
            layers = [{ conv = 3, filters = 2, pool = [2, 2] }]
        "#;
        let config = AppConfig::from_toml(text).unwrap();
        let err = config.network(None).unwrap_err().to_string();
        assert!(err.contains("exactly one"), "{err}");
    }

    #[test]
    fn paper_protocol_with_overrides() {
        let text = r#"
            [train]
            protocol = "paper"
            minibatch_seconds = 120
            lr = 0.002
            seed = 11
            bit_weights = [1.0, 4.0]
        "#;
        let config = AppConfig::from_toml(text).unwrap();
        let plan = config.plan(0.5).unwrap();
        assert_eq!(plan.epochs, 1000);
        assert_eq!(plan.minibatch_seconds, 120);
        assert_eq!(plan.lr, 0.002);
        assert_eq!(plan.seed, 11);
        assert_eq!(plan.bit_weights, Some(vec![1.0, 4.0]));
    }

    #[test]
    fn synth_and_sweep_sections_resolve() {
        let text = r#"
            [synth]
            kind = "trauma_like"
            seconds = 120
            snr = 4.0
            cases = 3

            [sweep]
            sizes = [2, 5]
            train_count = 20
            update_budget = 500
        "#;
        let config = AppConfig::from_toml(text).unwrap();
        let (spec, cases) = config.synth_spec().unwrap();
        assert_eq!(spec.activities.len(), 35);
        assert_eq!(spec.seconds, 120);
        assert_eq!(spec.snr, 4.0);
        assert_eq!(cases, 3);
        let sweep = config.sweep(9);
        assert_eq!(sweep.sizes, [2, 5]);
        assert_eq!(sweep.train_count, 20);
        assert_eq!(sweep.test_count, 100);
        assert_eq!(sweep.seed, 9);
    }

    #[test]
    fn geometry_file_is_loaded_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("room.toml"),
            "extent = [10, 12]\n[[antenna]]\ncenter = [5.0, 5.0]\nshape = \"circle\"\nradius = 4.0\n",
        )
        .unwrap();
        let config = AppConfig::from_toml("[rss]\ngeometry = \"room.toml\"\n").unwrap();
        let geometry = config.geometry(dir.path()).unwrap();
        assert_eq!(geometry.antennas.len(), 1);
        assert_eq!((geometry.rows, geometry.cols), (10, 12));
    }

    #[test]
    fn composite_defaults_match_the_experiment_scale() {
        let config = AppConfig::from_toml("").unwrap();
        let plan = config.composite_plan().unwrap();
        assert_eq!((plan.rows, plan.cols), (2, 3));
        assert!(plan.distinct_classes);
        assert_eq!(plan.train_count, 50_000);
        assert_eq!(plan.test_count, 10_000);
        let small = AppConfig::from_toml("[composite]\ntrain_count = 0\n").unwrap();
        assert!(small.composite_plan().is_err());
    }
}
