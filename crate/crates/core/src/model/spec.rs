//! Architecture description: per-branch ConvNet schedules and the two-level
//! recurrent fusion joining them. Validation walks every shape once so a bad
//! config fails at build time naming the offending layer.

use crate::error::{config_err, CoactError};
use coact_nn::ops::activation::Activation;

/// Input stream a branch consumes. `Rgb` is the single-ConvNet video mode;
/// `Tiles` is the composite-image experiment input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Depth,
    Audio,
    Rss,
    Rgb,
    Tiles,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Depth => "depth",
            Modality::Audio => "audio",
            Modality::Rss => "rss",
            Modality::Rgb => "rgb",
            Modality::Tiles => "tiles",
        }
    }
}

/// One stage of a branch ConvNet. Convs are odd-square, same-padded, so only
/// pools change the spatial extent; `CollapseMax` folds whatever extent
/// remains down to 1 x 1.
#[derive(Debug, Clone)]
pub enum ConvLayer {
    Conv {
        kernel: usize,
        filters: usize,
        activation: Activation,
    },
    Pool {
        ph: usize,
        pw: usize,
    },
    CollapseMax,
}

/// A branch ConvNet: input extent plus the layer schedule. The walk must end
/// at spatial extent 1 x 1; the surviving channel count is the feature length
/// handed to the branch LSTM.
#[derive(Debug, Clone)]
pub struct ModalityConvSpec {
    pub input: [usize; 3],
    pub layers: Vec<ConvLayer>,
}

impl ModalityConvSpec {
    /// Validate the layer walk and return the feature length. Errors name
    /// the layer by kind and position.
    pub fn feature_len(&self, branch: &str) -> Result<usize, CoactError> {
        let [mut h, mut w, mut c] = self.input;
        if h == 0 || w == 0 || c == 0 {
            return Err(config_err(format!(
                "{branch}: input extent {:?} has a zero dimension",
                self.input
            )));
        }
        if self.layers.is_empty() {
            return Err(config_err(format!("{branch}: no layers")));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                ConvLayer::Conv { kernel, filters, .. } => {
                    if kernel % 2 == 0 || *kernel == 0 {
                        return Err(config_err(format!(
                            "{branch} conv{}: kernel {kernel} must be odd",
                            i + 1
                        )));
                    }
                    if *filters == 0 {
                        return Err(config_err(format!(
                            "{branch} conv{}: zero filters",
                            i + 1
                        )));
                    }
                    c = *filters;
                }
                ConvLayer::Pool { ph, pw } => {
                    if *ph == 0 || *pw == 0 || h % ph != 0 || w % pw != 0 {
                        return Err(config_err(format!(
                            "{branch} pool{}: {ph}x{pw} does not divide {h}x{w}",
                            i + 1
                        )));
                    }
                    h /= ph;
                    w /= pw;
                }
                ConvLayer::CollapseMax => {
                    h = 1;
                    w = 1;
                }
            }
        }
        if h != 1 || w != 1 {
            return Err(config_err(format!(
                "{branch}: layers end at {h}x{w}, want 1x1"
            )));
        }
        Ok(c)
    }

    /// Rewrite the activation of the final conv layer.
    pub fn set_feature_activation(&mut self, activation: Activation) {
        if let Some(ConvLayer::Conv { activation: a, .. }) = self
            .layers
            .iter_mut()
            .rev()
            .find(|l| matches!(l, ConvLayer::Conv { .. }))
        {
            *a = activation;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchConfig {
    pub modality: Modality,
    pub conv: ModalityConvSpec,
    /// Hidden width of this branch's recurrent layer.
    pub lstm_width: usize,
}

/// The whole network: branches, optional fusion, the shared second-level
/// recurrent layer, and the coding head.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub branches: Vec<BranchConfig>,
    /// Dense layer joining the branch LSTM outputs. Present exactly when
    /// there is more than one branch.
    pub fusion_width: Option<usize>,
    pub level2_width: usize,
    pub activity_count: usize,
    /// Score cut for emitting a 1 bit; strictly greater-than.
    pub threshold: f64,
    /// Drop rate on the level-2 LSTM input during training.
    pub dropout_rate: f64,
    /// Slope for every leaky rectifier outside the conv specs (fusion and
    /// coding dense layers).
    pub leaky_alpha: f64,
    pub preset: Option<String>,
}

impl NetworkConfig {
    /// Check every invariant; returns per-branch feature lengths in order.
    pub fn validate(&self) -> Result<Vec<usize>, CoactError> {
        if self.branches.is_empty() {
            return Err(config_err("no branches configured"));
        }
        if self.activity_count == 0 {
            return Err(config_err("activity count must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(config_err(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(config_err(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.leaky_alpha < 0.0 || self.leaky_alpha >= 1.0 {
            return Err(config_err(format!(
                "leaky slope {} outside [0, 1)",
                self.leaky_alpha
            )));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if self.branches[..i].iter().any(|o| o.modality == b.modality) {
                return Err(config_err(format!(
                    "duplicate branch modality {}",
                    b.modality.name()
                )));
            }
        }
        let mut features = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let f = branch.conv.feature_len(branch.modality.name())?;
            if branch.lstm_width == 0 {
                return Err(config_err(format!(
                    "{}: zero LSTM width",
                    branch.modality.name()
                )));
            }
            features.push(f);
        }
        match (self.branches.len() > 1, self.fusion_width) {
            (true, None) => {
                return Err(config_err("multiple branches require a fusion layer"))
            }
            (false, Some(_)) => {
                return Err(config_err("single branch must not have a fusion layer"))
            }
            (true, Some(fw)) => {
                if fw == 0 || fw % 2 != 0 {
                    return Err(config_err(format!("fusion width {fw} must be even")));
                }
                if self.level2_width * 2 != fw {
                    return Err(config_err(format!(
                        "second-level LSTM width {} must be half the fusion width {fw}",
                        self.level2_width
                    )));
                }
            }
            (false, None) => {
                if self.level2_width == 0 {
                    return Err(config_err("second-level LSTM width must be positive"));
                }
            }
        }
        Ok(features)
    }

    /// Input width of the level-2 LSTM: the fusion output, or the lone
    /// branch's LSTM output.
    pub fn level2_input_width(&self) -> usize {
        self.fusion_width
            .unwrap_or_else(|| self.branches[0].lstm_width)
    }

    pub fn branch(&self, modality: Modality) -> Option<&BranchConfig> {
        self.branches.iter().find(|b| b.modality == modality)
    }

    /// Rewrite the final conv activation of every branch.
    pub fn set_feature_activation(&mut self, activation: Activation) {
        for branch in &mut self.branches {
            branch.conv.set_feature_activation(activation);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn leaky() -> Activation {
        Activation::leaky(0.01)
    }

    #[test]
    fn feature_walk_tracks_channels_and_extent() {
        let spec = ModalityConvSpec {
            input: [8, 8, 1],
            layers: vec![
                ConvLayer::Conv { kernel: 3, filters: 4, activation: leaky() },
                ConvLayer::Pool { ph: 2, pw: 2 },
                ConvLayer::Conv { kernel: 3, filters: 6, activation: leaky() },
                ConvLayer::Pool { ph: 4, pw: 4 },
            ],
        };
        assert_eq!(spec.feature_len("t").unwrap(), 6);
    }

    #[test]
    fn indivisible_pool_is_named() {
        let spec = ModalityConvSpec {
            input: [9, 9, 1],
            layers: vec![
                ConvLayer::Conv { kernel: 3, filters: 4, activation: leaky() },
                ConvLayer::Pool { ph: 2, pw: 2 },
            ],
        };
        let err = spec.feature_len("audio").unwrap_err().to_string();
        assert!(err.contains("audio pool2"), "{err}");
    }

    #[test]
    fn walk_must_end_at_unit_extent() {
        let spec = ModalityConvSpec {
            input: [8, 8, 1],
            layers: vec![ConvLayer::Conv { kernel: 3, filters: 4, activation: leaky() }],
        };
        assert!(spec.feature_len("t").is_err());
    }

    #[test]
    fn collapse_handles_any_remaining_extent() {
        let spec = ModalityConvSpec {
            input: [6, 9, 2],
            layers: vec![
                ConvLayer::Conv { kernel: 3, filters: 4, activation: leaky() },
                ConvLayer::CollapseMax,
            ],
        };
        assert_eq!(spec.feature_len("t").unwrap(), 4);
    }

    #[test]
    fn fusion_rules_follow_branch_count() {
        let mut config = presets::tiny_multimodal(5);
        assert!(config.validate().is_ok());
        config.fusion_width = None;
        assert!(config.validate().is_err());

        let mut single = presets::tiny_single(3);
        assert!(single.validate().is_ok());
        single.fusion_width = Some(8);
        assert!(single.validate().is_err());
    }

    #[test]
    fn level2_must_be_half_of_fusion() {
        let mut config = presets::tiny_multimodal(5);
        config.level2_width += 1;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("half the fusion width"), "{err}");
    }

    #[test]
    fn feature_activation_rewrite_hits_the_last_conv() {
        let mut spec = ModalityConvSpec {
            input: [4, 4, 1],
            layers: vec![
                ConvLayer::Conv { kernel: 3, filters: 2, activation: leaky() },
                ConvLayer::Pool { ph: 4, pw: 4 },
                ConvLayer::Conv { kernel: 1, filters: 2, activation: Activation::Sigmoid },
            ],
        };
        spec.set_feature_activation(Activation::Tanh);
        match &spec.layers[2] {
            ConvLayer::Conv { activation, .. } => assert_eq!(*activation, Activation::Tanh),
            other => panic!("unexpected layer {other:?}"),
        }
        match &spec.layers[0] {
            ConvLayer::Conv { activation, .. } => assert_eq!(*activation, leaky()),
            other => panic!("unexpected layer {other:?}"),
        }
    }
}
