//! Named architectures. The three deployment presets pin the branch
//! schedules the memory estimator also describes; the composite presets
//! scale the same pattern down to tiled-image extents; the tiny presets
//! keep gradient checks and training tests fast.

use crate::error::{config_err, CoactError};
use crate::model::spec::{BranchConfig, ConvLayer, Modality, ModalityConvSpec, NetworkConfig};
use coact_nn::ops::Activation;

pub const DEFAULT_LEAKY_ALPHA: f64 = 0.01;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DROPOUT: f64 = 0.5;

fn leaky() -> Activation {
    Activation::leaky(DEFAULT_LEAKY_ALPHA)
}

fn conv(kernel: usize, filters: usize) -> ConvLayer {
    ConvLayer::Conv {
        kernel,
        filters,
        activation: leaky(),
    }
}

/// Final 1x1 conv carries the squashing activation so every branch feeds its
/// LSTM values in (0, 1).
fn feature_conv(filters: usize) -> ConvLayer {
    ConvLayer::Conv {
        kernel: 1,
        filters,
        activation: Activation::Sigmoid,
    }
}

fn pool(ph: usize, pw: usize) -> ConvLayer {
    ConvLayer::Pool { ph, pw }
}

/// 256x256xC in, 1024 features out: six 3x3 stages doubling filters with
/// pools 2,2,2,2,4,4, then the 1x1 feature conv.
pub fn depth_conv_spec(channels: usize) -> ModalityConvSpec {
    ModalityConvSpec {
        input: [256, 256, channels],
        layers: vec![
            conv(3, 32),
            pool(2, 2),
            conv(3, 64),
            pool(2, 2),
            conv(3, 128),
            pool(2, 2),
            conv(3, 256),
            pool(2, 2),
            conv(3, 512),
            pool(4, 4),
            conv(3, 1024),
            pool(4, 4),
            feature_conv(1024),
        ],
    }
}

/// 64x64x1 in, 512 features out, pools 2,2,4,4.
pub fn audio_conv_spec() -> ModalityConvSpec {
    ModalityConvSpec {
        input: [64, 64, 1],
        layers: vec![
            conv(3, 32),
            pool(2, 2),
            conv(3, 64),
            pool(2, 2),
            conv(3, 128),
            pool(4, 4),
            conv(3, 256),
            pool(4, 4),
            feature_conv(512),
        ],
    }
}

/// 36x48x25 in, 512 features out. The non-square extent pools to 3x3, the
/// spatial collapse folds that to 1x1, and the 1x1 conv widens to 512.
pub fn rss_conv_spec(object_channels: usize) -> ModalityConvSpec {
    ModalityConvSpec {
        input: [36, 48, object_channels],
        layers: vec![
            conv(3, 32),
            pool(2, 2),
            conv(3, 64),
            pool(2, 2),
            conv(3, 128),
            pool(3, 4),
            conv(3, 256),
            ConvLayer::CollapseMax,
            feature_conv(512),
        ],
    }
}

/// Three-branch depth + audio + RSS network, 35 activities.
pub fn trauma35() -> NetworkConfig {
    NetworkConfig {
        branches: vec![
            BranchConfig {
                modality: Modality::Depth,
                conv: depth_conv_spec(1),
                lstm_width: 512,
            },
            BranchConfig {
                modality: Modality::Audio,
                conv: audio_conv_spec(),
                lstm_width: 256,
            },
            BranchConfig {
                modality: Modality::Rss,
                conv: rss_conv_spec(25),
                lstm_width: 256,
            },
        ],
        fusion_width: Some(512),
        level2_width: 256,
        activity_count: 35,
        threshold: DEFAULT_THRESHOLD,
        dropout_rate: DEFAULT_DROPOUT,
        leaky_alpha: DEFAULT_LEAKY_ALPHA,
        preset: Some("trauma35".into()),
    }
}

/// Single RGB ConvNet, no fusion, level-1 LSTM feeding level-2 directly.
fn rgb_single(activities: usize, preset: &str) -> NetworkConfig {
    NetworkConfig {
        branches: vec![BranchConfig {
            modality: Modality::Rgb,
            conv: depth_conv_spec(3),
            lstm_width: 512,
        }],
        fusion_width: None,
        level2_width: 256,
        activity_count: activities,
        threshold: DEFAULT_THRESHOLD,
        dropout_rate: DEFAULT_DROPOUT,
        leaky_alpha: DEFAULT_LEAKY_ALPHA,
        preset: Some(preset.into()),
    }
}

pub fn charades157() -> NetworkConfig {
    rgb_single(157, "charades157")
}

pub fn olympic16() -> NetworkConfig {
    rgb_single(16, "olympic16")
}

/// 2x3 grids of 28x28 grayscale tiles: 56x84x1 in, 512 features out.
pub fn mnist_composite() -> NetworkConfig {
    NetworkConfig {
        branches: vec![BranchConfig {
            modality: Modality::Tiles,
            conv: ModalityConvSpec {
                input: [56, 84, 1],
                layers: vec![
                    conv(3, 32),
                    pool(2, 2),
                    conv(3, 64),
                    pool(2, 2),
                    conv(3, 128),
                    pool(2, 3),
                    conv(3, 256),
                    pool(7, 7),
                    feature_conv(512),
                ],
            },
            lstm_width: 256,
        }],
        fusion_width: None,
        level2_width: 128,
        activity_count: 10,
        threshold: DEFAULT_THRESHOLD,
        dropout_rate: 0.25,
        leaky_alpha: DEFAULT_LEAKY_ALPHA,
        preset: Some("mnist_composite".into()),
    }
}

/// 2x3 grids of 32x32 color tiles: 64x96x3 in, 512 features out.
pub fn cifar_composite() -> NetworkConfig {
    NetworkConfig {
        branches: vec![BranchConfig {
            modality: Modality::Tiles,
            conv: ModalityConvSpec {
                input: [64, 96, 3],
                layers: vec![
                    conv(3, 32),
                    pool(2, 2),
                    conv(3, 64),
                    pool(2, 2),
                    conv(3, 128),
                    pool(2, 2),
                    conv(3, 256),
                    pool(2, 3),
                    conv(3, 512),
                    pool(4, 4),
                    feature_conv(512),
                ],
            },
            lstm_width: 256,
        }],
        fusion_width: None,
        level2_width: 128,
        activity_count: 100,
        threshold: DEFAULT_THRESHOLD,
        dropout_rate: 0.25,
        leaky_alpha: DEFAULT_LEAKY_ALPHA,
        preset: Some("cifar_composite".into()),
    }
}

/// Small three-branch config with the full topology (three ConvNets, fusion,
/// both LSTM levels, coding head); fast enough for finite differences.
pub fn tiny_multimodal(activities: usize) -> NetworkConfig {
    NetworkConfig {
        branches: vec![
            BranchConfig {
                modality: Modality::Depth,
                conv: ModalityConvSpec {
                    input: [8, 8, 1],
                    layers: vec![
                        conv(3, 4),
                        pool(2, 2),
                        conv(3, 6),
                        pool(4, 4),
                        feature_conv(6),
                    ],
                },
                lstm_width: 6,
            },
            BranchConfig {
                modality: Modality::Audio,
                conv: ModalityConvSpec {
                    input: [4, 4, 1],
                    layers: vec![
                        conv(3, 4),
                        pool(2, 2),
                        conv(3, 4),
                        pool(2, 2),
                        feature_conv(4),
                    ],
                },
                lstm_width: 4,
            },
            BranchConfig {
                modality: Modality::Rss,
                conv: ModalityConvSpec {
                    input: [6, 9, 3],
                    layers: vec![
                        conv(3, 4),
                        pool(2, 3),
                        conv(3, 4),
                        ConvLayer::CollapseMax,
                        feature_conv(4),
                    ],
                },
                lstm_width: 4,
            },
        ],
        fusion_width: Some(8),
        level2_width: 4,
        activity_count: activities,
        threshold: DEFAULT_THRESHOLD,
        dropout_rate: 0.25,
        leaky_alpha: DEFAULT_LEAKY_ALPHA,
        preset: None,
    }
}

/// One small branch, no fusion; the single-ConvNet topology at test scale.
pub fn tiny_single(activities: usize) -> NetworkConfig {
    NetworkConfig {
        branches: vec![BranchConfig {
            modality: Modality::Depth,
            conv: ModalityConvSpec {
                input: [6, 6, 1],
                layers: vec![
                    conv(3, 4),
                    pool(2, 2),
                    conv(3, 6),
                    pool(3, 3),
                    feature_conv(6),
                ],
            },
            lstm_width: 5,
        }],
        fusion_width: None,
        level2_width: 4,
        activity_count: activities,
        threshold: DEFAULT_THRESHOLD,
        dropout_rate: 0.25,
        leaky_alpha: DEFAULT_LEAKY_ALPHA,
        preset: None,
    }
}

/// Look up a deployment or experiment preset by name.
pub fn by_name(name: &str) -> Result<NetworkConfig, CoactError> {
    match name {
        "trauma35" => Ok(trauma35()),
        "charades157" => Ok(charades157()),
        "olympic16" => Ok(olympic16()),
        "mnist_composite" => Ok(mnist_composite()),
        "cifar_composite" => Ok(cifar_composite()),
        "tiny_multimodal" => Ok(tiny_multimodal(6)),
        "tiny_single" => Ok(tiny_single(6)),
        other => Err(config_err(format!(
            "unknown preset '{other}' (want trauma35, charades157, olympic16, \
             mnist_composite, cifar_composite, tiny_multimodal, or tiny_single)"
        ))),
    }
}
