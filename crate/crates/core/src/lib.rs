//! Concurrent-activity recognition pipeline: turns raw sensor streams into
//! per-second arrays, runs them through a multimodal CNN-LSTM with a binary
//! coding head, trains with windowed truncated backpropagation, and scores
//! predictions with multi-label metrics. A byte-accounting module estimates
//! per-layer memory, and the experiments layer covers composite-image and
//! synthetic-case studies at desk scale.

pub mod config;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod memcalc;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod synth;
pub mod training;

pub use error::CoactError;

/// Working-precision aliases: deployment and experiments run at 32-bit,
/// gradient verification at 64.
pub type Tensor32 = coact_nn::Tensor<f32>;
pub type Tensor64 = coact_nn::Tensor<f64>;
pub type Network32 = model::Network<f32>;
pub type Network64 = model::Network<f64>;
