//! The recognizer network: per-modality ConvNets feeding branch LSTMs, an
//! optional fusion layer, a shared second-level LSTM, and the pairwise-scaled
//! coding head that emits one N-bit activity code per second.

pub mod network;
pub mod presets;
pub mod spec;

pub use network::{
    threshold_bits, BinaryActivityCode, Network, NetworkState, SecondInputs,
};
pub use spec::{BranchConfig, ConvLayer, Modality, ModalityConvSpec, NetworkConfig};
