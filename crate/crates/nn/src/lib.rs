//! A small reverse-mode autodiff engine for convolutional recurrent networks.
//!
//! The engine is generic over the scalar type through [`Scalar`]: `f32` for
//! training speed, `f64` for numerical verification (finite-difference
//! gradient checks run at `f64`). Values produced during a forward pass live
//! on an append-only [`tape::Tape`]; trainable parameters live outside the
//! tape in a [`params::ParamStore`] so that recurrent state can span windows
//! without re-recording weights.
//!
//! Layout conventions, used by every op:
//! * feature maps are HWC with the channel index fastest,
//! * conv kernels are `K x K x Cin x F` with the filter index fastest,
//! * dense weights are `N x D` row-major acting on column vectors.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod init;
pub mod ops;
pub mod params;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use error::NnError;
pub use params::{Param, ParamId, ParamStore};
pub use scalar::{Dtype, Scalar};
pub use tape::{Tape, ValueId};
pub use tensor::Tensor;

/// Training-precision tensor.
pub type Tensor32 = Tensor<f32>;
/// Verification-precision tensor.
pub type Tensor64 = Tensor<f64>;
