//! Forward and backward kernels. Each op is a pair of free functions with no
//! tape involvement; the tape module wires them into the autodiff graph.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod lstm;
pub mod loss;
pub mod pool;

pub use activation::Activation;
pub use conv::Padding;
