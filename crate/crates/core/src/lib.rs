//! Fusion-DeepONet: geometry-aware neural operators with derivative-enhanced
//! training losses, plus the data generators and analyses around them.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod geomdata;
mod linalg;
pub mod losses;
pub mod netcore;
pub mod operators;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::DenseTensor;
