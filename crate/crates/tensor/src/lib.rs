//! Minimal dense tensor library with the forward operators needed by the
//! EgoNet pipeline and exact reverse-mode gradients.
//!
//! Values are stored as row-major `f64`. Forward kernels live in [`ops`] as
//! pure functions over [`Tensor`]; the [`Tape`] records them so that
//! [`Tape::backward`] can replay the adjoint kernels in reverse order.

mod error;
pub mod gradcheck;
pub mod ops;
mod tape;
mod tensor;

pub use error::TensorError;
pub use gradcheck::{grad_check, GradCheckReport, ParamCheck};
pub use ops::{Conv2dSpec, PoolSpec};
pub use tape::{Gradients, Mode, Tape, Var};
pub use tensor::Tensor;

pub type Result<T, E = TensorError> = std::result::Result<T, E>;
