//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Tape`] records every operation applied to tensors attached to it;
//! [`Tensor::backward`] sweeps the record once in reverse. Tensors that were
//! never attached behave as constants.

mod fd;
mod tape;
mod tensor;

pub use fd::{finite_diff_gradient, DEFAULT_STEP};
pub use tape::{Gradients, Tape};
pub use tensor::Tensor;
