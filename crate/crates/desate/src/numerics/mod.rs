//! Dense f64 tensors with tape-based reverse-mode differentiation, plus Adam.
//!
//! Everything is eager: a [`Tape`] records each differentiable op as it
//! executes, [`Tape::backward`] walks the record once in reverse. Models keep
//! their parameters as plain [`Tensor`]s between steps and push them onto a
//! fresh tape every forward pass.

mod adam;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
