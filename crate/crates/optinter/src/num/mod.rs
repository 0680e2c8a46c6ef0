//! Dense f64 numeric kernel with explicit forward/backward operations.
//!
//! Everything is hand-derived and 64-bit: the kernel is sized for desk-scale
//! experiments where tight finite-difference gradient checks matter more
//! than throughput. No graph autodiff; each op exposes its own backward.

mod adam;
mod gradcheck;
mod init;
mod ops;
mod rng;
mod tensor;

pub use adam::{adam_step, AdamConfig, Parameter};
pub use gradcheck::{grad_check, BlockReport, DiffFunction, GradCheckReport};
pub use init::xavier_init;
pub use ops::{
    affine_backward, affine_forward, bce_loss, layernorm_backward, layernorm_forward, relu_backward,
    relu_forward, sigmoid, sigmoid_bce_with_logits, sigmoid_scalar, LayerNormCache, PROB_CLAMP,
};
pub use rng::Rng;
pub use tensor::Tensor2;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    NonFinite(String),
}
