//! Minimal dense numeric kernel: tensors, activations, dropout, loss,
//! optimizer, deterministic RNG, and the finite-difference gradient oracle.

pub mod adam;
pub mod gradcheck;
pub mod ops;
pub mod params;
pub mod rng;
pub mod tensor;

pub use adam::{adam_step, AdamParams, AdamState};
pub use gradcheck::{grad_check, DEFAULT_STEP};
pub use ops::{
    cross_entropy, cross_entropy_grad, dropout, sigmoid, sigmoid_map, softmax_vec, tanh_map,
    PROB_FLOOR,
};
pub use params::{Param, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor2;
