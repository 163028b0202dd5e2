//! Adam optimizer with bias correction.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;
use crate::nn::tensor::Tensor2;

/// Optimizer hyperparameters. Defaults are the conventional
/// beta1 = 0.9, beta2 = 0.999, eps = 1e-8 at learning rate 0.001.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            ..Default::default()
        }
    }
}

/// Per-parameter first/second moment estimates plus the shared step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    moments: IndexMap<String, (Tensor2, Tensor2)>,
    t: u64,
}

impl AdamState {
    /// Zero-initialized moments shaped after `store`.
    pub fn new(store: &ParamStore) -> Self {
        let moments = store
            .iter()
            .map(|(name, p)| {
                let (r, c) = p.value.shape();
                (name.to_string(), (Tensor2::zeros(r, c), Tensor2::zeros(r, c)))
            })
            .collect();
        AdamState { moments, t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update over every parameter in `store`, consuming the gradients
/// currently held in the store.
///
/// With `m` and `v` the decayed first and second moments of the gradient and
/// `t` the step counter (incremented once per call), each parameter moves by
///
/// ```text
/// m_hat = m / (1 - beta1^t)
/// v_hat = v / (1 - beta2^t)
/// theta -= lr * m_hat / sqrt(v_hat + eps)
/// ```
///
/// The stabilizer sits inside the square root; the one-step reference value
/// in the unit tests pins that placement.
pub fn adam_step(store: &mut ParamStore, state: &mut AdamState, hp: &AdamParams) -> Result<()> {
    if hp.lr <= 0.0 {
        return Err(Error::Argument(format!(
            "learning rate must be positive, got {}",
            hp.lr
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - hp.beta1.powi(state.t as i32);
    let bc2 = 1.0 - hp.beta2.powi(state.t as i32);
    for (name, param) in store.iter_mut() {
        let (m, v) = state
            .moments
            .get_mut(name)
            .ok_or_else(|| Error::State(format!("optimizer state missing parameter {name:?}")))?;
        if m.shape() != param.value.shape() {
            return Err(Error::State(format!(
                "optimizer moment shape {:?} does not match parameter {name:?} shape {:?}",
                m.shape(),
                param.value.shape()
            )));
        }
        let grads = param.grad.data();
        let values = param.value.data_mut();
        let ms = m.data_mut();
        let vs = v.data_mut();
        for i in 0..values.len() {
            let g = grads[i];
            ms[i] = hp.beta1 * ms[i] + (1.0 - hp.beta1) * g;
            vs[i] = hp.beta2 * vs[i] + (1.0 - hp.beta2) * g * g;
            let m_hat = ms[i] / bc1;
            let v_hat = vs[i] / bc2;
            values[i] -= hp.lr * m_hat / (v_hat + hp.eps).sqrt();
        }
    }
    Ok(())
}
