//! Elementwise nonlinearities, softmax, dropout and the classification loss.

use crate::error::{Error, Result};
use crate::nn::rng::Rng;
use crate::nn::tensor::Tensor2;

/// Probability floor used inside the loss so a vanishing class probability
/// never produces `-ln 0`.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Elementwise hyperbolic tangent.
pub fn tanh_map(x: &Tensor2) -> Tensor2 {
    x.map(f64::tanh)
}

/// Elementwise logistic sigmoid.
pub fn sigmoid_map(x: &Tensor2) -> Tensor2 {
    x.map(sigmoid)
}

/// Softmax over a vector, computed with max-subtraction so large scores do
/// not overflow. Output entries are positive and sum to one.
pub fn softmax_vec(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::Argument("softmax of an empty vector".into()));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric("softmax input is not finite".into()));
    }
    let exps: Vec<f64> = z.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Inverted dropout.
///
/// In training mode with `p > 0`, each entry is kept with probability
/// `1 - p` and scaled by `1 / (1 - p)`; dropped entries become zero. The
/// returned mask holds the factor applied to each entry (`0` or `1/(1-p)`),
/// so the backward pass is an elementwise product with the mask.
///
/// One uniform draw is consumed per entry, in row-major order; an entry
/// survives when its draw `u` satisfies `u >= p`. In inference mode or with
/// `p == 0` the input passes through unchanged, the mask is all ones, and no
/// draws are consumed.
pub fn dropout(x: &Tensor2, p: f64, rng: &mut Rng, training: bool) -> Result<(Tensor2, Tensor2)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!(
            "dropout probability must be in [0, 1), got {p}"
        )));
    }
    if !training || p == 0.0 {
        let (rows, cols) = x.shape();
        return Ok((x.clone(), Tensor2::filled(rows, cols, 1.0)));
    }
    let keep_scale = 1.0 / (1.0 - p);
    let (rows, cols) = x.shape();
    let mut mask = Tensor2::zeros(rows, cols);
    for m in mask.data_mut() {
        if rng.next_f64() >= p {
            *m = keep_scale;
        }
    }
    let out = x.hadamard(&mask)?;
    Ok((out, mask))
}

/// Negative log-likelihood of the labelled class: `-ln(probs[label])`, with
/// the probability clamped to [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::Argument(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    Ok(-probs[label].max(PROB_FLOOR).ln())
}

/// Gradient of [`cross_entropy`] with respect to the probability vector.
///
/// Zero where the floor clamps (the loss is locally constant there).
pub fn cross_entropy_grad(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    if label >= probs.len() {
        return Err(Error::Argument(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let mut grad = vec![0.0; probs.len()];
    if probs[label] > PROB_FLOOR {
        grad[label] = -1.0 / probs[label];
    }
    Ok(grad)
}
