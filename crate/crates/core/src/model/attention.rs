//! Word-level contextual attention over bidirectional annotations.
//!
//! Each annotation is projected through one affine+tanh layer, scored
//! against a learned context vector, normalized into weights, and the
//! message representation is the weighted sum of the annotations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ops::softmax_vec;
use crate::nn::tensor::Tensor2;

/// How scores become weights. `Softmax` is the default exponential
/// normalization. `Linear` divides raw scores by their plain sum; it exists
/// for comparison only and fails when the sum is zero or weights leave [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AttentionNorm {
    #[default]
    Softmax,
    Linear,
}

/// Borrowed attention parameters: projection W_h (A x 2H), bias b_h (A x 1)
/// and context vector u_c (A x 1).
#[derive(Debug, Clone, Copy)]
pub struct AttentionParams<'a> {
    pub w_h: &'a Tensor2,
    pub b_h: &'a Tensor2,
    pub u_c: &'a Tensor2,
}

impl<'a> AttentionParams<'a> {
    pub fn proj_dim(&self) -> usize {
        self.w_h.rows()
    }

    pub fn ann_dim(&self) -> usize {
        self.w_h.cols()
    }

    fn validate(&self) -> Result<()> {
        let a = self.proj_dim();
        if self.b_h.shape() != (a, 1) || self.u_c.shape() != (a, 1) {
            return Err(Error::Shape(format!(
                "inconsistent attention shapes: W_h {}x{}, b_h {}x{}, u_c {}x{}",
                self.w_h.rows(),
                self.w_h.cols(),
                self.b_h.rows(),
                self.b_h.cols(),
                self.u_c.rows(),
                self.u_c.cols()
            )));
        }
        Ok(())
    }
}

/// Gradient accumulators matching [`AttentionParams`] shapes.
#[derive(Debug, Clone)]
pub struct AttentionGrads {
    pub w_h: Tensor2,
    pub b_h: Tensor2,
    pub u_c: Tensor2,
}

impl AttentionGrads {
    pub fn zeros_like(params: &AttentionParams) -> Self {
        AttentionGrads {
            w_h: Tensor2::zeros(params.w_h.rows(), params.w_h.cols()),
            b_h: Tensor2::zeros(params.b_h.rows(), params.b_h.cols()),
            u_c: Tensor2::zeros(params.u_c.rows(), params.u_c.cols()),
        }
    }
}

/// Attention output: per-word weights alpha (length T, nonnegative, sum 1
/// under softmax normalization) and the message vector v (length 2H).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionResult {
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
}

/// Intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    annotations: Tensor2,
    proj: Tensor2,
    alpha: Vec<f64>,
    score_sum: f64,
    norm: AttentionNorm,
}

/// Project, score and pool: u_i = tanh(W_h h_i + b_h), s_i = u_i . u_c,
/// alpha = normalize(s), v = sum alpha_i h_i.
pub fn attention_forward(
    annotations: &Tensor2,
    params: &AttentionParams,
    norm: AttentionNorm,
) -> Result<(AttentionResult, AttentionCache)> {
    params.validate()?;
    let t_len = annotations.rows();
    if t_len == 0 {
        return Err(Error::Argument("attention over an empty sequence".into()));
    }
    if annotations.cols() != params.ann_dim() {
        return Err(Error::Shape(format!(
            "annotations have width {}, attention expects {}",
            annotations.cols(),
            params.ann_dim()
        )));
    }
    let a_dim = params.proj_dim();
    let mut proj = Tensor2::zeros(t_len, a_dim);
    let mut scores = vec![0.0; t_len];
    for (i, score) in scores.iter_mut().enumerate() {
        let mut u = params.w_h.matvec(annotations.row(i))?;
        for (uk, b) in u.iter_mut().zip(params.b_h.data()) {
            *uk = (*uk + b).tanh();
        }
        let mut s = 0.0;
        for (uk, ck) in u.iter().zip(params.u_c.data()) {
            s += uk * ck;
        }
        proj.row_mut(i).copy_from_slice(&u);
        *score = s;
    }
    let (alpha, score_sum) = match norm {
        AttentionNorm::Softmax => (softmax_vec(&scores)?, 0.0),
        AttentionNorm::Linear => {
            let sum: f64 = scores.iter().sum();
            if sum == 0.0 || !sum.is_finite() {
                return Err(Error::Numeric(format!(
                    "linear attention normalizer is {sum}"
                )));
            }
            (scores.iter().map(|s| s / sum).collect(), sum)
        }
    };
    let mut v = vec![0.0; annotations.cols()];
    for (i, a) in alpha.iter().enumerate() {
        for (vd, hd) in v.iter_mut().zip(annotations.row(i)) {
            *vd += a * hd;
        }
    }
    let result = AttentionResult { alpha: alpha.clone(), v };
    let cache = AttentionCache {
        annotations: annotations.clone(),
        proj,
        alpha,
        score_sum,
        norm,
    };
    Ok((result, cache))
}

/// Backpropagate the gradient w.r.t. v. Accumulates parameter gradients and
/// returns the gradient w.r.t. the annotations (T x 2H).
pub fn attention_backward(
    cache: &AttentionCache,
    params: &AttentionParams,
    dv: &[f64],
    grads: &mut AttentionGrads,
) -> Result<Tensor2> {
    let t_len = cache.annotations.rows();
    if dv.len() != cache.annotations.cols() {
        return Err(Error::Shape(format!(
            "dv has length {}, expected {}",
            dv.len(),
            cache.annotations.cols()
        )));
    }
    let alpha = &cache.alpha;
    let mut d_ann = Tensor2::zeros(t_len, cache.annotations.cols());
    let mut d_alpha = vec![0.0; t_len];
    for i in 0..t_len {
        let h_i = cache.annotations.row(i);
        let mut dot = 0.0;
        for (a, b) in dv.iter().zip(h_i) {
            dot += a * b;
        }
        d_alpha[i] = dot;
        for (o, &g) in d_ann.row_mut(i).iter_mut().zip(dv) {
            *o += alpha[i] * g;
        }
    }
    let d_scores: Vec<f64> = match cache.norm {
        AttentionNorm::Softmax => {
            let mix: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
            alpha
                .iter()
                .zip(&d_alpha)
                .map(|(a, d)| a * (d - mix))
                .collect()
        }
        AttentionNorm::Linear => {
            let mix: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
            d_alpha.iter().map(|d| (d - mix) / cache.score_sum).collect()
        }
    };
    for (i, &ds) in d_scores.iter().enumerate() {
        if ds == 0.0 {
            continue;
        }
        let u_i = cache.proj.row(i);
        let h_i = cache.annotations.row(i);
        // score s_i = u_i . u_c splits into the context-vector and projection paths
        for (g, &u) in grads.u_c.data_mut().iter_mut().zip(u_i) {
            *g += ds * u;
        }
        let d_pre: Vec<f64> = u_i
            .iter()
            .zip(params.u_c.data())
            .map(|(&u, &c)| ds * c * (1.0 - u * u))
            .collect();
        grads.w_h.add_outer(&d_pre, h_i)?;
        for (g, d) in grads.b_h.data_mut().iter_mut().zip(&d_pre) {
            *g += d;
        }
        let back = params.w_h.matvec_t(&d_pre)?;
        for (o, b) in d_ann.row_mut(i).iter_mut().zip(&back) {
            *o += b;
        }
    }
    Ok(d_ann)
}
