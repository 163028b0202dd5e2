//! LSTM cell, single-direction sequence pass, and the bidirectional layer.
//!
//! Standard cell without peepholes, gate order [input, forget, cell, output].
//! The backward direction reuses the forward routine on row-reversed input.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor2;
use crate::nn::ops::sigmoid;

/// Borrowed views of one cell's parameters: input weights W (4H x input_dim),
/// recurrent weights U (4H x H) and bias b (4H x 1).
#[derive(Debug, Clone, Copy)]
pub struct LstmCellParams<'a> {
    pub w: &'a Tensor2,
    pub u: &'a Tensor2,
    pub b: &'a Tensor2,
}

impl<'a> LstmCellParams<'a> {
    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    fn validate(&self) -> Result<()> {
        let h = self.hidden();
        if self.w.rows() != 4 * h || self.u.rows() != 4 * h || self.b.shape() != (4 * h, 1) {
            return Err(Error::Shape(format!(
                "inconsistent cell shapes: W {}x{}, U {}x{}, b {}x{}",
                self.w.rows(),
                self.w.cols(),
                self.u.rows(),
                self.u.cols(),
                self.b.rows(),
                self.b.cols()
            )));
        }
        Ok(())
    }
}

/// Gradient accumulators matching one cell's parameter shapes.
#[derive(Debug, Clone)]
pub struct LstmCellGrads {
    pub w: Tensor2,
    pub u: Tensor2,
    pub b: Tensor2,
}

impl LstmCellGrads {
    pub fn zeros_like(params: &LstmCellParams) -> Self {
        LstmCellGrads {
            w: Tensor2::zeros(params.w.rows(), params.w.cols()),
            u: Tensor2::zeros(params.u.rows(), params.u.cols()),
            b: Tensor2::zeros(params.b.rows(), params.b.cols()),
        }
    }
}

/// Intermediates of one cell step kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCellCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// One step: i,f,o = sigmoid of their affine blocks, g = tanh of its block,
/// c = f*c_prev + i*g, h = o*tanh(c).
pub fn lstm_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: &LstmCellParams,
) -> Result<(Vec<f64>, Vec<f64>, LstmCellCache)> {
    params.validate()?;
    let h_dim = params.hidden();
    if x.len() != params.input_dim() || h_prev.len() != h_dim || c_prev.len() != h_dim {
        return Err(Error::Shape(format!(
            "cell expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
            params.input_dim(),
            h_dim,
            h_dim,
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut z = params.w.matvec(x)?;
    let rec = params.u.matvec(h_prev)?;
    for (zk, (r, b)) in z.iter_mut().zip(rec.iter().zip(params.b.data())) {
        *zk += r + b;
    }
    let i: Vec<f64> = z[..h_dim].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = z[h_dim..2 * h_dim].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = z[2 * h_dim..3 * h_dim].iter().map(|&v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * h_dim..].iter().map(|&v| sigmoid(v)).collect();
    let mut c = vec![0.0; h_dim];
    let mut tanh_c = vec![0.0; h_dim];
    let mut h = vec![0.0; h_dim];
    for k in 0..h_dim {
        c[k] = f[k] * c_prev[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }
    let cache = LstmCellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        tanh_c,
    };
    Ok((h, c, cache))
}

/// Reverse-mode step. `dh`/`dc` are the losses' gradients w.r.t. this step's
/// outputs (dc carries the cell-state path from the step after this one).
/// Accumulates into `grads`, returns (dx, dh_prev, dc_prev).
pub fn lstm_cell_backward(
    cache: &LstmCellCache,
    params: &LstmCellParams,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmCellGrads,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let h_dim = params.hidden();
    if dh.len() != h_dim || dc.len() != h_dim || cache.i.len() != h_dim {
        return Err(Error::Shape(format!(
            "backward expects dh[{}], dc[{}]; got dh[{}], dc[{}]",
            h_dim,
            h_dim,
            dh.len(),
            dc.len()
        )));
    }
    let mut dz = vec![0.0; 4 * h_dim];
    let mut dc_prev = vec![0.0; h_dim];
    for k in 0..h_dim {
        let (i, f, g, o) = (cache.i[k], cache.f[k], cache.g[k], cache.o[k]);
        let tc = cache.tanh_c[k];
        let d_o = dh[k] * tc;
        let dc_total = dc[k] + dh[k] * o * (1.0 - tc * tc);
        let d_i = dc_total * g;
        let d_f = dc_total * cache.c_prev[k];
        let d_g = dc_total * i;
        dz[k] = d_i * i * (1.0 - i);
        dz[h_dim + k] = d_f * f * (1.0 - f);
        dz[2 * h_dim + k] = d_g * (1.0 - g * g);
        dz[3 * h_dim + k] = d_o * o * (1.0 - o);
        dc_prev[k] = dc_total * f;
    }
    grads.w.add_outer(&dz, &cache.x)?;
    grads.u.add_outer(&dz, &cache.h_prev)?;
    for (b, d) in grads.b.data_mut().iter_mut().zip(&dz) {
        *b += d;
    }
    let dx = params.w.matvec_t(&dz)?;
    let dh_prev = params.u.matvec_t(&dz)?;
    Ok((dx, dh_prev, dc_prev))
}

/// Per-step caches of one directional pass.
#[derive(Debug, Clone)]
pub struct LstmSeqCache {
    steps: Vec<LstmCellCache>,
}

impl LstmSeqCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Run the cell over `inputs` (T x input_dim) from zero initial state.
/// Returns the hidden states (T x H) and the caches.
pub fn lstm_sequence_forward(
    inputs: &Tensor2,
    params: &LstmCellParams,
) -> Result<(Tensor2, LstmSeqCache)> {
    if inputs.rows() == 0 {
        return Err(Error::Argument("empty sequence".into()));
    }
    let h_dim = params.hidden();
    let mut h = vec![0.0; h_dim];
    let mut c = vec![0.0; h_dim];
    let mut out = Tensor2::zeros(inputs.rows(), h_dim);
    let mut steps = Vec::with_capacity(inputs.rows());
    for t in 0..inputs.rows() {
        let (h_next, c_next, cache) = lstm_cell_forward(inputs.row(t), &h, &c, params)?;
        out.row_mut(t).copy_from_slice(&h_next);
        steps.push(cache);
        h = h_next;
        c = c_next;
    }
    Ok((out, LstmSeqCache { steps }))
}

/// Backpropagate through a directional pass. `d_hidden` is (T x H), the loss
/// gradient at every step's hidden output. Returns the gradient w.r.t. the
/// inputs (T x input_dim); parameter gradients accumulate into `grads`.
pub fn lstm_sequence_backward(
    cache: &LstmSeqCache,
    params: &LstmCellParams,
    d_hidden: &Tensor2,
    grads: &mut LstmCellGrads,
) -> Result<Tensor2> {
    let t_len = cache.steps.len();
    let h_dim = params.hidden();
    if d_hidden.shape() != (t_len, h_dim) {
        return Err(Error::Shape(format!(
            "expected upstream gradient {}x{}, got {}x{}",
            t_len,
            h_dim,
            d_hidden.rows(),
            d_hidden.cols()
        )));
    }
    let mut d_inputs = Tensor2::zeros(t_len, params.input_dim());
    let mut dh_carry = vec![0.0; h_dim];
    let mut dc_carry = vec![0.0; h_dim];
    for t in (0..t_len).rev() {
        let mut dh = d_hidden.row(t).to_vec();
        for (a, b) in dh.iter_mut().zip(&dh_carry) {
            *a += b;
        }
        let (dx, dh_prev, dc_prev) =
            lstm_cell_backward(&cache.steps[t], params, &dh, &dc_carry, grads)?;
        d_inputs.row_mut(t).copy_from_slice(&dx);
        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }
    Ok(d_inputs)
}

fn reverse_rows(m: &Tensor2) -> Tensor2 {
    let mut out = Tensor2::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        out.row_mut(r).copy_from_slice(m.row(m.rows() - 1 - r));
    }
    out
}

/// Caches of both directional passes; the backward pass ran on row-reversed
/// input and its caches are stored in that reversed order.
#[derive(Debug, Clone)]
pub struct BiLstmCache {
    fwd: LstmSeqCache,
    bwd: LstmSeqCache,
}

/// Bidirectional layer: annotation row i is the forward hidden state after
/// x_1..x_i concatenated with the backward hidden state after x_T..x_i.
pub fn bilstm_forward(
    inputs: &Tensor2,
    fwd: &LstmCellParams,
    bwd: &LstmCellParams,
) -> Result<(Tensor2, BiLstmCache)> {
    if fwd.hidden() != bwd.hidden() || fwd.input_dim() != bwd.input_dim() {
        return Err(Error::Shape(
            "forward and backward cells must share dimensions".into(),
        ));
    }
    let (h_fwd, fwd_cache) = lstm_sequence_forward(inputs, fwd)?;
    let (h_bwd_rev, bwd_cache) = lstm_sequence_forward(&reverse_rows(inputs), bwd)?;
    let t_len = inputs.rows();
    let h_dim = fwd.hidden();
    let mut ann = Tensor2::zeros(t_len, 2 * h_dim);
    for i in 0..t_len {
        ann.row_mut(i)[..h_dim].copy_from_slice(h_fwd.row(i));
        ann.row_mut(i)[h_dim..].copy_from_slice(h_bwd_rev.row(t_len - 1 - i));
    }
    Ok((ann, BiLstmCache { fwd: fwd_cache, bwd: bwd_cache }))
}

/// Backpropagate a (T x 2H) annotation gradient through both directions.
/// Returns the input gradient (T x input_dim).
pub fn bilstm_backward(
    cache: &BiLstmCache,
    fwd: &LstmCellParams,
    bwd: &LstmCellParams,
    d_ann: &Tensor2,
    fwd_grads: &mut LstmCellGrads,
    bwd_grads: &mut LstmCellGrads,
) -> Result<Tensor2> {
    let t_len = cache.fwd.len();
    let h_dim = fwd.hidden();
    if d_ann.shape() != (t_len, 2 * h_dim) {
        return Err(Error::Shape(format!(
            "expected annotation gradient {}x{}, got {}x{}",
            t_len,
            2 * h_dim,
            d_ann.rows(),
            d_ann.cols()
        )));
    }
    let mut d_fwd = Tensor2::zeros(t_len, h_dim);
    let mut d_bwd_rev = Tensor2::zeros(t_len, h_dim);
    for i in 0..t_len {
        d_fwd.row_mut(i).copy_from_slice(&d_ann.row(i)[..h_dim]);
        d_bwd_rev
            .row_mut(t_len - 1 - i)
            .copy_from_slice(&d_ann.row(i)[h_dim..]);
    }
    let dx_fwd = lstm_sequence_backward(&cache.fwd, fwd, &d_fwd, fwd_grads)?;
    let dx_bwd_rev = lstm_sequence_backward(&cache.bwd, bwd, &d_bwd_rev, bwd_grads)?;
    let mut d_inputs = dx_fwd;
    d_inputs.add_assign(&reverse_rows(&dx_bwd_rev))?;
    Ok(d_inputs)
}
