use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{sigmoid, uniform, Matrix, Rng64};

/// Weights of one LSTM direction.
///
/// `w` is `4H x (D + H)` acting on `[x; h_prev]`; rows are grouped as input
/// gate, forget gate, candidate, output gate. `b` is `4H x 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w: Matrix,
    pub b: Matrix,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w: Matrix::zeros(4 * hidden, input + hidden),
            b: Matrix::zeros(4 * hidden, 1),
        }
    }

    /// Gate weights uniform in ±sqrt(6 / (fan_in + fan_out)) per gate, zero
    /// biases except the forget gate.
    pub fn init(input: usize, hidden: usize, forget_bias: f64, rng: &mut Rng64) -> Self {
        let limit = (6.0 / (input + 2 * hidden) as f64).sqrt();
        let w = uniform(4 * hidden, input + hidden, limit, rng);
        let mut b = Matrix::zeros(4 * hidden, 1);
        for r in hidden..2 * hidden {
            b.set(r, 0, forget_bias);
        }
        LstmParams { w, b }
    }

    pub fn hidden(&self) -> usize {
        self.b.rows() / 4
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols() - self.hidden()
    }
}

/// Saved activations of one time step.
#[derive(Clone, Debug)]
pub struct StepCache {
    position: usize,
    z: Vec<f64>,
    // activated gates [i, f, g, o]
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn step_cached(params: &LstmParams, x: &[f64], h: &[f64], c: &[f64], position: usize) -> (Vec<f64>, Vec<f64>, StepCache) {
    let hd = params.hidden();
    let mut z = Vec::with_capacity(x.len() + hd);
    z.extend_from_slice(x);
    z.extend_from_slice(h);
    let mut gates = vec![0.0; 4 * hd];
    params.w.matvec_into(&z, &mut gates);
    for (k, g) in gates.iter_mut().enumerate() {
        let a = *g + params.b.as_slice()[k];
        *g = if (2 * hd..3 * hd).contains(&k) { a.tanh() } else { sigmoid(a) };
    }
    let mut c_new = vec![0.0; hd];
    let mut h_new = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    for j in 0..hd {
        let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
        c_new[j] = f * c[j] + i * g;
        tanh_c[j] = c_new[j].tanh();
        h_new[j] = o * tanh_c[j];
    }
    let cache = StepCache {
        position,
        z,
        gates,
        c_prev: c.to_vec(),
        tanh_c,
    };
    (h_new, c_new, cache)
}

/// One LSTM step: `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
pub fn lstm_cell_step(x: &[f64], h: &[f64], c: &[f64], params: &LstmParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let hd = params.hidden();
    if x.len() != params.input_dim() || h.len() != hd || c.len() != hd {
        return Err(Error::config(format!(
            "lstm step: x {} h {} c {} for a {}->{} cell",
            x.len(),
            h.len(),
            c.len(),
            params.input_dim(),
            hd
        )));
    }
    let (h, c, _) = step_cached(params, x, h, c, 0);
    Ok((h, c))
}

/// Runs one direction over `xs` (rows are time steps) from zero state.
/// Returned hidden states are indexed by sequence position, also when
/// `reverse` processes the sequence back to front.
pub fn lstm_sequence(params: &LstmParams, xs: &Matrix, reverse: bool) -> Result<(Matrix, Vec<StepCache>)> {
    if xs.cols() != params.input_dim() {
        return Err(Error::config(format!(
            "lstm expects {} input features, got {}",
            params.input_dim(),
            xs.cols()
        )));
    }
    let hd = params.hidden();
    let t_len = xs.rows();
    let mut hs = Matrix::zeros(t_len, hd);
    let mut caches = Vec::with_capacity(t_len);
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    for k in 0..t_len {
        let t = if reverse { t_len - 1 - k } else { k };
        let (h_new, c_new, cache) = step_cached(params, xs.row(t), &h, &c, t);
        hs.row_mut(t).copy_from_slice(&h_new);
        caches.push(cache);
        h = h_new;
        c = c_new;
    }
    Ok((hs, caches))
}

/// Backpropagation through time.
///
/// `dhs` holds dL/dh for every position (zero rows where the output is
/// unused). Parameter gradients are accumulated into `grads`; the gradient
/// with respect to the inputs is returned, indexed by position.
pub fn lstm_sequence_backward(params: &LstmParams, caches: &[StepCache], dhs: &Matrix, grads: &mut LstmParams) -> Matrix {
    let hd = params.hidden();
    let d_in = params.input_dim();
    let mut dxs = Matrix::zeros(dhs.rows(), d_in);
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut da = vec![0.0; 4 * hd];
    let mut dz = vec![0.0; d_in + hd];
    for cache in caches.iter().rev() {
        let dh_out = dhs.row(cache.position);
        let g = &cache.gates;
        for j in 0..hd {
            let (i, f, gg, o) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            let dh = dh_out[j] + dh_next[j];
            let tc = cache.tanh_c[j];
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            let d_i = dc * gg;
            let d_g = dc * i;
            let d_f = dc * cache.c_prev[j];
            dc_next[j] = dc * f;
            da[j] = d_i * i * (1.0 - i);
            da[hd + j] = d_f * f * (1.0 - f);
            da[2 * hd + j] = d_g * (1.0 - gg * gg);
            da[3 * hd + j] = d_o * o * (1.0 - o);
        }
        grads.w.add_outer(&da, &cache.z);
        for (gb, d) in grads.b.as_mut_slice().iter_mut().zip(&da) {
            *gb += d;
        }
        dz.iter_mut().for_each(|v| *v = 0.0);
        params.w.matvec_t_acc(&da, &mut dz);
        dxs.row_mut(cache.position).copy_from_slice(&dz[..d_in]);
        dh_next.copy_from_slice(&dz[d_in..]);
    }
    dxs
}
