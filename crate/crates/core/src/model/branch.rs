use serde::{Deserialize, Serialize};

use super::lstm::{lstm_sequence, lstm_sequence_backward, LstmParams, StepCache};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng64};
use crate::sequencing::WindowSpec;

/// Shape of one modality branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchConfig {
    pub layers: usize,
    pub hidden: usize,
    pub bidirectional: bool,
    pub timestep: usize,
    pub stride: usize,
}

impl BranchConfig {
    /// 4 bidirectional layers of 256 units over 20-step windows, stride 1.
    pub fn audio_default() -> Self {
        BranchConfig {
            layers: 4,
            hidden: 256,
            bidirectional: true,
            timestep: 20,
            stride: 1,
        }
    }

    /// 2 bidirectional layers of 16 units over 10-step windows, stride 2.
    pub fn text_default() -> Self {
        BranchConfig {
            layers: 2,
            hidden: 16,
            bidirectional: true,
            timestep: 10,
            stride: 2,
        }
    }

    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    pub fn output_dim(&self) -> usize {
        self.directions() * self.hidden
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            timestep: self.timestep,
            stride: self.stride,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 {
            return Err(Error::config(format!(
                "{name} branch needs at least one layer and one hidden unit"
            )));
        }
        self.window_spec()
            .validate()
            .map_err(|e| Error::config(format!("{name} branch: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiLayer {
    pub forward: LstmParams,
    pub backward: Option<LstmParams>,
}

/// Stacked (bi)directional LSTM over one modality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchParams {
    pub layers: Vec<BiLayer>,
}

impl BranchParams {
    pub fn init(cfg: &BranchConfig, input_dim: usize, forget_bias: f64, rng: &mut Rng64) -> Self {
        Self::build(cfg, input_dim, |d, h| LstmParams::init(d, h, forget_bias, rng))
    }

    pub fn zeros(cfg: &BranchConfig, input_dim: usize) -> Self {
        Self::build(cfg, input_dim, LstmParams::zeros)
    }

    fn build(cfg: &BranchConfig, input_dim: usize, mut make: impl FnMut(usize, usize) -> LstmParams) -> Self {
        let mut layers = Vec::with_capacity(cfg.layers);
        let mut d = input_dim;
        for _ in 0..cfg.layers {
            let forward = make(d, cfg.hidden);
            let backward = cfg.bidirectional.then(|| make(d, cfg.hidden));
            layers.push(BiLayer { forward, backward });
            d = cfg.output_dim();
        }
        BranchParams { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].forward.input_dim()
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].forward.hidden()
    }

    pub fn bidirectional(&self) -> bool {
        self.layers[0].backward.is_some()
    }

    pub fn output_dim(&self) -> usize {
        self.hidden() * if self.bidirectional() { 2 } else { 1 }
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.push(&l.forward.w);
            v.push(&l.forward.b);
            if let Some(b) = &l.backward {
                v.push(&b.w);
                v.push(&b.b);
            }
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = Vec::new();
        for l in &mut self.layers {
            v.push(&mut l.forward.w);
            v.push(&mut l.forward.b);
            if let Some(b) = &mut l.backward {
                v.push(&mut b.w);
                v.push(&mut b.b);
            }
        }
        v
    }

    /// Checks that the parameter shapes follow `cfg`.
    pub fn matches(&self, cfg: &BranchConfig, input_dim: usize) -> bool {
        self.layers.len() == cfg.layers
            && self.layers.iter().enumerate().all(|(k, l)| {
                let d = if k == 0 { input_dim } else { cfg.output_dim() };
                let ok = |p: &LstmParams| p.w.shape() == (4 * cfg.hidden, d + cfg.hidden) && p.b.shape() == (4 * cfg.hidden, 1);
                ok(&l.forward) && l.backward.as_ref().map_or(!cfg.bidirectional, |b| cfg.bidirectional && ok(b))
            })
    }
}

struct LayerCache {
    forward: Vec<StepCache>,
    backward: Option<Vec<StepCache>>,
}

pub struct BranchCache {
    steps: usize,
    layers: Vec<LayerCache>,
}

/// Runs the stack and returns `[h_fwd(T−1); h_bwd(0)]` of the top layer (just
/// `h_fwd(T−1)` when unidirectional).
pub fn branch_forward(params: &BranchParams, seq: &Matrix) -> Result<(Vec<f64>, BranchCache)> {
    if seq.rows() == 0 {
        return Err(Error::config("branch input has no time steps"));
    }
    if seq.cols() != params.input_dim() {
        return Err(Error::config(format!(
            "branch expects {} input features, got {}",
            params.input_dim(),
            seq.cols()
        )));
    }
    let t_len = seq.rows();
    let mut input = seq.clone();
    let mut caches = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (hf, cf) = lstm_sequence(&layer.forward, &input, false)?;
        let (out, cb) = match &layer.backward {
            Some(bp) => {
                let (hb, cb) = lstm_sequence(bp, &input, true)?;
                (hf.hstack(&hb)?, Some(cb))
            }
            None => (hf, None),
        };
        caches.push(LayerCache {
            forward: cf,
            backward: cb,
        });
        input = out;
    }
    let h = params.hidden();
    let mut result = input.row(t_len - 1)[..h].to_vec();
    if params.bidirectional() {
        result.extend_from_slice(&input.row(0)[h..2 * h]);
    }
    Ok((result, BranchCache { steps: t_len, layers: caches }))
}

/// Accumulates parameter gradients for dL/d(branch output) `d_out`; returns
/// dL/d(input sequence).
pub fn branch_backward(params: &BranchParams, cache: &BranchCache, d_out: &[f64], grads: &mut BranchParams) -> Matrix {
    let h = params.hidden();
    let t_len = cache.steps;
    let bidir = params.bidirectional();
    let width = if bidir { 2 * h } else { h };
    // dL/d(layer output), T x width, by position
    let mut d_layer_out = Matrix::zeros(t_len, width);
    d_layer_out.row_mut(t_len - 1)[..h].copy_from_slice(&d_out[..h]);
    if bidir {
        d_layer_out.row_mut(0)[h..].copy_from_slice(&d_out[h..2 * h]);
    }

    for k in (0..params.layers.len()).rev() {
        let layer = &params.layers[k];
        let lc = &cache.layers[k];
        let gl = &mut grads.layers[k];
        let mut dh_f = Matrix::zeros(t_len, h);
        let mut dh_b = Matrix::zeros(t_len, h);
        for t in 0..t_len {
            let row = d_layer_out.row(t);
            dh_f.row_mut(t).copy_from_slice(&row[..h]);
            if bidir {
                dh_b.row_mut(t).copy_from_slice(&row[h..]);
            }
        }
        let mut dx = lstm_sequence_backward(&layer.forward, &lc.forward, &dh_f, &mut gl.forward);
        if let (Some(bp), Some(bc), Some(gb)) = (&layer.backward, &lc.backward, &mut gl.backward) {
            let dxb = lstm_sequence_backward(bp, bc, &dh_b, gb);
            dx.axpy(1.0, &dxb);
        }
        d_layer_out = dx;
    }
    d_layer_out
}
