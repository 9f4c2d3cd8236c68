use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{relu, relu_grad, sigmoid, xavier_uniform, Matrix, Rng64};

/// Default transform-gate bias: negative, so a fresh layer mostly carries its
/// input through.
pub const DEFAULT_GATE_BIAS: f64 = -1.0;

/// `y = Tr ⊙ H + (1 − Tr) ⊙ x` with `Tr = σ(W_Tr x + b_Tr)` and
/// `H = relu(W_H x + b_H)`; the carry gate is `Cr = 1 − Tr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighwayLayer {
    pub w_tr: Matrix,
    pub b_tr: Matrix,
    pub w_h: Matrix,
    pub b_h: Matrix,
}

pub struct HighwayCache {
    x: Vec<f64>,
    tr: Vec<f64>,
    pre_h: Vec<f64>,
    h: Vec<f64>,
}

impl HighwayLayer {
    pub fn zeros(d: usize) -> Self {
        HighwayLayer {
            w_tr: Matrix::zeros(d, d),
            b_tr: Matrix::zeros(d, 1),
            w_h: Matrix::zeros(d, d),
            b_h: Matrix::zeros(d, 1),
        }
    }

    pub fn init(d: usize, gate_bias: f64, rng: &mut Rng64) -> Self {
        HighwayLayer {
            w_tr: xavier_uniform(d, d, rng),
            b_tr: Matrix::filled(d, 1, gate_bias),
            w_h: xavier_uniform(d, d, rng),
            b_h: Matrix::zeros(d, 1),
        }
    }

    pub fn dim(&self) -> usize {
        self.b_tr.rows()
    }

    pub fn tensors(&self) -> [&Matrix; 4] {
        [&self.w_tr, &self.b_tr, &self.w_h, &self.b_h]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 4] {
        [&mut self.w_tr, &mut self.b_tr, &mut self.w_h, &mut self.b_h]
    }

    /// Transform gate activations for input `x`.
    pub fn transform_gate(&self, x: &[f64]) -> Vec<f64> {
        let mut tr = self.w_tr.matvec(x);
        for (t, b) in tr.iter_mut().zip(self.b_tr.as_slice()) {
            *t = sigmoid(*t + b);
        }
        tr
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, HighwayCache)> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::config(format!("highway layer of width {d} got input of {}", x.len())));
        }
        let tr = self.transform_gate(x);
        let mut pre_h = self.w_h.matvec(x);
        for (p, b) in pre_h.iter_mut().zip(self.b_h.as_slice()) {
            *p += b;
        }
        let h: Vec<f64> = pre_h.iter().map(|&v| relu(v)).collect();
        let y = (0..d).map(|j| tr[j] * h[j] + (1.0 - tr[j]) * x[j]).collect();
        Ok((
            y,
            HighwayCache {
                x: x.to_vec(),
                tr,
                pre_h,
                h,
            },
        ))
    }

    pub fn backward(&self, cache: &HighwayCache, dy: &[f64], grads: &mut HighwayLayer) -> Vec<f64> {
        let d = self.dim();
        let mut dx: Vec<f64> = (0..d).map(|j| dy[j] * (1.0 - cache.tr[j])).collect();
        let mut da_tr = vec![0.0; d];
        let mut da_h = vec![0.0; d];
        for j in 0..d {
            let t = cache.tr[j];
            da_tr[j] = dy[j] * (cache.h[j] - cache.x[j]) * t * (1.0 - t);
            da_h[j] = dy[j] * t * relu_grad(cache.pre_h[j]);
        }
        grads.w_tr.add_outer(&da_tr, &cache.x);
        grads.w_h.add_outer(&da_h, &cache.x);
        for j in 0..d {
            grads.b_tr.as_mut_slice()[j] += da_tr[j];
            grads.b_h.as_mut_slice()[j] += da_h[j];
        }
        self.w_tr.matvec_t_acc(&da_tr, &mut dx);
        self.w_h.matvec_t_acc(&da_h, &mut dx);
        dx
    }
}

/// Single highway layer forward pass.
pub fn highway_forward(x: &[f64], layer: &HighwayLayer) -> Result<Vec<f64>> {
    layer.forward_cached(x).map(|(y, _)| y)
}
