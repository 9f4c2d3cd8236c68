use rand::Rng;
use serde::{Deserialize, Serialize};

use super::branch::{branch_backward, branch_forward, BranchCache, BranchConfig, BranchParams};
use super::highway::{HighwayCache, HighwayLayer, DEFAULT_GATE_BIAS};
use crate::data::{Diagnosis, Modality, MMSE_MAX};
use crate::error::{Error, Result};
use crate::numcore::{dot, seeded_rng, sigmoid, xavier_uniform, Matrix, Rng64};
use crate::sequencing::WindowPair;
use crate::train_eval::loss::{bce_loss, squared_error};

pub const DEFAULT_FUSION_DIM: usize = 128;
pub const DEFAULT_HIGHWAY_DEPTH: usize = 3;
pub const DEFAULT_FORGET_BIAS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// AD vs non-AD, sigmoid head trained with binary cross-entropy.
    Cls,
    /// MMSE score, linear head trained with squared error.
    Reg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub modality: Modality,
    pub audio: BranchConfig,
    pub text: BranchConfig,
    pub audio_input_dim: usize,
    pub text_input_dim: usize,
    pub fusion_dim: usize,
    pub highway_depth: usize,
    pub gate_bias_init: f64,
    pub forget_bias_init: f64,
    /// Training-time dropout rate on the concatenated branch outputs.
    #[serde(default)]
    pub dropout: f64,
}

impl ModelConfig {
    /// Paper-sized branches; input widths come from the feature pipeline.
    pub fn new(modality: Modality, audio_input_dim: usize, text_input_dim: usize) -> Self {
        ModelConfig {
            modality,
            audio: BranchConfig::audio_default(),
            text: BranchConfig::text_default(),
            audio_input_dim,
            text_input_dim,
            fusion_dim: DEFAULT_FUSION_DIM,
            highway_depth: DEFAULT_HIGHWAY_DEPTH,
            gate_bias_init: DEFAULT_GATE_BIAS,
            forget_bias_init: DEFAULT_FORGET_BIAS,
            dropout: 0.0,
        }
    }

    /// Width of the concatenated branch outputs.
    pub fn concat_dim(&self) -> usize {
        let mut d = 0;
        if self.modality.uses_audio() {
            d += self.audio.output_dim();
        }
        if self.modality.uses_text() {
            d += self.text.output_dim();
        }
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.modality.uses_audio() {
            self.audio.validate("audio")?;
            if self.audio_input_dim == 0 {
                return Err(Error::config("audio branch has zero input features"));
            }
        }
        if self.modality.uses_text() {
            self.text.validate("text")?;
            if self.text_input_dim == 0 {
                return Err(Error::config("text branch has zero input features"));
            }
        }
        if self.fusion_dim == 0 {
            return Err(Error::config("fusion dimension must be >= 1"));
        }
        if !self.gate_bias_init.is_finite() || !self.forget_bias_init.is_finite() {
            return Err(Error::config("initial biases must be finite"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout {} must lie in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// All trainable weights of the gated fusion model.
///
/// Branch outputs are concatenated, projected to `fusion_dim`, passed through
/// the highway block and read out by either head. The two heads are disjoint
/// parameter sets; a model is trained for one task and the other head stays
/// at its initial value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub config: ModelConfig,
    pub audio: Option<BranchParams>,
    pub text: Option<BranchParams>,
    pub proj_w: Matrix,
    pub proj_b: Matrix,
    pub highway: Vec<HighwayLayer>,
    pub cls_w: Matrix,
    pub cls_b: Matrix,
    pub reg_w: Matrix,
    pub reg_b: Matrix,
}

pub struct ForwardCache {
    audio: Option<BranchCache>,
    text: Option<BranchCache>,
    // branch outputs after dropout
    concat: Vec<f64>,
    mask: Option<Vec<f64>>,
    highway: Vec<HighwayCache>,
    fused: Vec<f64>,
}

impl FusionParams {
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(seed);
        let c = config;
        let audio = c
            .modality
            .uses_audio()
            .then(|| BranchParams::init(&c.audio, c.audio_input_dim, c.forget_bias_init, &mut rng));
        let text = c
            .modality
            .uses_text()
            .then(|| BranchParams::init(&c.text, c.text_input_dim, c.forget_bias_init, &mut rng));
        let d = c.fusion_dim;
        let proj_w = xavier_uniform(d, c.concat_dim(), &mut rng);
        let highway = (0..c.highway_depth)
            .map(|_| HighwayLayer::init(d, c.gate_bias_init, &mut rng))
            .collect();
        let cls_w = xavier_uniform(1, d, &mut rng);
        let reg_w = xavier_uniform(1, d, &mut rng);
        Ok(FusionParams {
            config: config.clone(),
            audio,
            text,
            proj_w,
            proj_b: Matrix::zeros(d, 1),
            highway,
            cls_w,
            cls_b: Matrix::zeros(1, 1),
            reg_w,
            reg_b: Matrix::zeros(1, 1),
        })
    }

    /// Same layout, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Every trainable tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v = Vec::new();
        if let Some(a) = &self.audio {
            v.extend(a.tensors());
        }
        if let Some(t) = &self.text {
            v.extend(t.tensors());
        }
        v.push(&self.proj_w);
        v.push(&self.proj_b);
        for h in &self.highway {
            v.extend(h.tensors());
        }
        v.extend([&self.cls_w, &self.cls_b, &self.reg_w, &self.reg_b]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = Vec::new();
        if let Some(a) = &mut self.audio {
            v.extend(a.tensors_mut());
        }
        if let Some(t) = &mut self.text {
            v.extend(t.tensors_mut());
        }
        v.push(&mut self.proj_w);
        v.push(&mut self.proj_b);
        for h in &mut self.highway {
            v.extend(h.tensors_mut());
        }
        v.extend([&mut self.cls_w, &mut self.cls_b, &mut self.reg_w, &mut self.reg_b]);
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Rejects parameter sets whose shapes break the dimension chain
    /// `concat -> fusion_dim -> … -> 1`.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        let branch_ok = |p: &Option<BranchParams>, used: bool, cfg: &BranchConfig, d: usize| match p {
            Some(p) => used && p.matches(cfg, d),
            None => !used,
        };
        if !branch_ok(&self.audio, c.modality.uses_audio(), &c.audio, c.audio_input_dim) {
            return Err(Error::config("audio branch parameters do not match the model config"));
        }
        if !branch_ok(&self.text, c.modality.uses_text(), &c.text, c.text_input_dim) {
            return Err(Error::config("text branch parameters do not match the model config"));
        }
        let d = c.fusion_dim;
        if self.proj_w.shape() != (d, c.concat_dim()) || self.proj_b.shape() != (d, 1) {
            return Err(Error::config(format!(
                "projection must map {} -> {d}, found {:?}",
                c.concat_dim(),
                self.proj_w.shape()
            )));
        }
        if self.highway.len() != c.highway_depth
            || self.highway.iter().any(|h| {
                h.w_tr.shape() != (d, d) || h.w_h.shape() != (d, d) || h.b_tr.shape() != (d, 1) || h.b_h.shape() != (d, 1)
            })
        {
            return Err(Error::config(format!(
                "highway block must hold {} layers of width {d}",
                c.highway_depth
            )));
        }
        for (name, w, b) in [("cls", &self.cls_w, &self.cls_b), ("reg", &self.reg_w, &self.reg_b)] {
            if w.shape() != (1, d) || b.shape() != (1, 1) {
                return Err(Error::config(format!("{name} head must map {d} -> 1")));
            }
        }
        if self.tensors().iter().any(|t| !t.is_finite()) {
            return Err(Error::numerical("model parameters contain NaN or Inf"));
        }
        Ok(())
    }

    fn check_window(&self, w: Option<&Matrix>, used: bool, cfg: &BranchConfig, dim: usize, name: &str) -> Result<()> {
        match (used, w) {
            (true, Some(m)) if m.shape() == (cfg.timestep, dim) => Ok(()),
            (true, Some(m)) => Err(Error::config(format!(
                "{name} window is {}x{}, model expects {}x{dim}",
                m.rows(),
                m.cols(),
                cfg.timestep
            ))),
            (true, None) => Err(Error::config(format!("model needs a {name} window"))),
            (false, _) => Ok(()),
        }
    }

    /// Forward pass returning the raw head output (logit for `Cls`, score for
    /// `Reg`) and everything needed for the backward pass.
    pub fn forward_cached(&self, pair: &WindowPair, task: Task) -> Result<(f64, ForwardCache)> {
        self.forward_masked(pair, task, None)
    }

    /// Inverted-dropout mask over the concatenated branch outputs: each entry
    /// is 0 with probability `dropout`, else `1 / (1 − dropout)`. `None` when
    /// dropout is off.
    pub fn dropout_mask(&self, rng: &mut Rng64) -> Option<Vec<f64>> {
        let p = self.config.dropout;
        (p > 0.0).then(|| {
            let keep = 1.0 / (1.0 - p);
            (0..self.config.concat_dim())
                .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                .collect()
        })
    }

    /// [`forward_cached`](Self::forward_cached) with an optional mask applied
    /// to the concatenated branch outputs.
    pub fn forward_masked(&self, pair: &WindowPair, task: Task, mask: Option<&[f64]>) -> Result<(f64, ForwardCache)> {
        let c = &self.config;
        self.check_window(pair.audio.as_ref(), c.modality.uses_audio(), &c.audio, c.audio_input_dim, "audio")?;
        self.check_window(pair.text.as_ref(), c.modality.uses_text(), &c.text, c.text_input_dim, "text")?;

        let mut concat = Vec::with_capacity(c.concat_dim());
        let audio = match (&self.audio, &pair.audio) {
            (Some(p), Some(w)) => {
                let (out, cache) = branch_forward(p, w)?;
                concat.extend(out);
                Some(cache)
            }
            _ => None,
        };
        let text = match (&self.text, &pair.text) {
            (Some(p), Some(w)) => {
                let (out, cache) = branch_forward(p, w)?;
                concat.extend(out);
                Some(cache)
            }
            _ => None,
        };
        if let Some(m) = mask {
            if m.len() != concat.len() {
                return Err(Error::config(format!("dropout mask of {} for {} branch outputs", m.len(), concat.len())));
            }
            for (v, k) in concat.iter_mut().zip(m) {
                *v *= k;
            }
        }

        let mut x = self.proj_w.matvec(&concat);
        for (v, b) in x.iter_mut().zip(self.proj_b.as_slice()) {
            *v += b;
        }
        let mut highway = Vec::with_capacity(self.highway.len());
        for layer in &self.highway {
            let (y, cache) = layer.forward_cached(&x)?;
            highway.push(cache);
            x = y;
        }
        let (w, b) = self.head(task);
        let raw = dot(w.as_slice(), &x) + b.as_slice()[0];
        Ok((
            raw,
            ForwardCache {
                audio,
                text,
                concat,
                mask: mask.map(<[f64]>::to_vec),
                highway,
                fused: x,
            },
        ))
    }

    fn head(&self, task: Task) -> (&Matrix, &Matrix) {
        match task {
            Task::Cls => (&self.cls_w, &self.cls_b),
            Task::Reg => (&self.reg_w, &self.reg_b),
        }
    }

    /// Accumulates dL/dθ into `grads` given dL/d(raw head output).
    pub fn backward(&self, cache: &ForwardCache, d_raw: f64, task: Task, grads: &mut FusionParams) {
        let (w, _) = self.head(task);
        let (gw, gb) = match task {
            Task::Cls => (&mut grads.cls_w, &mut grads.cls_b),
            Task::Reg => (&mut grads.reg_w, &mut grads.reg_b),
        };
        for (g, f) in gw.as_mut_slice().iter_mut().zip(&cache.fused) {
            *g += d_raw * f;
        }
        gb.as_mut_slice()[0] += d_raw;

        let mut dx: Vec<f64> = w.as_slice().iter().map(|v| v * d_raw).collect();
        for (k, layer) in self.highway.iter().enumerate().rev() {
            dx = layer.backward(&cache.highway[k], &dx, &mut grads.highway[k]);
        }
        grads.proj_w.add_outer(&dx, &cache.concat);
        for (g, d) in grads.proj_b.as_mut_slice().iter_mut().zip(&dx) {
            *g += d;
        }
        let mut d_concat = vec![0.0; cache.concat.len()];
        self.proj_w.matvec_t_acc(&dx, &mut d_concat);
        if let Some(m) = &cache.mask {
            for (d, k) in d_concat.iter_mut().zip(m) {
                *d *= k;
            }
        }

        let mut offset = 0;
        if let (Some(p), Some(bc), Some(g)) = (&self.audio, &cache.audio, &mut grads.audio) {
            let n = p.output_dim();
            branch_backward(p, bc, &d_concat[offset..offset + n], g);
            offset += n;
        }
        if let (Some(p), Some(bc), Some(g)) = (&self.text, &cache.text, &mut grads.text) {
            let n = p.output_dim();
            branch_backward(p, bc, &d_concat[offset..offset + n], g);
        }
    }

    /// Loss of one window pair, with dL/dθ added to `grads` scaled by `weight`.
    pub fn loss_and_grad(&self, pair: &WindowPair, task: Task, weight: f64, grads: &mut FusionParams) -> Result<f64> {
        self.loss_and_grad_masked(pair, task, weight, grads, None)
    }

    pub fn loss_and_grad_masked(
        &self,
        pair: &WindowPair,
        task: Task,
        weight: f64,
        grads: &mut FusionParams,
        mask: Option<&[f64]>,
    ) -> Result<f64> {
        let (raw, cache) = self.forward_masked(pair, task, mask)?;
        let (loss, d_raw) = match task {
            Task::Cls => {
                let p = sigmoid(raw);
                let y = pair.label.target();
                (bce_loss(p, y), p - y)
            }
            Task::Reg => (squared_error(raw, pair.mmse), 2.0 * (raw - pair.mmse)),
        };
        self.backward(&cache, weight * d_raw, task, grads);
        Ok(loss)
    }

    /// Mean loss over `pairs`; gradients of the mean are added to `grads`.
    pub fn batch_loss_and_grad(&self, pairs: &[&WindowPair], task: Task, grads: &mut FusionParams) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::data("empty batch"));
        }
        let w = 1.0 / pairs.len() as f64;
        let mut total = 0.0;
        for p in pairs {
            total += self.loss_and_grad(p, task, w, grads)?;
        }
        Ok(total * w)
    }
}

/// Probability of AD for `Cls`, MMSE estimate for `Reg`.
pub fn fused_forward(pair: &WindowPair, params: &FusionParams, task: Task) -> Result<f64> {
    let (raw, _) = params.forward_cached(pair, task)?;
    Ok(match task {
        Task::Cls => sigmoid(raw),
        Task::Reg => raw,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SessionPrediction {
    Class { label: Diagnosis, probability: f64 },
    Score { mmse: f64 },
}

/// Mean of per-window outputs. Classification thresholds the mean
/// probability at 0.5 (inclusive); regression clamps the mean to [0, 30].
pub fn aggregate_session(outputs: &[f64], task: Task) -> Result<SessionPrediction> {
    if outputs.is_empty() {
        return Err(Error::data("session has no windows"));
    }
    let mean = outputs.iter().sum::<f64>() / outputs.len() as f64;
    Ok(match task {
        Task::Cls => SessionPrediction::Class {
            label: Diagnosis::from_probability(mean),
            probability: mean,
        },
        Task::Reg => SessionPrediction::Score {
            mmse: mean.clamp(0.0, MMSE_MAX),
        },
    })
}

pub fn predict_session(windows: &[WindowPair], params: &FusionParams, task: Task) -> Result<SessionPrediction> {
    if windows.is_empty() {
        return Err(Error::data("session has no windows"));
    }
    let outputs = windows
        .iter()
        .map(|w| fused_forward(w, params, task))
        .collect::<Result<Vec<_>>>()?;
    aggregate_session(&outputs, task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{grad_check, seeded_rng, uniform};

    pub(crate) fn tiny_config(modality: Modality) -> ModelConfig {
        ModelConfig {
            modality,
            audio: BranchConfig { layers: 2, hidden: 3, bidirectional: true, timestep: 3, stride: 1 },
            text: BranchConfig { layers: 1, hidden: 2, bidirectional: true, timestep: 4, stride: 2 },
            audio_input_dim: 4,
            text_input_dim: 5,
            fusion_dim: 4,
            highway_depth: 3,
            gate_bias_init: -1.0,
            forget_bias_init: 1.0,
            dropout: 0.0,
        }
    }

    fn pair(cfg: &ModelConfig, seed: u64, label: Diagnosis) -> WindowPair {
        let mut rng = seeded_rng(seed);
        WindowPair {
            session_id: "s".into(),
            audio: cfg.modality.uses_audio().then(|| uniform(cfg.audio.timestep, cfg.audio_input_dim, 1.0, &mut rng)),
            text: cfg.modality.uses_text().then(|| uniform(cfg.text.timestep, cfg.text_input_dim, 1.0, &mut rng)),
            label,
            mmse: 21.0,
        }
    }

    #[test]
    fn default_chain_is_544_wide() {
        let cfg = ModelConfig::new(Modality::Both, 10, 103);
        assert_eq!(cfg.concat_dim(), 544);
        assert_eq!(ModelConfig::new(Modality::Text, 10, 103).concat_dim(), 32);
    }

    #[test]
    fn init_is_seeded_and_valid() {
        let cfg = tiny_config(Modality::Both);
        let a = FusionParams::init(&cfg, 3).unwrap();
        assert_eq!(a, FusionParams::init(&cfg, 3).unwrap());
        assert_ne!(a, FusionParams::init(&cfg, 4).unwrap());
        a.validate().unwrap();
        assert!(a.highway.iter().all(|h| h.b_tr.as_slice().iter().all(|&b| b == -1.0)));
    }

    #[test]
    fn broken_chain_is_rejected() {
        let cfg = tiny_config(Modality::Both);
        let mut p = FusionParams::init(&cfg, 3).unwrap();
        p.proj_w = Matrix::zeros(4, 7);
        assert!(p.validate().is_err());
        let mut p = FusionParams::init(&cfg, 3).unwrap();
        p.highway.pop();
        assert!(p.validate().is_err());
        let mut p = FusionParams::init(&cfg, 3).unwrap();
        p.text = None;
        assert!(p.validate().is_err());
    }

    #[test]
    fn window_shape_is_checked() {
        let cfg = tiny_config(Modality::Both);
        let p = FusionParams::init(&cfg, 1).unwrap();
        let mut w = pair(&cfg, 1, Diagnosis::Ad);
        w.text = Some(Matrix::zeros(3, 5));
        assert!(matches!(fused_forward(&w, &p, Task::Cls), Err(Error::Config(_))));
        w.text = None;
        assert!(fused_forward(&w, &p, Task::Cls).is_err());
    }

    #[test]
    fn carry_saturated_block_reduces_to_projection() {
        let cfg = tiny_config(Modality::Both);
        let mut p = FusionParams::init(&cfg, 6).unwrap();
        for h in &mut p.highway {
            h.w_tr.fill(0.0);
            h.b_tr.fill(-50.0);
        }
        let mut shallow = p.clone();
        shallow.highway.clear();
        shallow.config.highway_depth = 0;
        let w = pair(&cfg, 2, Diagnosis::Ad);
        for task in [Task::Cls, Task::Reg] {
            let a = fused_forward(&w, &p, task).unwrap();
            let b = fused_forward(&w, &shallow, task).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn heads_are_disjoint() {
        let cfg = tiny_config(Modality::Both);
        let p = FusionParams::init(&cfg, 8).unwrap();
        let w = pair(&cfg, 9, Diagnosis::NonAd);
        let mut q = p.clone();
        q.reg_w.scale(7.5);
        q.reg_b.fill(3.0);
        assert_eq!(fused_forward(&w, &p, Task::Cls).unwrap(), fused_forward(&w, &q, Task::Cls).unwrap());
        let mut r = p.clone();
        r.cls_w.scale(-2.0);
        assert_eq!(fused_forward(&w, &p, Task::Reg).unwrap(), fused_forward(&w, &r, Task::Reg).unwrap());
    }

    #[test]
    fn dropout_mask_gradients() {
        let cfg = ModelConfig { dropout: 0.4, ..tiny_config(Modality::Both) };
        let p = FusionParams::init(&cfg, 31).unwrap();
        let w = pair(&cfg, 32, Diagnosis::Ad);
        let mask = p.dropout_mask(&mut seeded_rng(33)).unwrap();
        assert_eq!(mask.len(), cfg.concat_dim());
        assert!(mask.iter().all(|&m| m == 0.0 || (m - 1.0 / 0.6).abs() < 1e-15));
        let flat: Vec<Matrix> = p.tensors().into_iter().cloned().collect();
        let report = grad_check(&flat, 1e-5, |t| {
            let mut q = p.clone();
            for (dst, src) in q.tensors_mut().into_iter().zip(t) {
                *dst = src.clone();
            }
            let mut g = q.zeros_like();
            let loss = q.loss_and_grad_masked(&w, Task::Cls, 1.0, &mut g, Some(&mask)).unwrap();
            (loss, g.tensors().into_iter().cloned().collect())
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-4, "{report:?}");
        // no dropout outside training, and none configured by default
        assert!(FusionParams::init(&tiny_config(Modality::Both), 1).unwrap().dropout_mask(&mut seeded_rng(0)).is_none());
        let bad = ModelConfig { dropout: 1.0, ..tiny_config(Modality::Both) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_model_gradients() {
        for modality in [Modality::Both, Modality::Audio, Modality::Text] {
            for task in [Task::Cls, Task::Reg] {
                let cfg = tiny_config(modality);
                let p = FusionParams::init(&cfg, 21).unwrap();
                let mut w = pair(&cfg, 22, Diagnosis::Ad);
                // a target near the initial output keeps the loss O(1), so
                // finite differences are not swamped by cancellation
                w.mmse = fused_forward(&w, &p, Task::Reg).unwrap() + 0.7;
                let flat: Vec<Matrix> = p.tensors().into_iter().cloned().collect();
                let report = grad_check(&flat, 1e-5, |t| {
                    let mut q = p.clone();
                    for (dst, src) in q.tensors_mut().into_iter().zip(t) {
                        *dst = src.clone();
                    }
                    let mut g = q.zeros_like();
                    let loss = q.loss_and_grad(&w, task, 1.0, &mut g).unwrap();
                    (loss, g.tensors().into_iter().cloned().collect())
                })
                .unwrap();
                assert!(report.max_relative_error < 1e-4, "{modality:?} {task:?} {report:?}");
            }
        }
    }

    #[test]
    fn session_aggregation_rules() {
        assert_eq!(
            aggregate_session(&[0.9, 0.9], Task::Cls).unwrap(),
            SessionPrediction::Class { label: Diagnosis::Ad, probability: 0.9 }
        );
        match aggregate_session(&[0.4, 0.6], Task::Cls).unwrap() {
            SessionPrediction::Class { label, probability } => {
                assert_eq!(label, Diagnosis::Ad);
                assert!((probability - 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(aggregate_session(&[35.0, 25.0], Task::Reg).unwrap(), SessionPrediction::Score { mmse: 30.0 });
        assert_eq!(aggregate_session(&[-4.0], Task::Reg).unwrap(), SessionPrediction::Score { mmse: 0.0 });
        assert!(aggregate_session(&[], Task::Cls).is_err());
        let cfg = tiny_config(Modality::Audio);
        let p = FusionParams::init(&cfg, 1).unwrap();
        assert!(predict_session(&[], &p, Task::Cls).is_err());
    }
}
