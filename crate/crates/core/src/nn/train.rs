use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{bce_grad, bce_with_logits};
use super::net::{ConvNet, Gradients};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 1, batch_size: 32, lr: 1e-3, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
}

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(net: &ConvNet<f32>, lr: f64) -> Adam {
        let shapes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, net: &mut ConvNet<f32>, grads: &Gradients<f32>) {
        self.t += 1;
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let step = (self.lr * c2.sqrt() / c1) as f32;
        let eps = self.eps as f32;
        for (((p, g), m), v) in net.params_mut().into_iter().zip(grads.flat()).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= step * m[i] / (v[i].sqrt() + eps);
            }
        }
    }
}

/// Mean BCE loss and gradients for one mini-batch.
pub fn loss_and_grad(net: &mut ConvNet<f32>, x: &Tensor<f32>, y: &Tensor<f32>, update_running: bool) -> Result<(f64, Gradients<f32>)> {
    let (logits, trace) = net.forward_train(x, update_running)?;
    if logits.shape != y.shape {
        return Err(Error::ShapeMismatch { expected: format!("{:?}", logits.shape), got: format!("{:?}", y.shape) });
    }
    let loss = bce_with_logits(&logits.data, &y.data) as f64;
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite loss".into()));
    }
    let g = Tensor { shape: logits.shape, data: bce_grad(&logits.data, &y.data) };
    Ok((loss, net.backward(&trace, g)))
}

/// Mini-batch Adam on BCE. Sample order is shuffled per epoch from `cfg.seed`.
pub fn train(net: &mut ConvNet<f32>, inputs: &Tensor<f32>, targets: &Tensor<f32>, cfg: &TrainConfig) -> Result<TrainReport> {
    let n = inputs.batch();
    if targets.batch() != n {
        return Err(Error::ShapeMismatch { expected: format!("{n} targets"), got: format!("{}", targets.batch()) });
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be positive".into()));
    }
    let mut opt = Adam::new(net, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = TrainReport::default();
    for _ in 0..cfg.epochs {
        let (loss, steps) = train_epoch(net, &mut opt, inputs, targets, cfg.batch_size, &mut rng)?;
        report.epoch_loss.push(loss);
        report.steps += steps;
    }
    Ok(report)
}

/// One shuffled pass over `inputs`; returns the mean mini-batch loss and the
/// number of optimizer steps. The optimizer state carries over between calls,
/// so data can be streamed in chunks.
pub fn train_epoch<R: rand::Rng>(
    net: &mut ConvNet<f32>,
    opt: &mut Adam,
    inputs: &Tensor<f32>,
    targets: &Tensor<f32>,
    batch_size: usize,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let n = inputs.batch();
    if targets.batch() != n {
        return Err(Error::ShapeMismatch { expected: format!("{n} targets"), got: format!("{}", targets.batch()) });
    }
    if batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(batch_size) {
        let xb = gather(inputs, chunk);
        let yb = gather(targets, chunk);
        let (loss, grads) = loss_and_grad(net, &xb, &yb, true)?;
        opt.step(net, &grads);
        total += loss;
        batches += 1;
    }
    Ok((total / batches.max(1) as f64, batches))
}

/// Mean per-output BCE of the inference-mode network on `(x, y)`.
pub fn evaluate_bce(net: &ConvNet<f32>, x: &Tensor<f32>, y: &Tensor<f32>, batch_size: usize) -> Result<f64> {
    let n = x.batch();
    if y.batch() != n || n == 0 {
        return Err(Error::ShapeMismatch { expected: format!("{n} targets"), got: format!("{}", y.batch()) });
    }
    let mut total = 0.0f64;
    let mut count = 0usize;
    for lo in (0..n).step_by(batch_size.max(1)) {
        let hi = (lo + batch_size.max(1)).min(n);
        let probs = net.forward(&x.slice_batch(lo, hi))?;
        let yb = y.slice_batch(lo, hi);
        if probs.shape != yb.shape {
            return Err(Error::ShapeMismatch { expected: format!("{:?}", probs.shape), got: format!("{:?}", yb.shape) });
        }
        for (&p, &t) in probs.data.iter().zip(&yb.data) {
            let p = (p as f64).clamp(1e-7, 1.0 - 1e-7);
            let t = t as f64;
            total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        }
        count += probs.data.len();
    }
    Ok(total / count as f64)
}

pub fn gather(t: &Tensor<f32>, idx: &[usize]) -> Tensor<f32> {
    let per = t.volume() * t.channels();
    let mut data = Vec::with_capacity(per * idx.len());
    for &i in idx {
        data.extend_from_slice(&t.data[i * per..(i + 1) * per]);
    }
    let mut shape = t.shape;
    shape[0] = idx.len();
    Tensor { shape, data }
}
