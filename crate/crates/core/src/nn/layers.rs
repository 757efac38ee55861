//! Conv3d with "same" zero padding, batch normalization and activations.
//! Weights are stored `(tap, Cin, Cout)` with taps enumerated
//! `(a, b, c)` row-major over the kernel.

use num_traits::Float;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

const GRAD_SHARDS: usize = 4;

#[derive(Clone, Debug)]
pub struct Conv3d<T> {
    pub kernel: [usize; 3],
    pub cin: usize,
    pub cout: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct ConvGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Float + Send + Sync> Conv3d<T> {
    pub fn new(kernel: [usize; 3], cin: usize, cout: usize) -> Conv3d<T> {
        let taps = kernel.iter().product::<usize>();
        Conv3d { kernel, cin, cout, weight: vec![T::zero(); taps * cin * cout], bias: vec![T::zero(); cout] }
    }

    /// Uniform in ±1/sqrt(fan_in) for weights and biases.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let fan_in = (self.taps() * self.cin) as f64;
        let bound = 1.0 / fan_in.sqrt();
        for w in self.weight.iter_mut().chain(self.bias.iter_mut()) {
            *w = T::from(rng.gen_range(-bound..bound)).unwrap();
        }
    }

    pub fn taps(&self) -> usize {
        self.kernel.iter().product()
    }

    pub fn n_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn offsets(&self) -> Vec<[isize; 3]> {
        let [k1, k2, k3] = self.kernel;
        let mut v = Vec::with_capacity(self.taps());
        for a in 0..k1 {
            for b in 0..k2 {
                for c in 0..k3 {
                    v.push([a as isize - (k1 / 2) as isize, b as isize - (k2 / 2) as isize, c as isize - (k3 / 2) as isize]);
                }
            }
        }
        v
    }

    pub fn forward(&self, x: &Tensor<T>) -> Tensor<T> {
        let [n, d1, d2, d3, cin] = x.shape;
        assert_eq!(cin, self.cin, "conv input channels");
        let cout = self.cout;
        let mut out = Tensor::zeros([n, d1, d2, d3, cout]);
        let offs = self.offsets();
        let vol = d1 * d2 * d3;
        let dims = [d1, d2, d3];
        out.data.par_chunks_mut(vol * cout).enumerate().for_each(|(s, os)| {
            let xs = &x.data[s * vol * cin..(s + 1) * vol * cin];
            for p in 0..vol {
                let (i, j, k) = (p / (d2 * d3), (p / d3) % d2, p % d3);
                let o = &mut os[p * cout..(p + 1) * cout];
                o.copy_from_slice(&self.bias);
                for (t, off) in offs.iter().enumerate() {
                    let Some(q) = shifted([i, j, k], *off, dims) else { continue };
                    let xin = &xs[q * cin..(q + 1) * cin];
                    let wt = &self.weight[t * cin * cout..(t + 1) * cin * cout];
                    for (ci, &xv) in xin.iter().enumerate() {
                        if xv == T::zero() {
                            continue;
                        }
                        let wrow = &wt[ci * cout..(ci + 1) * cout];
                        for (ov, &w) in o.iter_mut().zip(wrow) {
                            *ov = *ov + xv * w;
                        }
                    }
                }
            }
        });
        out
    }

    /// Accumulates parameter gradients; returns the input gradient if asked.
    /// The batch is split into a fixed number of shards whose partial sums
    /// are reduced in shard order, so results do not depend on thread count.
    pub fn backward(&self, x: &Tensor<T>, gout: &Tensor<T>, grad: &mut ConvGrad<T>, want_input: bool) -> Option<Tensor<T>> {
        let n = x.shape[0];
        let per = n.div_ceil(GRAD_SHARDS).max(1);
        let ranges: Vec<(usize, usize)> = (0..n).step_by(per).map(|lo| (lo, (lo + per).min(n))).collect();
        let parts: Vec<(ConvGrad<T>, Option<Vec<T>>)> =
            ranges.par_iter().map(|&(lo, hi)| self.backward_range(x, gout, lo, hi, want_input)).collect();
        let mut gin = if want_input { Some(Vec::with_capacity(x.data.len())) } else { None };
        for (g, part) in parts {
            for (a, b) in grad.weight.iter_mut().zip(&g.weight) {
                *a = *a + *b;
            }
            for (a, b) in grad.bias.iter_mut().zip(&g.bias) {
                *a = *a + *b;
            }
            if let (Some(all), Some(part)) = (gin.as_mut(), part) {
                all.extend(part);
            }
        }
        gin.map(|data| Tensor { shape: x.shape, data })
    }

    fn backward_range(&self, x: &Tensor<T>, gout: &Tensor<T>, lo: usize, hi: usize, want_input: bool) -> (ConvGrad<T>, Option<Vec<T>>) {
        let [_, d1, d2, d3, cin] = x.shape;
        let cout = self.cout;
        let mut grad = self.zero_grad();
        let vol = d1 * d2 * d3;
        let mut gin = if want_input { Some(vec![T::zero(); (hi - lo) * vol * cin]) } else { None };
        let offs = self.offsets();
        let dims = [d1, d2, d3];
        for s in lo..hi {
            let xs = &x.data[s * vol * cin..(s + 1) * vol * cin];
            let gs = &gout.data[s * vol * cout..(s + 1) * vol * cout];
            for p in 0..vol {
                let g = &gs[p * cout..(p + 1) * cout];
                for (b, &gv) in grad.bias.iter_mut().zip(g) {
                    *b = *b + gv;
                }
                let (i, j, k) = (p / (d2 * d3), (p / d3) % d2, p % d3);
                for (t, off) in offs.iter().enumerate() {
                    let Some(q) = shifted([i, j, k], *off, dims) else { continue };
                    let xin = &xs[q * cin..(q + 1) * cin];
                    let wt = &self.weight[t * cin * cout..(t + 1) * cin * cout];
                    let gw = &mut grad.weight[t * cin * cout..(t + 1) * cin * cout];
                    for ci in 0..cin {
                        let xv = xin[ci];
                        let wrow = &wt[ci * cout..(ci + 1) * cout];
                        let mut acc = T::zero();
                        if xv != T::zero() {
                            let gwrow = &mut gw[ci * cout..(ci + 1) * cout];
                            for ((gw, &w), &gv) in gwrow.iter_mut().zip(wrow).zip(g) {
                                *gw = *gw + xv * gv;
                                acc = acc + w * gv;
                            }
                        } else if want_input {
                            for (&w, &gv) in wrow.iter().zip(g) {
                                acc = acc + w * gv;
                            }
                        }
                        if let Some(gi) = gin.as_mut() {
                            let idx = ((s - lo) * vol + q) * cin + ci;
                            gi[idx] = gi[idx] + acc;
                        }
                    }
                }
            }
        }
        (grad, gin)
    }

    pub fn zero_grad(&self) -> ConvGrad<T> {
        ConvGrad { weight: vec![T::zero(); self.weight.len()], bias: vec![T::zero(); self.bias.len()] }
    }
}

fn shifted(p: [usize; 3], off: [isize; 3], dims: [usize; 3]) -> Option<usize> {
    let mut q = [0usize; 3];
    for a in 0..3 {
        let v = p[a] as isize + off[a];
        if v < 0 || v >= dims[a] as isize {
            return None;
        }
        q[a] = v as usize;
    }
    Some((q[0] * dims[1] + q[1]) * dims[2] + q[2])
}

#[derive(Clone, Debug)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
    pub momentum: T,
}

#[derive(Clone, Debug)]
pub struct BnCache<T> {
    pub xhat: Tensor<T>,
    pub inv_std: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct BnGrad<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Float> BatchNorm<T> {
    pub fn new(c: usize) -> BatchNorm<T> {
        BatchNorm {
            gamma: vec![T::one(); c],
            beta: vec![T::zero(); c],
            running_mean: vec![T::zero(); c],
            running_var: vec![T::one(); c],
            eps: T::from(1e-5).unwrap(),
            momentum: T::from(0.9).unwrap(),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Learnable plus running statistics.
    pub fn n_params(&self) -> usize {
        4 * self.gamma.len()
    }

    pub fn forward_infer(&self, x: &Tensor<T>) -> Tensor<T> {
        let c = self.channels();
        let mut y = x.clone();
        let scale: Vec<T> =
            (0..c).map(|ch| self.gamma[ch] / (self.running_var[ch] + self.eps).sqrt()).collect();
        for row in y.data.chunks_mut(c) {
            for ch in 0..c {
                row[ch] = (row[ch] - self.running_mean[ch]) * scale[ch] + self.beta[ch];
            }
        }
        y
    }

    /// Normalizes with batch statistics. Running statistics are updated
    /// only when `update_running` is set.
    pub fn forward_train(&mut self, x: &Tensor<T>, update_running: bool) -> (Tensor<T>, BnCache<T>) {
        let c = self.channels();
        let m = T::from(x.data.len() / c).unwrap();
        let mut mean = vec![T::zero(); c];
        for row in x.data.chunks(c) {
            for ch in 0..c {
                mean[ch] = mean[ch] + row[ch];
            }
        }
        mean.iter_mut().for_each(|v| *v = *v / m);
        let mut var = vec![T::zero(); c];
        for row in x.data.chunks(c) {
            for ch in 0..c {
                let d = row[ch] - mean[ch];
                var[ch] = var[ch] + d * d;
            }
        }
        var.iter_mut().for_each(|v| *v = *v / m);
        let inv_std: Vec<T> = var.iter().map(|v| T::one() / (*v + self.eps).sqrt()).collect();
        let mut xhat = x.clone();
        let mut y = x.clone();
        for (hrow, yrow) in xhat.data.chunks_mut(c).zip(y.data.chunks_mut(c)) {
            for ch in 0..c {
                let h = (hrow[ch] - mean[ch]) * inv_std[ch];
                hrow[ch] = h;
                yrow[ch] = self.gamma[ch] * h + self.beta[ch];
            }
        }
        if update_running {
            let one = T::one();
            for ch in 0..c {
                self.running_mean[ch] = self.momentum * self.running_mean[ch] + (one - self.momentum) * mean[ch];
                self.running_var[ch] = self.momentum * self.running_var[ch] + (one - self.momentum) * var[ch];
            }
        }
        (y, BnCache { xhat, inv_std })
    }

    pub fn backward(&self, cache: &BnCache<T>, gout: &Tensor<T>, grad: &mut BnGrad<T>) -> Tensor<T> {
        let c = self.channels();
        let m = T::from(gout.data.len() / c).unwrap();
        let mut sum_g = vec![T::zero(); c];
        let mut sum_gh = vec![T::zero(); c];
        for (g, h) in gout.data.chunks(c).zip(cache.xhat.data.chunks(c)) {
            for ch in 0..c {
                sum_g[ch] = sum_g[ch] + g[ch];
                sum_gh[ch] = sum_gh[ch] + g[ch] * h[ch];
            }
        }
        for ch in 0..c {
            grad.gamma[ch] = grad.gamma[ch] + sum_gh[ch];
            grad.beta[ch] = grad.beta[ch] + sum_g[ch];
        }
        let mut gin = gout.clone();
        for (gi, h) in gin.data.chunks_mut(c).zip(cache.xhat.data.chunks(c)) {
            for ch in 0..c {
                let k = self.gamma[ch] * cache.inv_std[ch] / m;
                gi[ch] = k * (m * gi[ch] - sum_g[ch] - h[ch] * sum_gh[ch]);
            }
        }
        gin
    }

    pub fn zero_grad(&self) -> BnGrad<T> {
        BnGrad { gamma: vec![T::zero(); self.channels()], beta: vec![T::zero(); self.channels()] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Float>(self, v: T) -> T {
        match self {
            Activation::Relu => v.max(T::zero()),
            Activation::Sigmoid => sigmoid(v),
        }
    }
}

pub fn sigmoid<T: Float>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Mean binary cross-entropy computed from logits.
pub fn bce_with_logits<T: Float>(logits: &[T], targets: &[T]) -> T {
    let mut acc = T::zero();
    for (&z, &y) in logits.iter().zip(targets) {
        acc = acc + z.max(T::zero()) - z * y + (T::one() + (-z.abs()).exp()).ln();
    }
    acc / T::from(logits.len()).unwrap()
}

/// Gradient of `bce_with_logits` with respect to the logits.
pub fn bce_grad<T: Float>(logits: &[T], targets: &[T]) -> Vec<T> {
    let m = T::from(logits.len()).unwrap();
    logits.iter().zip(targets).map(|(&z, &y)| (sigmoid(z) - y) / m).collect()
}
