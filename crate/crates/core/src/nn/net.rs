//! Fully convolutional local decoder built from conv → BN → activation blocks.

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{sigmoid, Activation, BatchNorm, BnCache, BnGrad, Conv3d, ConvGrad};
use super::tensor::Tensor;
use crate::codec::{INPUT_CHANNELS, OUTPUT_CHANNELS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    SixLayer,
    ElevenLayer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ArchKind,
    /// Multiplies every hidden filter count.
    pub scale: f64,
}

/// Flattened description of one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv3d { cin: usize, cout: usize, kernel: [usize; 3] },
    Pointwise { cin: usize, cout: usize },
    Batchnorm { channels: usize },
    Relu,
    Sigmoid,
    SkipAdd,
}

fn scaled(n: usize, s: f64) -> usize {
    ((n as f64 * s).round() as usize).max(1)
}

impl Architecture {
    pub fn six_layer(scale: f64) -> Architecture {
        Architecture { kind: ArchKind::SixLayer, scale }
    }

    pub fn eleven_layer(scale: f64) -> Architecture {
        Architecture { kind: ArchKind::ElevenLayer, scale }
    }

    /// (kernel edge, cin, cout, residual) per block.
    pub fn blocks(&self) -> Vec<(usize, usize, usize, bool)> {
        let f = scaled(50, self.scale);
        let mut v = vec![(3, INPUT_CHANNELS, f, false), (3, f, f, false), (3, f, f, false), (3, f, f, false)];
        match self.kind {
            ArchKind::SixLayer => {
                let h = scaled(200, self.scale);
                v.push((1, f, h, false));
                v.push((1, h, OUTPUT_CHANNELS, false));
            }
            ArchKind::ElevenLayer => {
                let h = scaled(100, self.scale);
                v.push((1, f, h, false));
                for _ in 0..5 {
                    v.push((1, h, h, true));
                }
                v.push((1, h, OUTPUT_CHANNELS, false));
            }
        }
        v
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let blocks = self.blocks();
        let last = blocks.len() - 1;
        let mut out = Vec::new();
        for (i, &(k, cin, cout, res)) in blocks.iter().enumerate() {
            out.push(if k == 1 {
                LayerSpec::Pointwise { cin, cout }
            } else {
                LayerSpec::Conv3d { cin, cout, kernel: [k; 3] }
            });
            out.push(LayerSpec::Batchnorm { channels: cout });
            if res {
                out.push(LayerSpec::SkipAdd);
            }
            out.push(if i == last { LayerSpec::Sigmoid } else { LayerSpec::Relu });
        }
        out
    }

    /// Edge length of the cube of input cells that influence one output.
    pub fn receptive_field(&self) -> usize {
        1 + self.blocks().iter().map(|b| b.0 - 1).sum::<usize>()
    }

    /// Trainable parameters plus batch-norm running statistics.
    pub fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|&(k, cin, cout, _)| k * k * k * cin * cout + cout + 4 * cout).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Block<T> {
    pub conv: Conv3d<T>,
    pub bn: BatchNorm<T>,
    pub act: Activation,
    pub residual: bool,
}

#[derive(Clone, Debug)]
pub struct ConvNet<T> {
    pub arch: Architecture,
    pub blocks: Vec<Block<T>>,
}

/// Per-block activations kept for the backward pass.
pub struct Trace<T> {
    inputs: Vec<Tensor<T>>,
    bn: Vec<BnCache<T>>,
    outputs: Vec<Tensor<T>>,
}

#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub blocks: Vec<(ConvGrad<T>, BnGrad<T>)>,
}

impl<T: Float> Gradients<T> {
    /// Flattened in the same order as `ConvNet::params`.
    pub fn flat(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = Vec::new();
        for (c, b) in &self.blocks {
            v.push(&c.weight);
            v.push(&c.bias);
            v.push(&b.gamma);
            v.push(&b.beta);
        }
        v
    }
}

impl<T: Float + Send + Sync> ConvNet<T> {
    pub fn new(arch: Architecture, seed: u64) -> ConvNet<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = arch.blocks();
        let last = specs.len() - 1;
        let blocks = specs
            .iter()
            .enumerate()
            .map(|(i, &(k, cin, cout, residual))| {
                let mut conv = Conv3d::new([k; 3], cin, cout);
                conv.init(&mut rng);
                let act = if i == last { Activation::Sigmoid } else { Activation::Relu };
                Block { conv, bn: BatchNorm::new(cout), act, residual }
            })
            .collect();
        ConvNet { arch, blocks }
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(|b| b.conv.n_params() + b.bn.n_params()).sum()
    }

    pub fn params(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = Vec::new();
        for b in &self.blocks {
            v.push(&b.conv.weight);
            v.push(&b.conv.bias);
            v.push(&b.bn.gamma);
            v.push(&b.bn.beta);
        }
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<T>> {
        let mut v: Vec<&mut Vec<T>> = Vec::new();
        for b in &mut self.blocks {
            v.push(&mut b.conv.weight);
            v.push(&mut b.conv.bias);
            v.push(&mut b.bn.gamma);
            v.push(&mut b.bn.beta);
        }
        v
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != INPUT_CHANNELS {
            return Err(Error::ShapeMismatch { expected: format!("{INPUT_CHANNELS} channels"), got: format!("{:?}", x.shape) });
        }
        Ok(())
    }

    /// Inference with running statistics; returns probabilities.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for b in &self.blocks {
            let mut y = b.bn.forward_infer(&b.conv.forward(&h));
            if b.residual {
                add_assign(&mut y, &h);
            }
            y.data.iter_mut().for_each(|v| *v = b.act.apply(*v));
            h = y;
        }
        if h.has_non_finite() {
            return Err(Error::Numerical("non-finite network output".into()));
        }
        Ok(h)
    }

    /// Training pass with batch statistics; returns logits of the final block.
    pub fn forward_train(&mut self, x: &Tensor<T>, update_running: bool) -> Result<(Tensor<T>, Trace<T>)> {
        self.check_input(x)?;
        let mut trace = Trace { inputs: Vec::new(), bn: Vec::new(), outputs: Vec::new() };
        let mut h = x.clone();
        let last = self.blocks.len() - 1;
        for (i, b) in self.blocks.iter_mut().enumerate() {
            let z = b.conv.forward(&h);
            let (mut y, cache) = b.bn.forward_train(&z, update_running);
            if b.residual {
                add_assign(&mut y, &h);
            }
            if i != last {
                y.data.iter_mut().for_each(|v| *v = b.act.apply(*v));
            }
            trace.inputs.push(std::mem::replace(&mut h, y.clone()));
            trace.bn.push(cache);
            trace.outputs.push(y);
        }
        if h.has_non_finite() {
            return Err(Error::Numerical("non-finite logits".into()));
        }
        Ok((h, trace))
    }

    /// Backpropagates a gradient with respect to the final logits.
    pub fn backward(&self, trace: &Trace<T>, glogits: Tensor<T>) -> Gradients<T> {
        let n = self.blocks.len();
        let mut grads: Vec<Option<(ConvGrad<T>, BnGrad<T>)>> = vec![None; n];
        let mut g = glogits;
        for i in (0..n).rev() {
            let b = &self.blocks[i];
            if i != n - 1 {
                // relu mask from the stored post-activation output
                for (gv, &o) in g.data.iter_mut().zip(&trace.outputs[i].data) {
                    if o <= T::zero() {
                        *gv = T::zero();
                    }
                }
            }
            let skip = if b.residual { Some(g.clone()) } else { None };
            let mut bg = b.bn.zero_grad();
            let gz = b.bn.backward(&trace.bn[i], &g, &mut bg);
            let mut cg = b.conv.zero_grad();
            let gin = b.conv.backward(&trace.inputs[i], &gz, &mut cg, i > 0);
            grads[i] = Some((cg, bg));
            if let Some(mut gi) = gin {
                if let Some(s) = skip {
                    add_assign(&mut gi, &s);
                }
                g = gi;
            }
        }
        Gradients { blocks: grads.into_iter().map(|g| g.expect("filled")).collect() }
    }

    pub fn cast<U: Float + Send + Sync>(&self) -> ConvNet<U> {
        let c = |v: &Vec<T>| v.iter().map(|x| U::from(*x).unwrap()).collect::<Vec<U>>();
        ConvNet {
            arch: self.arch,
            blocks: self
                .blocks
                .iter()
                .map(|b| Block {
                    conv: Conv3d { kernel: b.conv.kernel, cin: b.conv.cin, cout: b.conv.cout, weight: c(&b.conv.weight), bias: c(&b.conv.bias) },
                    bn: BatchNorm {
                        gamma: c(&b.bn.gamma),
                        beta: c(&b.bn.beta),
                        running_mean: c(&b.bn.running_mean),
                        running_var: c(&b.bn.running_var),
                        eps: U::from(b.bn.eps).unwrap(),
                        momentum: U::from(b.bn.momentum).unwrap(),
                    },
                    act: b.act,
                    residual: b.residual,
                })
                .collect(),
        }
    }
}

fn add_assign<T: Float>(a: &mut Tensor<T>, b: &Tensor<T>) {
    for (x, y) in a.data.iter_mut().zip(&b.data) {
        *x = *x + *y;
    }
}

/// Probabilities from logits.
pub fn probabilities<T: Float>(logits: &Tensor<T>) -> Tensor<T> {
    Tensor { shape: logits.shape, data: logits.data.iter().map(|&z| sigmoid(z)).collect() }
}

/// Binary corrections: output above 0.5.
pub fn predict_corrections(probs: &Tensor<f32>) -> Vec<u8> {
    probs.data.iter().map(|&p| (p > 0.5) as u8).collect()
}
