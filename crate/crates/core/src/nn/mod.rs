//! Channel-last 3D convolutional network engine, generic over the float type.

pub mod io;
pub mod layers;
pub mod net;
pub mod tensor;
pub mod train;

pub use net::{ArchKind, Architecture, ConvNet, LayerSpec};
pub use tensor::Tensor;
pub use train::{train, TrainConfig, TrainReport};

#[cfg(test)]
mod tests {
    use super::layers::{bce_with_logits, BatchNorm, Conv3d};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(shape: [usize; 5], rng: &mut ChaCha8Rng) -> Tensor<f64> {
        let n = shape.iter().product();
        Tensor { shape, data: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(Architecture::six_layer(1.0).parameter_count(), 221_660);
        assert_eq!(ConvNet::<f32>::new(Architecture::six_layer(1.0), 0).parameter_count(), 221_660);
        let e = Architecture::eleven_layer(1.0);
        assert_eq!(ConvNet::<f32>::new(e, 0).parameter_count(), e.parameter_count());
        assert_eq!(e.parameter_count(), 268_460);
        assert_eq!(Architecture::six_layer(1.0).receptive_field(), 9);
        assert_eq!(e.receptive_field(), 9);
    }

    #[test]
    fn layer_specs_shape() {
        let s = Architecture::six_layer(1.0).layer_specs();
        assert_eq!(s.iter().filter(|l| matches!(l, LayerSpec::Batchnorm { .. })).count(), 6);
        assert_eq!(s.last(), Some(&LayerSpec::Sigmoid));
        let e = Architecture::eleven_layer(1.0).layer_specs();
        assert_eq!(e.iter().filter(|l| matches!(l, LayerSpec::SkipAdd)).count(), 5);
    }

    #[test]
    fn conv_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut conv = Conv3d::<f64>::new([3, 3, 3], 3, 4);
        conv.init(&mut rng);
        let x = rand_tensor([2, 3, 4, 3, 3], &mut rng);
        let proj = rand_tensor([2, 3, 4, 3, 4], &mut rng);
        let f = |c: &Conv3d<f64>, x: &Tensor<f64>| -> f64 {
            c.forward(x).data.iter().zip(&proj.data).map(|(a, b)| a * b).sum()
        };
        let mut g = conv.zero_grad();
        let gin = conv.backward(&x, &proj, &mut g, true).unwrap();
        let h = 1e-6;
        for idx in (0..conv.weight.len()).step_by(7) {
            let mut c = conv.clone();
            c.weight[idx] += h;
            let up = f(&c, &x);
            c.weight[idx] -= 2.0 * h;
            let dn = f(&c, &x);
            assert!(rel(g.weight[idx], (up - dn) / (2.0 * h)) < 1e-4);
        }
        for idx in 0..conv.bias.len() {
            let mut c = conv.clone();
            c.bias[idx] += h;
            let up = f(&c, &x);
            c.bias[idx] -= 2.0 * h;
            let dn = f(&c, &x);
            assert!(rel(g.bias[idx], (up - dn) / (2.0 * h)) < 1e-4);
        }
        for idx in (0..x.data.len()).step_by(5) {
            let mut xp = x.clone();
            xp.data[idx] += h;
            let up = f(&conv, &xp);
            xp.data[idx] -= 2.0 * h;
            let dn = f(&conv, &xp);
            assert!(rel(gin.data[idx], (up - dn) / (2.0 * h)) < 1e-4);
        }
    }

    #[test]
    fn batchnorm_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut bn = BatchNorm::<f64>::new(3);
        bn.gamma = vec![0.7, 1.3, -0.4];
        bn.beta = vec![0.1, -0.2, 0.3];
        let x = rand_tensor([2, 2, 2, 3, 3], &mut rng);
        let proj = rand_tensor([2, 2, 2, 3, 3], &mut rng);
        let f = |b: &BatchNorm<f64>, x: &Tensor<f64>| -> f64 {
            let mut b = b.clone();
            b.forward_train(x, false).0.data.iter().zip(&proj.data).map(|(a, c)| a * c).sum()
        };
        let (_, cache) = bn.clone().forward_train(&x, false);
        let mut g = bn.zero_grad();
        let gin = bn.backward(&cache, &proj, &mut g);
        let h = 1e-6;
        for idx in 0..x.data.len() {
            let mut xp = x.clone();
            xp.data[idx] += h;
            let up = f(&bn, &xp);
            xp.data[idx] -= 2.0 * h;
            let dn = f(&bn, &xp);
            assert!(rel(gin.data[idx], (up - dn) / (2.0 * h)) < 1e-4, "x[{idx}]");
        }
        for ch in 0..3 {
            let mut b = bn.clone();
            b.gamma[ch] += h;
            let up = f(&b, &x);
            b.gamma[ch] -= 2.0 * h;
            let dn = f(&b, &x);
            assert!(rel(g.gamma[ch], (up - dn) / (2.0 * h)) < 1e-4);
        }
    }

    fn net_gradcheck(arch: Architecture) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = ConvNet::<f64>::new(arch, 11);
        let x = rand_tensor([2, 3, 3, 3, 5], &mut rng);
        let y = Tensor { shape: [2, 3, 3, 3, 2], data: (0..108).map(|_| rng.gen_range(0..2) as f64).collect() };
        let loss = |n: &mut ConvNet<f64>| -> f64 {
            let (logits, _) = n.forward_train(&x, false).unwrap();
            bce_with_logits(&logits.data, &y.data)
        };
        let (logits, trace) = net.forward_train(&x, false).unwrap();
        let g = Tensor { shape: logits.shape, data: layers::bce_grad(&logits.data, &y.data) };
        let grads = net.backward(&trace, g);
        let flat: Vec<Vec<f64>> = grads.flat().iter().map(|s| s.to_vec()).collect();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        let n_tensors = flat.len();
        for t in 0..n_tensors {
            let len = flat[t].len();
            for idx in (0..len).step_by((len / 6).max(1)) {
                let orig = net.params()[t][idx];
                net.params_mut()[t][idx] = orig + h;
                let up = loss(&mut net);
                net.params_mut()[t][idx] = orig - h;
                let dn = loss(&mut net);
                net.params_mut()[t][idx] = orig;
                let num = (up - dn) / (2.0 * h);
                if flat[t][idx].abs() > 1e-9 || num.abs() > 1e-9 {
                    worst = worst.max(rel(flat[t][idx], num));
                }
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn six_layer_gradcheck() {
        net_gradcheck(Architecture::six_layer(0.06));
    }

    #[test]
    fn eleven_layer_gradcheck() {
        net_gradcheck(Architecture::eleven_layer(0.05));
    }

    #[test]
    fn translation_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = ConvNet::<f32>::new(Architecture::six_layer(0.1), 5);
        for b in &mut net.blocks {
            for (i, m) in b.bn.running_mean.iter_mut().enumerate() {
                *m = 0.01 * i as f32;
            }
        }
        let shape = [1, 14, 14, 14, 5];
        let mut x = Tensor::<f32>::zeros(shape);
        let mut xs = Tensor::<f32>::zeros(shape);
        for i in 4..9 {
            for j in 4..9 {
                for k in 4..9 {
                    for c in 0..5 {
                        let v = if rng.gen_bool(0.3) { 1.0 } else { 0.0 };
                        x.set(0, i, j, k, c, v);
                        xs.set(0, i + 1, j + 1, k + 1, c, v);
                    }
                }
            }
        }
        let a = net.forward(&x).unwrap();
        let b = net.forward(&xs).unwrap();
        for i in 4..9 {
            for j in 4..9 {
                for k in 4..9 {
                    for c in 0..2 {
                        let d = (a.get(0, i, j, k, c) - b.get(0, i + 1, j + 1, k + 1, c)).abs();
                        assert!(d < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn empirical_receptive_field() {
        let net = ConvNet::<f64>::new(Architecture::six_layer(0.1), 6);
        let shape = [1, 13, 13, 13, 5];
        let base = Tensor::<f64>::zeros(shape);
        let mut bumped = base.clone();
        bumped.set(0, 6, 6, 6, 0, 1.0);
        let a = net.forward(&base).unwrap();
        let b = net.forward(&bumped).unwrap();
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for i in 0..13 {
            for j in 0..13 {
                for k in 0..13 {
                    if (a.get(0, i, j, k, 0) - b.get(0, i, j, k, 0)).abs() > 0.0 {
                        for (d, v) in [i, j, k].into_iter().enumerate() {
                            lo[d] = lo[d].min(v);
                            hi[d] = hi[d].max(v);
                        }
                    }
                }
            }
        }
        for d in 0..3 {
            assert_eq!(hi[d] - lo[d] + 1, 9);
        }
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = [16, 3, 3, 3, 5];
        let x = Tensor { shape, data: (0..16 * 27 * 5).map(|_| rng.gen_range(0..2) as f32).collect::<Vec<f32>>() };
        // target: copy of channels 0 and 1
        let mut y = Tensor::<f32>::zeros([16, 3, 3, 3, 2]);
        for i in 0..16 * 27 {
            y.data[i * 2] = x.data[i * 5];
            y.data[i * 2 + 1] = x.data[i * 5 + 1];
        }
        let cfg = TrainConfig { epochs: 30, batch_size: 8, lr: 1e-2, seed: 1 };
        let mut a = ConvNet::<f32>::new(Architecture::six_layer(0.2), 9);
        let mut b = a.clone();
        let ra = train(&mut a, &x, &y, &cfg).unwrap();
        let rb = train(&mut b, &x, &y, &cfg).unwrap();
        assert_eq!(ra.epoch_loss, rb.epoch_loss);
        assert_eq!(io::to_bytes(&a).unwrap(), io::to_bytes(&b).unwrap());
        assert!(ra.epoch_loss.last().unwrap() < &(0.5 * ra.epoch_loss[0]));
    }

    #[test]
    fn weights_roundtrip() {
        let net = ConvNet::<f32>::new(Architecture::eleven_layer(0.2), 3);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.bin");
        let m = io::save(&net, &p, None).unwrap();
        let (back, hash) = io::load(&p).unwrap();
        assert_eq!(hash, m.sha256);
        assert_eq!(io::to_bytes(&back).unwrap(), io::to_bytes(&net).unwrap());
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[4] = 9;
        assert!(io::from_bytes(&bytes).is_err());
        assert!(io::from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn rejects_wrong_channels() {
        let net = ConvNet::<f32>::new(Architecture::six_layer(0.1), 3);
        assert!(net.forward(&Tensor::zeros([1, 3, 3, 3, 4])).is_err());
    }
}
