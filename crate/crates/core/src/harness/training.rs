//! Streamed training of the local decoder on freshly sampled shots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::train::{evaluate_bce, train_epoch, Adam, TrainConfig};
use crate::nn::{Architecture, ConvNet};
use crate::persist::generate_batch;
use crate::rng::derive_seed;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainJob {
    pub dx: usize,
    pub dz: usize,
    pub dm: usize,
    pub p: f64,
    pub samples: usize,
    pub holdout: usize,
    /// Shots held in memory at once.
    pub chunk: usize,
    pub arch: Architecture,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub chunk_loss: Vec<f64>,
    pub steps: usize,
    pub heldout_bce: f64,
    /// BCE of the constant 0.5 predictor, `ln 2`.
    pub baseline_bce: f64,
}

impl TrainJob {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.holdout == 0 || self.chunk == 0 {
            return Err(Error::InvalidParameter("samples, holdout and chunk must be positive".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0,1), got {}", self.p)));
        }
        Ok(())
    }

    /// Training shots come from stream 0 of the seed, held-out shots from
    /// stream 1, so the two sets never overlap.
    pub fn run(&self) -> Result<(ConvNet<f32>, TrainSummary)> {
        self.validate()?;
        let mut net = ConvNet::<f32>::new(self.arch, self.train.seed);
        let mut opt = Adam::new(&net, self.train.lr);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.train.seed, 2));
        let train_seed = derive_seed(self.train.seed, 0);
        let mut summary = TrainSummary { chunk_loss: Vec::new(), steps: 0, heldout_bce: 0.0, baseline_bce: std::f64::consts::LN_2 };
        for _ in 0..self.train.epochs {
            let mut start = 0;
            while start < self.samples {
                let n = self.chunk.min(self.samples - start);
                let batch = generate_batch(self.dx, self.dz, self.dm, self.p, n, derive_seed(train_seed, start as u64))?;
                let (x, y) = batch.tensors()?;
                let (loss, steps) = train_epoch(&mut net, &mut opt, &x, &y, self.train.batch_size, &mut rng)?;
                summary.chunk_loss.push(loss);
                summary.steps += steps;
                start += n;
            }
        }
        let held = generate_batch(self.dx, self.dz, self.dm, self.p, self.holdout, derive_seed(self.train.seed, 1))?;
        let (x, y) = held.tensors()?;
        summary.heldout_bce = evaluate_bce(&net, &x, &y, 256)?;
        Ok((net, summary))
    }
}
