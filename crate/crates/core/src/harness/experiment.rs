//! Monte Carlo runs of the full pipeline over a list of physical error rates.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{wilson, Z95};
use crate::error::{Error, Result};
use crate::geometry::build_layout;
use crate::matching::GlobalDecoder;
use crate::nn::io::load;
use crate::noise::{sample_shot, NoiseModel};
use crate::persist::ShotBatch;
use crate::pipeline::{LocalDecoder, Pipeline, ShotOutcome};
use crate::rng::derive_seed;
use crate::sparsify::Sparsifier;

/// Bumped whenever CSV columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalChoice {
    None,
    Oracle,
    Weights { path: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dx: usize,
    pub dz: usize,
    pub dm: usize,
    pub ps: Vec<f64>,
    pub shots: u64,
    pub local: LocalChoice,
    pub sparsifier: Sparsifier,
    pub global: GlobalDecoder,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be >= 1".into()));
        }
        if self.dm == 0 {
            return Err(Error::InvalidParameter("dm must be >= 1".into()));
        }
        if self.ps.is_empty() {
            return Err(Error::InvalidParameter("empty p list".into()));
        }
        // p = 0 is accepted as a noiseless sanity point
        if let Some(p) = self.ps.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("p must lie in [0,1), got {p}")));
        }
        build_layout(self.dx, self.dz)?;
        if let LocalChoice::Weights { path } = &self.local {
            if !path.exists() {
                return Err(Error::InvalidParameter(format!("weights file {} not found", path.display())));
            }
        }
        Ok(())
    }

    pub fn pipeline_label(&self) -> String {
        let local = match &self.local {
            LocalChoice::None => "none",
            LocalChoice::Oracle => "oracle",
            LocalChoice::Weights { .. } => "network",
        };
        let sparse = match self.sparsifier {
            Sparsifier::None => "none".to_string(),
            Sparsifier::Collapse { sheet } => format!("collapse{sheet}"),
            Sparsifier::Cleanup { direction } => format!("cleanup-{}", format!("{direction:?}").to_lowercase()),
            Sparsifier::AdaptiveCleanup => "cleanup-adaptive".to_string(),
        };
        let global = match self.global {
            GlobalDecoder::Mwpm => "mwpm",
            GlobalDecoder::UnionFind => "uf",
        };
        format!("{local}+{sparse}+{global}")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Rate {
    fn new(failures: u64, shots: u64) -> Rate {
        let (ci_low, ci_high) = wilson(failures, shots, Z95);
        Rate { failures, rate: failures as f64 / shots as f64, ci_low, ci_high }
    }
}

/// One (volume, p, pipeline) point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub dx: usize,
    pub dz: usize,
    pub dm: usize,
    pub p: f64,
    pub pipeline: String,
    pub shots: u64,
    pub seed: u64,
    pub x: Rate,
    pub z: Rate,
    /// Shots where either logical failed.
    pub any: Rate,
    pub mean_raw_highlights: f64,
    pub mean_local_highlights: f64,
    pub mean_sparse_highlights: f64,
    /// Local-stage output over raw.
    pub r_local: f64,
    /// Sparsified over raw.
    pub r_a: f64,
    pub mean_local_s: f64,
    pub mean_sparsify_s: f64,
    pub mean_global_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub weights_sha256: Option<String>,
    pub rows: Vec<ExperimentRow>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Mean number of set bits per volume.
pub fn syndrome_density(volumes: &[Array2<u8>]) -> f64 {
    if volumes.is_empty() {
        return 0.0;
    }
    let total: usize = volumes.iter().map(|v| v.iter().filter(|&&b| b == 1).count()).sum();
    total as f64 / volumes.len() as f64
}

fn aggregate(cfg: &ExperimentConfig, p: f64, seed: u64, label: &str, outs: &[ShotOutcome]) -> ExperimentRow {
    let n = outs.len() as u64;
    let nf = n as f64;
    // ordered, sequential reduction
    let (mut fx, mut fz, mut fa) = (0u64, 0u64, 0u64);
    let (mut raw, mut loc, mut sp) = (0usize, 0usize, 0usize);
    let (mut tl, mut ts, mut tg) = (0.0, 0.0, 0.0);
    for o in outs {
        fx += o.x_fail as u64;
        fz += o.z_fail as u64;
        fa += (o.x_fail || o.z_fail) as u64;
        raw += o.raw_highlights;
        loc += o.local_highlights;
        sp += o.sparse_highlights;
        tl += o.times.local_s;
        ts += o.times.sparsify_s;
        tg += o.times.global_s;
    }
    let (mr, ml, ms) = (raw as f64 / nf, loc as f64 / nf, sp as f64 / nf);
    ExperimentRow {
        dx: cfg.dx,
        dz: cfg.dz,
        dm: cfg.dm,
        p,
        pipeline: label.to_string(),
        shots: n,
        seed,
        x: Rate::new(fx, n),
        z: Rate::new(fz, n),
        any: Rate::new(fa, n),
        mean_raw_highlights: mr,
        mean_local_highlights: ml,
        mean_sparse_highlights: ms,
        r_local: ratio(ml, mr),
        r_a: ratio(ms, mr),
        mean_local_s: tl / nf,
        mean_sparsify_s: ts / nf,
        mean_global_s: tg / nf,
    }
}

/// Runs the pipeline with an explicit local decoder at one p.
pub fn run_point(pipeline: &Pipeline, cfg: &ExperimentConfig, p: f64, point_seed: u64) -> Result<ExperimentRow> {
    let model = NoiseModel::new(p)?;
    let outs: Vec<ShotOutcome> = (0..cfg.shots)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(point_seed, i);
            let (ev, sv) = sample_shot(&pipeline.layout, pipeline.dm, model, s);
            pipeline.run_shot(&ev, &sv, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, p, point_seed, &cfg.pipeline_label(), &outs))
}

/// Loads the local decoder, returning the weights hash when a file is used.
pub fn resolve_local(choice: &LocalChoice) -> Result<(LocalDecoder, Option<String>)> {
    Ok(match choice {
        LocalChoice::None => (LocalDecoder::None, None),
        LocalChoice::Oracle => (LocalDecoder::Oracle, None),
        LocalChoice::Weights { path } => {
            let (net, sha) = load(path)?;
            (LocalDecoder::Network(Arc::new(net)), Some(sha))
        }
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let layout = build_layout(cfg.dx, cfg.dz)?;
    let (local, sha) = resolve_local(&cfg.local)?;
    let pipeline = Pipeline::new(layout, cfg.dm, local, cfg.sparsifier, cfg.global)?;
    let mut rows = Vec::with_capacity(cfg.ps.len());
    for (k, &p) in cfg.ps.iter().enumerate() {
        rows.push(run_point(&pipeline, cfg, p, derive_seed(cfg.seed, k as u64))?);
    }
    Ok(ExperimentResult { config: cfg.clone(), weights_sha256: sha, rows })
}

/// Decodes a stored batch instead of sampling fresh shots.
pub fn decode_batch(batch: &ShotBatch, local: &LocalChoice, sparsifier: Sparsifier, global: GlobalDecoder) -> Result<ExperimentResult> {
    let cfg = ExperimentConfig {
        dx: batch.dx,
        dz: batch.dz,
        dm: batch.dm,
        ps: vec![batch.p],
        shots: batch.shots.len() as u64,
        local: local.clone(),
        sparsifier,
        global,
        seed: batch.seed,
    };
    cfg.validate()?;
    let (local, sha) = resolve_local(local)?;
    let pipeline = Pipeline::new(build_layout(batch.dx, batch.dz)?, batch.dm, local, sparsifier, global)?;
    let outs = batch
        .shots
        .par_iter()
        .enumerate()
        .map(|(i, s)| pipeline.run_shot(&s.errors, &s.syndromes, derive_seed(batch.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let row = aggregate(&cfg, batch.p, batch.seed, &cfg.pipeline_label(), &outs);
    Ok(ExperimentResult { config: cfg, weights_sha256: sha, rows: vec![row] })
}

pub const CSV_HEADER: [&str; 28] = [
    "schema", "dx", "dz", "dm", "p", "pipeline", "shots", "seed",
    "x_fail", "x_rate", "x_ci_low", "x_ci_high",
    "z_fail", "z_rate", "z_ci_low", "z_ci_high",
    "any_fail", "any_rate", "any_ci_low", "any_ci_high",
    "mean_raw", "mean_local", "mean_sparse", "r_local", "r_a",
    "mean_local_s", "mean_sparsify_s", "mean_global_s",
];

pub fn write_csv(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![
            CSV_SCHEMA_VERSION.to_string(),
            r.dx.to_string(),
            r.dz.to_string(),
            r.dm.to_string(),
            format!("{:e}", r.p),
            r.pipeline.clone(),
            r.shots.to_string(),
            r.seed.to_string(),
        ];
        for rate in [r.x, r.z, r.any] {
            rec.extend([rate.failures.to_string(), format!("{:e}", rate.rate), format!("{:e}", rate.ci_low), format!("{:e}", rate.ci_high)]);
        }
        rec.extend(
            [r.mean_raw_highlights, r.mean_local_highlights, r.mean_sparse_highlights, r.r_local, r.r_a, r.mean_local_s, r.mean_sparsify_s, r.mean_global_s]
                .iter()
                .map(|v| format!("{v:e}")),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub csv_schema: u32,
    pub crate_version: String,
    pub configs: Vec<ExperimentConfig>,
    pub weights_sha256: Vec<Option<String>>,
    pub rows: usize,
}

pub fn write_manifest(results: &[ExperimentResult], path: &Path) -> Result<RunManifest> {
    let m = RunManifest {
        csv_schema: CSV_SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        configs: results.iter().map(|r| r.config.clone()).collect(),
        weights_sha256: results.iter().map(|r| r.weights_sha256.clone()).collect(),
        rows: results.iter().map(|r| r.rows.len()).sum(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&m)?)?;
    Ok(m)
}
