//! Versioned binary storage for batches of sampled shots, plus a JSON
//! sidecar, and conversion of a batch into conv-net training tensors.
//!
//! Layout (little endian): magic `HQSB`, u32 version, u32 dx, dz, dm,
//! u64 count, u64 seed, f64 p, then per shot the bit-packed cumulative X and
//! Z error volumes followed by the raw X and Z check outcomes.

use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{build_input, build_target, INPUT_CHANNEL_NAMES, OUTPUT_CHANNEL_NAMES};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, Basis, CodeLayout};
use crate::nn::Tensor;
use crate::noise::{sample_shot, ErrorVolume, NoiseModel, SyndromeVolume};
use crate::rng::derive_seed;

pub const MAGIC: &[u8; 4] = b"HQSB";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shot {
    pub errors: ErrorVolume,
    pub syndromes: SyndromeVolume,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotBatch {
    pub dx: usize,
    pub dz: usize,
    pub dm: usize,
    pub p: f64,
    pub seed: u64,
    pub shots: Vec<Shot>,
}

/// Samples `count` shots; shot `i` uses `derive_seed(seed, i)`.
pub fn generate_batch(dx: usize, dz: usize, dm: usize, p: f64, count: usize, seed: u64) -> Result<ShotBatch> {
    let layout = build_layout(dx, dz)?;
    let model = NoiseModel::new(p)?;
    if dm == 0 {
        return Err(Error::InvalidParameter("dm must be >= 1".into()));
    }
    let shots = (0..count)
        .into_par_iter()
        .map(|i| {
            let (errors, syndromes) = sample_shot(&layout, dm, model, derive_seed(seed, i as u64));
            Shot { errors, syndromes }
        })
        .collect();
    Ok(ShotBatch { dx, dz, dm, p, seed, shots })
}

fn pack(bits: impl Iterator<Item = u8>, out: &mut Vec<u8>) {
    let mut byte = 0u8;
    let mut k = 0;
    for b in bits {
        byte |= (b & 1) << k;
        k += 1;
        if k == 8 {
            out.push(byte);
            byte = 0;
            k = 0;
        }
    }
    if k > 0 {
        out.push(byte);
    }
}

fn unpack(src: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|i| (src[i / 8] >> (i % 8)) & 1).collect()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated shot batch".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn check_counts(layout: &CodeLayout) -> (usize, usize) {
    (layout.detectors(Basis::X).len(), layout.detectors(Basis::Z).len())
}

impl ShotBatch {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let layout = build_layout(self.dx, self.dz)?;
        let (nx, nz) = check_counts(&layout);
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.dx, self.dz, self.dm] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.shots.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.p.to_le_bytes());
        for s in &self.shots {
            let e = &s.errors;
            let y = &s.syndromes;
            let want3 = [self.dm, self.dx, self.dz];
            if e.x_errors.shape() != want3 || e.z_errors.shape() != want3 || y.raw_x.shape() != [self.dm, nx] || y.raw_z.shape() != [self.dm, nz] {
                return Err(Error::ShapeMismatch { expected: format!("{want3:?}"), got: format!("{:?}", e.x_errors.shape()) });
            }
            pack(e.x_errors.iter().copied(), &mut out);
            pack(e.z_errors.iter().copied(), &mut out);
            pack(y.raw_x.iter().copied(), &mut out);
            pack(y.raw_z.iter().copied(), &mut out);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ShotBatch> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a shot batch (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported shot batch version {version}")));
        }
        let dx = r.u32()? as usize;
        let dz = r.u32()? as usize;
        let dm = r.u32()? as usize;
        let count = r.u64()? as usize;
        let seed = r.u64()?;
        let p = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let layout = build_layout(dx, dz)?;
        let (nx, nz) = check_counts(&layout);
        let vol = dm * dx * dz;
        let mut shots = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let xe = unpack(r.take(vol.div_ceil(8))?, vol);
            let ze = unpack(r.take(vol.div_ceil(8))?, vol);
            let rx = unpack(r.take((dm * nx).div_ceil(8))?, dm * nx);
            let rz = unpack(r.take((dm * nz).div_ceil(8))?, dm * nz);
            let shape_err = |e: ndarray::ShapeError| Error::Format(e.to_string());
            let errors = ErrorVolume::from_cumulative(
                Array3::from_shape_vec((dm, dx, dz), xe).map_err(shape_err)?,
                Array3::from_shape_vec((dm, dx, dz), ze).map_err(shape_err)?,
            );
            let syndromes = SyndromeVolume::from_raw(
                Array2::from_shape_vec((dm, nx), rx).map_err(shape_err)?,
                Array2::from_shape_vec((dm, nz), rz).map_err(shape_err)?,
            );
            shots.push(Shot { errors, syndromes });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after shot batch".into()));
        }
        Ok(ShotBatch { dx, dz, dm, p, seed, shots })
    }

    pub fn sidecar(&self) -> BatchSidecar {
        BatchSidecar {
            format: "HQSB".into(),
            version: VERSION,
            dx: self.dx,
            dz: self.dz,
            dm: self.dm,
            p: self.p,
            seed: self.seed,
            count: self.shots.len(),
            error_shape: [self.dm, self.dx, self.dz],
            input_channels: INPUT_CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            target_channels: OUTPUT_CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            tensor_layout: "N,dx,dz,dm,C".into(),
        }
    }

    /// Writes the batch and `<path>.json`.
    pub fn save(&self, path: &Path) -> Result<BatchSidecar> {
        std::fs::write(path, self.to_bytes()?)?;
        let side = self.sidecar();
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
        Ok(side)
    }

    pub fn load(path: &Path) -> Result<ShotBatch> {
        ShotBatch::from_bytes(&std::fs::read(path)?)
    }

    /// Conv-net inputs and canonicalized targets for every shot.
    pub fn tensors(&self) -> Result<(Tensor<f32>, Tensor<f32>)> {
        let layout = build_layout(self.dx, self.dz)?;
        let pairs = self
            .shots
            .par_iter()
            .map(|s| Ok((build_input(&layout, &s.syndromes)?, build_target(&layout, &s.errors)?)))
            .collect::<Result<Vec<_>>>()?;
        let (xs, ys): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Ok((Tensor::stack(&xs)?, Tensor::stack(&ys)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSidecar {
    pub format: String,
    pub version: u32,
    pub dx: usize,
    pub dz: usize,
    pub dm: usize,
    pub p: f64,
    pub seed: u64,
    pub count: usize,
    pub error_shape: [usize; 3],
    pub input_channels: Vec<String>,
    pub target_channels: Vec<String>,
    pub tensor_layout: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let b = generate_batch(3, 5, 4, 0.02, 25, 9).unwrap();
        let bytes = b.to_bytes().unwrap();
        let back = ShotBatch::from_bytes(&bytes).unwrap();
        assert_eq!(back, b);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.bin");
        let side = b.save(&path).unwrap();
        assert_eq!(ShotBatch::load(&path).unwrap(), b);
        let json: BatchSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(json, side);
        assert_eq!(json.input_channels.len(), 5);
    }

    #[test]
    fn reproducible_from_seed() {
        let a = generate_batch(3, 3, 3, 0.01, 10, 4).unwrap();
        let b = generate_batch(3, 3, 3, 0.01, 10, 4).unwrap();
        assert_eq!(a, b);
        let c = generate_batch(3, 3, 3, 0.01, 10, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_corruption() {
        let b = generate_batch(3, 3, 2, 0.01, 3, 1).unwrap();
        let bytes = b.to_bytes().unwrap();
        assert!(ShotBatch::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ShotBatch::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(ShotBatch::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(ShotBatch::from_bytes(&long).is_err());
    }

    #[test]
    fn tensors_have_expected_shape() {
        let b = generate_batch(5, 5, 3, 0.01, 4, 2).unwrap();
        let (x, y) = b.tensors().unwrap();
        assert_eq!(x.shape, [4, 5, 5, 3, 5]);
        assert_eq!(y.shape, [4, 5, 5, 3, 2]);
    }
}
