//! Versioned binary weight files with a JSON sidecar manifest.
//!
//! Layout: magic `HQNW`, u32 version, u32 header length, JSON header,
//! then per block conv weight, conv bias, gamma, beta, running mean and
//! running variance as little-endian f32.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layers::Activation;
use super::net::{Architecture, ConvNet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HQNW";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BlockHeader {
    kernel: [usize; 3],
    cin: usize,
    cout: usize,
    residual: bool,
    act: Activation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Header {
    arch: Architecture,
    blocks: Vec<BlockHeader>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightsManifest {
    pub format_version: u32,
    pub arch: Architecture,
    pub parameter_count: usize,
    pub sha256: String,
    #[serde(default)]
    pub training: Option<serde_json::Value>,
}

pub fn to_bytes(net: &ConvNet<f32>) -> Result<Vec<u8>> {
    let header = Header {
        arch: net.arch,
        blocks: net
            .blocks
            .iter()
            .map(|b| BlockHeader { kernel: b.conv.kernel, cin: b.conv.cin, cout: b.conv.cout, residual: b.residual, act: b.act })
            .collect(),
    };
    let hjson = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(hjson.len() as u32).to_le_bytes());
    out.extend_from_slice(&hjson);
    for b in &net.blocks {
        for v in [&b.conv.weight, &b.conv.bias, &b.bn.gamma, &b.bn.beta, &b.bn.running_mean, &b.bn.running_var] {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ConvNet<f32>> {
    let mut r = bytes;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a weights file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != WEIGHTS_VERSION {
        return Err(Error::Format(format!("unsupported weights version {version}")));
    }
    let hlen = read_u32(&mut r)? as usize;
    if r.len() < hlen {
        return Err(Error::Format("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&r[..hlen])?;
    r = &r[hlen..];
    let mut net = ConvNet::<f32>::new(header.arch, 0);
    if net.blocks.len() != header.blocks.len() {
        return Err(Error::Format("block count does not match architecture".into()));
    }
    for (b, h) in net.blocks.iter_mut().zip(&header.blocks) {
        if b.conv.kernel != h.kernel || b.conv.cin != h.cin || b.conv.cout != h.cout || b.residual != h.residual || b.act != h.act {
            return Err(Error::Format("block shape does not match architecture".into()));
        }
        for v in [&mut b.conv.weight, &mut b.conv.bias, &mut b.bn.gamma, &mut b.bn.beta, &mut b.bn.running_mean, &mut b.bn.running_var] {
            for x in v.iter_mut() {
                let mut buf = [0u8; 4];
                r.read_exact(&mut buf).map_err(|_| Error::Format("truncated weights".into()))?;
                *x = f32::from_le_bytes(buf);
            }
        }
    }
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes in weights file".into()));
    }
    Ok(net)
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated".into()))?;
    Ok(u32::from_le_bytes(b))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `path` and `path.json`; returns the manifest.
pub fn save(net: &ConvNet<f32>, path: &Path, training: Option<serde_json::Value>) -> Result<WeightsManifest> {
    let bytes = to_bytes(net)?;
    std::fs::File::create(path)?.write_all(&bytes)?;
    let manifest = WeightsManifest {
        format_version: WEIGHTS_VERSION,
        arch: net.arch,
        parameter_count: net.parameter_count(),
        sha256: sha256_hex(&bytes),
        training,
    };
    std::fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Loads weights and returns them with the file hash.
pub fn load(path: &Path) -> Result<(ConvNet<f32>, String)> {
    let bytes = std::fs::read(path)?;
    Ok((from_bytes(&bytes)?, sha256_hex(&bytes)))
}

pub fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
