//! Conversion between syndrome/error volumes and conv-net tensors.
//!
//! Every check outcome is written into the `dx × dz` image at a fixed data
//! cell so that the volume keeps the lattice geometry. Input channels:
//! 0 X-error syndrome differences, 1 Z-error syndrome differences,
//! 2 enc(X) mask, 3 enc(Z) mask, 4 temporal boundary (first and last round).
//! Target channels: 0 X changes, 1 Z changes, both canonicalized.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::geometry::{Basis, CodeLayout};
use crate::homology::canonicalize;
use crate::nn::tensor::Tensor;
use crate::noise::{ErrorVolume, SyndromeVolume};

pub const INPUT_CHANNELS: usize = 5;
pub const OUTPUT_CHANNELS: usize = 2;
pub const INPUT_CHANNEL_NAMES: [&str; INPUT_CHANNELS] = ["diff_x", "diff_z", "enc_x", "enc_z", "time_boundary"];
pub const OUTPUT_CHANNEL_NAMES: [&str; OUTPUT_CHANNELS] = ["x_changes_canonical", "z_changes_canonical"];

/// Places one round of outcomes for checks detecting `basis` errors into
/// the `dx × dz` image.
pub fn encode_syndrome_matrix(layout: &CodeLayout, basis: Basis, row: ArrayView1<u8>) -> Result<Array2<u8>> {
    let checks = layout.detectors(basis);
    if row.len() != checks.len() {
        return Err(Error::ShapeMismatch { expected: format!("{} checks", checks.len()), got: format!("{}", row.len()) });
    }
    let mut m = Array2::<u8>::zeros((layout.dx, layout.dz));
    for (s, &b) in checks.iter().zip(row.iter()) {
        let (r, c) = s.image_cell();
        m[[r, c]] = b & 1;
    }
    Ok(m)
}

/// Reads an image back into check order.
pub fn decode_syndrome_matrix(layout: &CodeLayout, basis: Basis, m: &Array2<u8>) -> Vec<u8> {
    layout
        .detectors(basis)
        .iter()
        .map(|s| {
            let (r, c) = s.image_cell();
            m[[r, c]]
        })
        .collect()
}

/// Cells that can hold a syndrome bit for `basis` errors.
pub fn boundary_mask(layout: &CodeLayout, basis: Basis) -> Array2<u8> {
    let ones = ndarray::Array1::<u8>::ones(layout.detectors(basis).len());
    encode_syndrome_matrix(layout, basis, ones.view()).expect("sizes agree")
}

/// Single-sample input tensor of shape `(1, dx, dz, dm, 5)`.
pub fn build_input(layout: &CodeLayout, sv: &SyndromeVolume) -> Result<Tensor<f32>> {
    build_input_from_diffs(layout, &sv.diff_x, &sv.diff_z)
}

pub fn build_input_from_diffs(layout: &CodeLayout, diff_x: &Array2<u8>, diff_z: &Array2<u8>) -> Result<Tensor<f32>> {
    let dm = diff_x.nrows();
    if diff_z.nrows() != dm {
        return Err(Error::ShapeMismatch { expected: format!("{dm} rounds"), got: format!("{}", diff_z.nrows()) });
    }
    let (dx, dz) = (layout.dx, layout.dz);
    let mut t = Tensor::<f32>::zeros([1, dx, dz, dm, INPUT_CHANNELS]);
    let enc_x = boundary_mask(layout, Basis::X);
    let enc_z = boundary_mask(layout, Basis::Z);
    for k in 0..dm {
        let mx = encode_syndrome_matrix(layout, Basis::X, diff_x.row(k))?;
        let mz = encode_syndrome_matrix(layout, Basis::Z, diff_z.row(k))?;
        let edge = (k == 0 || k + 1 == dm) as u8 as f32;
        for i in 0..dx {
            for j in 0..dz {
                t.set(0, i, j, k, 0, mx[[i, j]] as f32);
                t.set(0, i, j, k, 1, mz[[i, j]] as f32);
                t.set(0, i, j, k, 2, enc_x[[i, j]] as f32);
                t.set(0, i, j, k, 3, enc_z[[i, j]] as f32);
                t.set(0, i, j, k, 4, edge);
            }
        }
    }
    Ok(t)
}

/// Single-sample target tensor of shape `(1, dx, dz, dm, 2)`.
pub fn build_target(layout: &CodeLayout, ev: &ErrorVolume) -> Result<Tensor<f32>> {
    let dm = ev.rounds();
    let (dx, dz) = (layout.dx, layout.dz);
    let mut t = Tensor::<f32>::zeros([1, dx, dz, dm, OUTPUT_CHANNELS]);
    for (ch, basis) in [Basis::X, Basis::Z].into_iter().enumerate() {
        let changes = ev.changes(basis);
        for k in 0..dm {
            let flat: Vec<u8> = changes.index_axis(Axis(0), k).iter().copied().collect();
            let canon = canonicalize(layout, basis, &flat)?;
            for q in 0..layout.n_data() {
                t.set(0, q / dz, q % dz, k, ch, canon[q] as f32);
            }
        }
    }
    Ok(t)
}

/// Thresholds a probability tensor into per-round corrections
/// `[round][qubit]` for X (channel 0) and Z (channel 1).
pub fn corrections_from_output(out: &Tensor<f32>, sample: usize, threshold: f32) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let [_, dx, dz, dm, _] = out.shape;
    let mut cx = vec![vec![0u8; dx * dz]; dm];
    let mut cz = vec![vec![0u8; dx * dz]; dm];
    for i in 0..dx {
        for j in 0..dz {
            for k in 0..dm {
                cx[k][i * dz + j] = (out.get(sample, i, j, k, 0) > threshold) as u8;
                cz[k][i * dz + j] = (out.get(sample, i, j, k, 1) > threshold) as u8;
            }
        }
    }
    (cx, cz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;
    use ndarray::Array1;

    fn rows(m: &Array2<u8>) -> Vec<String> {
        m.outer_iter().map(|r| r.iter().map(|b| char::from(b'0' + b)).collect()).collect()
    }

    #[test]
    fn enc_masks_d5() {
        let l = build_layout(5, 5).unwrap();
        assert_eq!(rows(&boundary_mask(&l, Basis::X)), vec!["11010", "10101", "11010", "10101", "00000"]);
        assert_eq!(rows(&boundary_mask(&l, Basis::Z)), vec!["11110", "01010", "10100", "01010", "10100"]);
    }

    #[test]
    fn encoding_is_injective() {
        for &(dx, dz) in &[(3, 3), (5, 5), (3, 7), (9, 9)] {
            let l = build_layout(dx, dz).unwrap();
            for basis in [Basis::X, Basis::Z] {
                let cells: std::collections::HashSet<_> = l.detectors(basis).iter().map(|s| s.image_cell()).collect();
                assert_eq!(cells.len(), l.detectors(basis).len());
                let n = l.detectors(basis).len();
                let row = Array1::from_iter((0..n).map(|i| (i % 3 == 0) as u8));
                let m = encode_syndrome_matrix(&l, basis, row.view()).unwrap();
                assert_eq!(decode_syndrome_matrix(&l, basis, &m), row.to_vec());
            }
        }
    }

    #[test]
    fn input_channels() {
        let l = build_layout(3, 3).unwrap();
        let mut dx = Array2::<u8>::zeros((3, 4));
        dx[[1, 2]] = 1;
        let dz = Array2::<u8>::zeros((3, 4));
        let t = build_input_from_diffs(&l, &dx, &dz).unwrap();
        let (r, c) = l.z_stabilizers[2].image_cell();
        assert_eq!(t.get(0, r, c, 1, 0), 1.0);
        assert_eq!(t.data.iter().step_by(5).filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(t.get(0, 0, 0, 0, 4), 1.0);
        assert_eq!(t.get(0, 0, 0, 1, 4), 0.0);
        assert_eq!(t.get(0, 0, 0, 2, 4), 1.0);
    }
}
