//! One shot through local decoder, sparsifier and global decoder.

use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{build_input, corrections_from_output};
use crate::error::{Error, Result};
use crate::geometry::{Basis, CodeLayout};
use crate::matching::{build_graph, decode, DecodingGraph, GlobalDecoder};
use crate::nn::ConvNet;
use crate::noise::{ErrorVolume, SyndromeVolume};
use crate::sparsify::{adaptive_cleanup, sheet_sizes, syndrome_collapse, vertical_cleanup, Sparsifier};

#[derive(Clone, Debug)]
pub enum LocalDecoder {
    None,
    /// Uses the true per-round error changes.
    Oracle,
    Network(Arc<ConvNet<f32>>),
}

impl LocalDecoder {
    pub fn name(&self) -> &'static str {
        match self {
            LocalDecoder::None => "none",
            LocalDecoder::Oracle => "oracle",
            LocalDecoder::Network(_) => "network",
        }
    }

    /// Per-round corrections `[round][qubit]` for X and Z.
    pub fn corrections(&self, layout: &CodeLayout, ev: &ErrorVolume, sv: &SyndromeVolume) -> Result<(Vec<Vec<u8>>, Vec<Vec<u8>>)> {
        let dm = sv.rounds();
        let n = layout.n_data();
        match self {
            LocalDecoder::None => Ok((vec![vec![0; n]; dm], vec![vec![0; n]; dm])),
            LocalDecoder::Oracle => {
                let f = |b: Basis| -> Vec<Vec<u8>> {
                    ev.changes(b).axis_iter(Axis(0)).map(|r| r.iter().copied().collect()).collect()
                };
                Ok((f(Basis::X), f(Basis::Z)))
            }
            LocalDecoder::Network(net) => {
                let x = build_input(layout, sv)?;
                let out = net.forward(&x)?;
                Ok(corrections_from_output(&out, 0, 0.5))
            }
        }
    }
}

/// XORs the syndrome of each round's correction into that round's
/// difference row: a correction for round j acts before round j's readout.
pub fn fold_corrections(layout: &CodeLayout, basis: Basis, diff: &Array2<u8>, corr: &[Vec<u8>]) -> Array2<u8> {
    let mut out = diff.clone();
    for (j, c) in corr.iter().enumerate() {
        if c.iter().all(|&b| b == 0) {
            continue;
        }
        for (s, b) in layout.syndrome(basis, c).into_iter().enumerate() {
            out[[j, s]] ^= b;
        }
    }
    out
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StageTimes {
    pub local_s: f64,
    pub sparsify_s: f64,
    pub global_s: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub x_fail: bool,
    pub z_fail: bool,
    /// Highlighted vertices over both graphs at each stage.
    pub raw_highlights: usize,
    pub local_highlights: usize,
    pub sparse_highlights: usize,
    pub times: StageTimes,
}

pub struct Pipeline {
    pub layout: CodeLayout,
    pub dm: usize,
    pub local: LocalDecoder,
    pub sparsifier: Sparsifier,
    pub global: GlobalDecoder,
    graphs: [DecodingGraph; 2],
}

fn count(a: &Array2<u8>) -> usize {
    a.iter().filter(|&&b| b == 1).count()
}

impl Pipeline {
    pub fn new(layout: CodeLayout, dm: usize, local: LocalDecoder, sparsifier: Sparsifier, global: GlobalDecoder) -> Result<Pipeline> {
        let (layers, collapsed) = match sparsifier {
            Sparsifier::Collapse { sheet } => (sheet_sizes(dm, sheet)?.len(), true),
            _ => (dm, false),
        };
        let gx = build_graph(&layout, Basis::X, layers, collapsed)?;
        let gz = build_graph(&layout, Basis::Z, layers, collapsed)?;
        Ok(Pipeline { layout, dm, local, sparsifier, global, graphs: [gx, gz] })
    }

    pub fn graph(&self, basis: Basis) -> &DecodingGraph {
        match basis {
            Basis::X => &self.graphs[0],
            Basis::Z => &self.graphs[1],
        }
    }

    pub fn run_shot(&self, ev: &ErrorVolume, sv: &SyndromeVolume, shot_seed: u64) -> Result<ShotOutcome> {
        if sv.rounds() != self.dm {
            return Err(Error::ShapeMismatch { expected: format!("{} rounds", self.dm), got: format!("{}", sv.rounds()) });
        }
        let mut out = ShotOutcome { raw_highlights: count(&sv.diff_x) + count(&sv.diff_z), ..Default::default() };
        let t0 = Instant::now();
        let (cx, cz) = self.local.corrections(&self.layout, ev, sv)?;
        let folded = [
            fold_corrections(&self.layout, Basis::X, &sv.diff_x, &cx),
            fold_corrections(&self.layout, Basis::Z, &sv.diff_z, &cz),
        ];
        out.times.local_s = t0.elapsed().as_secs_f64();
        out.local_highlights = count(&folded[0]) + count(&folded[1]);

        let t1 = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(shot_seed ^ 0x5A5A_5A5A);
        let mut sparse = Vec::with_capacity(2);
        for f in &folded {
            sparse.push(match self.sparsifier {
                Sparsifier::None => f.clone(),
                Sparsifier::Collapse { sheet } => syndrome_collapse(f, sheet)?,
                Sparsifier::Cleanup { direction } => vertical_cleanup(f, direction),
                Sparsifier::AdaptiveCleanup => adaptive_cleanup(f, &mut rng),
            });
        }
        out.times.sparsify_s = t1.elapsed().as_secs_f64();
        out.sparse_highlights = count(&sparse[0]) + count(&sparse[1]);

        let t2 = Instant::now();
        for (bi, basis) in [Basis::X, Basis::Z].into_iter().enumerate() {
            let g = &self.graphs[bi];
            let h = g.highlights(&sparse[bi])?;
            let corr = decode(self.global, g, &h)?;
            let mut residual = ev.final_frame(basis);
            for (r, f) in residual.iter_mut().zip(g.flips_of(&corr.edges, self.layout.n_data())) {
                *r ^= f;
            }
            let local = if bi == 0 { &cx } else { &cz };
            for c in local {
                for (r, b) in residual.iter_mut().zip(c) {
                    *r ^= b;
                }
            }
            if self.layout.syndrome(basis, &residual).iter().any(|&b| b == 1) {
                return Err(Error::Numerical("residual error has a non-trivial syndrome".into()));
            }
            let fail = self.layout.flips_logical(basis, &residual);
            if bi == 0 {
                out.x_fail = fail;
            } else {
                out.z_fail = fail;
            }
        }
        out.times.global_s = t2.elapsed().as_secs_f64();
        Ok(out)
    }
}

/// Plain global decoding on the raw difference volume, without any
/// local stage. Reference path for pipeline equivalence checks.
pub fn decode_global_only(layout: &CodeLayout, graphs: [&DecodingGraph; 2], global: GlobalDecoder, ev: &ErrorVolume, sv: &SyndromeVolume) -> Result<(bool, bool)> {
    let mut fails = [false; 2];
    for (bi, basis) in [Basis::X, Basis::Z].into_iter().enumerate() {
        let h = graphs[bi].highlights(sv.diff(basis))?;
        let corr = decode(global, graphs[bi], &h)?;
        let flips = graphs[bi].flips_of(&corr.edges, layout.n_data());
        let residual: Vec<u8> = ev.final_frame(basis).iter().zip(&flips).map(|(a, b)| a ^ b).collect();
        fails[bi] = layout.flips_logical(basis, &residual);
    }
    Ok((fails[0], fails[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;
    use crate::noise::{enumerate_locations, inject_faults, inject_unchecked, Fault, Location, LocationClass, NoiseModel, Pauli, Pauli2};

    #[test]
    fn oracle_folding_matches_correction_circuit() {
        let l = build_layout(3, 3).unwrap();
        let dm = 3;
        for loc in enumerate_locations(&l, dm - 1) {
            let faults: Vec<Fault> = match loc.class() {
                LocationClass::TwoQubitGate => Pauli2::non_trivial().into_iter().map(Fault::Two).collect(),
                LocationClass::Idle => vec![Fault::Single(Pauli::X), Fault::Single(Pauli::Y), Fault::Single(Pauli::Z)],
                _ => vec![Fault::Flip],
            };
            for f in faults {
                let (ev, sv) = inject_faults(&l, dm, &[(loc, f)]).unwrap();
                let (cx, cz) = LocalDecoder::Oracle.corrections(&l, &ev, &sv).unwrap();
                let fx = fold_corrections(&l, Basis::X, &sv.diff_x, &cx);
                let fz = fold_corrections(&l, Basis::Z, &sv.diff_z, &cz);
                // same volume from the circuit with the corrections applied as
                // data faults right before each round's readout window
                let mut all = vec![(loc, f)];
                for j in 0..dm {
                    for q in 0..l.n_data() {
                        let p = Pauli::from_bits(cx[j][q] == 1, cz[j][q] == 1);
                        if p != Pauli::I {
                            let w = Location::DataWindow { round: j + 1, qubit: q };
                            if let Some(existing) = all.iter_mut().find(|(l2, _)| *l2 == w) {
                                let Fault::Single(e) = existing.1 else { unreachable!() };
                                existing.1 = Fault::Single(Pauli::from_bits((e.x() ^ p.x()) == 1, (e.z() ^ p.z()) == 1));
                            } else {
                                all.push((w, Fault::Single(p)));
                            }
                        }
                    }
                }
                let (ev2, sv2) = inject_unchecked(&l, dm, &all);
                assert_eq!(sv2.diff_x, fx, "{loc:?} {f:?}");
                assert_eq!(sv2.diff_z, fz, "{loc:?} {f:?}");
                assert!(ev2.final_frame(Basis::X).iter().all(|&b| b == 0));
                assert!(ev2.final_frame(Basis::Z).iter().all(|&b| b == 0));
            }
        }
    }

    #[test]
    fn identity_pipeline_equals_global_only() {
        let l = build_layout(3, 3).unwrap();
        let p = Pipeline::new(l.clone(), 3, LocalDecoder::None, Sparsifier::None, GlobalDecoder::Mwpm).unwrap();
        let m = NoiseModel::new(0.02).unwrap();
        for seed in 0..200 {
            let (ev, sv) = crate::noise::sample_shot(&l, 3, m, seed);
            let a = p.run_shot(&ev, &sv, seed).unwrap();
            let b = decode_global_only(&l, [p.graph(Basis::X), p.graph(Basis::Z)], GlobalDecoder::Mwpm, &ev, &sv).unwrap();
            assert_eq!((a.x_fail, a.z_fail), b);
        }
    }
}
