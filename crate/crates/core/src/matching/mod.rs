//! Global decoders over decoding graphs.

pub mod blossom;
pub mod brute;
pub mod graph;
pub mod mwpm;
pub mod uf;

use serde::{Deserialize, Serialize};

pub use graph::{build_graph, DecodingGraph, EdgeKind, GraphEdge};
pub use mwpm::{mwpm_decode, Correction};
pub use uf::uf_decode;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalDecoder {
    Mwpm,
    UnionFind,
}

pub fn decode(kind: GlobalDecoder, graph: &DecodingGraph, highlights: &[usize]) -> Result<Correction> {
    match kind {
        GlobalDecoder::Mwpm => mwpm_decode(graph, highlights),
        GlobalDecoder::UnionFind => Ok(uf_decode(graph, highlights)),
    }
}

#[cfg(test)]
mod tests {
    use super::brute::{all_pairs, brute_force_weight};
    use super::*;
    use crate::geometry::{build_layout, Basis};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn graphs() -> &'static Vec<DecodingGraph> {
        static G: OnceLock<Vec<DecodingGraph>> = OnceLock::new();
        G.get_or_init(|| {
            let l3 = build_layout(3, 3).unwrap();
            let l5 = build_layout(5, 5).unwrap();
            vec![
                build_graph(&l3, Basis::X, 3, false).unwrap(),
                build_graph(&l3, Basis::Z, 1, false).unwrap(),
                build_graph(&l5, Basis::X, 3, false).unwrap(),
                build_graph(&l5, Basis::Z, 2, true).unwrap(),
            ]
        })
    }

    fn dists() -> &'static Vec<Vec<Vec<u64>>> {
        static D: OnceLock<Vec<Vec<Vec<u64>>>> = OnceLock::new();
        D.get_or_init(|| graphs().iter().map(all_pairs).collect())
    }

    fn pick(g: &DecodingGraph, seeds: &[usize]) -> Vec<usize> {
        let nb = g.layers * g.n_checks;
        let mut h: Vec<usize> = seeds.iter().map(|s| s % nb).collect();
        h.sort();
        h.dedup();
        h
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn mwpm_is_optimal(gi in 0usize..4, seeds in proptest::collection::vec(0usize..10_000, 0..9)) {
            let g = &graphs()[gi];
            let h = pick(g, &seeds);
            let c = mwpm_decode(g, &h).unwrap();
            prop_assert_eq!(c.weight, brute_force_weight(g, &dists()[gi], &h));
            prop_assert_eq!(g.syndrome_of(&c.edges), h.clone());
            let u = uf_decode(g, &h);
            prop_assert_eq!(g.syndrome_of(&u.edges), h);
        }
    }

    #[test]
    fn blossom_triangle_case() {
        // three mutually adjacent highlights: one must go to the boundary
        let l = build_layout(5, 5).unwrap();
        let g = build_graph(&l, Basis::X, 1, false).unwrap();
        let h = vec![5, 6, 9];
        let c = mwpm_decode(&g, &h).unwrap();
        assert_eq!(g.syndrome_of(&c.edges), h);
    }
}
