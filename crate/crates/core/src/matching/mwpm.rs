//! Minimum-weight perfect matching over highlighted vertices, with each
//! highlight allowed to pair with the boundary.

use super::blossom::max_weight_matching;
use super::graph::DecodingGraph;
use crate::error::{Error, Result};

/// Edge set (each edge at most once) plus the total matched distance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Correction {
    pub edges: Vec<usize>,
    pub weight: u64,
}

impl Correction {
    pub fn from_multiset(edges: impl IntoIterator<Item = usize>, weight: u64) -> Correction {
        let mut v: Vec<usize> = edges.into_iter().collect();
        v.sort_unstable();
        let mut out = Vec::with_capacity(v.len());
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j < v.len() && v[j] == v[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                out.push(v[i]);
            }
            i = j;
        }
        Correction { edges: out, weight }
    }
}

fn walk(graph: &DecodingGraph, pred: &[usize], src: usize, mut v: usize, out: &mut Vec<usize>) {
    while v != src {
        let k = pred[v];
        out.push(k);
        let e = &graph.edges[k];
        v = if e.u == v { e.v } else { e.u };
    }
}

pub fn mwpm_decode(graph: &DecodingGraph, highlights: &[usize]) -> Result<Correction> {
    let n = highlights.len();
    if n == 0 {
        return Ok(Correction::default());
    }
    let trees: Vec<(Vec<u32>, Vec<usize>)> = highlights.iter().map(|&h| graph.shortest_paths(h)).collect();
    let mut bdist = vec![u32::MAX; n];
    let mut bvert = vec![usize::MAX; n];
    for i in 0..n {
        for v in 0..graph.n_vertices() {
            if graph.is_boundary(v) && trees[i].0[v] < bdist[i] {
                bdist[i] = trees[i].0[v];
                bvert[i] = v;
            }
        }
    }
    let mut raw: Vec<(usize, usize, u32)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = trees[i].0[highlights[j]];
            if d != u32::MAX {
                raw.push((i, j, d));
            }
        }
        if bdist[i] != u32::MAX {
            raw.push((i, n + i, bdist[i]));
        }
        for j in i + 1..n {
            raw.push((n + i, n + j, 0));
        }
    }
    let cap = raw.iter().map(|e| e.2 as i64).max().unwrap_or(0) + 1;
    let edges: Vec<(usize, usize, i64)> = raw.iter().map(|&(i, j, d)| (i, j, 2 * (cap - d as i64))).collect();
    let mate = max_weight_matching(&edges, true);
    let mut path = Vec::new();
    let mut weight = 0u64;
    for i in 0..n {
        match mate.get(i).copied().flatten() {
            Some(j) if j < n => {
                if i < j {
                    weight += trees[i].0[highlights[j]] as u64;
                    walk(graph, &trees[i].1, highlights[i], highlights[j], &mut path);
                }
            }
            Some(j) if j == n + i => {
                weight += bdist[i] as u64;
                walk(graph, &trees[i].1, highlights[i], bvert[i], &mut path);
            }
            _ => return Err(Error::Numerical(format!("highlight {i} left unmatched"))),
        }
    }
    Ok(Correction::from_multiset(path, weight))
}
