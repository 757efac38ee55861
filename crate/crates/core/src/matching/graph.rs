//! Decoding graphs built from single elementary faults of the extraction
//! circuit. Vertices are (check, layer) pairs plus one boundary vertex per
//! layer; the boundary vertices are chained with zero-weight edges.

use std::collections::{HashMap, VecDeque};

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Basis, CodeLayout};
use crate::noise::{enumerate_locations, inject_unchecked, Fault, Location, Pauli, Pauli2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Spatial,
    Vertical,
    Diagonal,
    Boundary,
    BoundaryLink,
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphEdge {
    pub u: usize,
    pub v: usize,
    pub weight: u32,
    pub kind: EdgeKind,
    /// Data qubits flipped when this edge is part of a correction.
    pub flips: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodingGraph {
    pub basis: Basis,
    pub n_checks: usize,
    pub layers: usize,
    pub collapsed: bool,
    pub edges: Vec<GraphEdge>,
    #[serde(skip)]
    pub adjacency: Vec<Vec<(usize, usize)>>,
}

/// Detection pattern of one elementary fault in a reference round:
/// highlights as (check, layer offset 0 or 1) and the final data flips.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub highlights: Vec<(usize, usize)>,
    pub flips: Vec<usize>,
    pub window: bool,
}

fn components(loc: &Location) -> Vec<Fault> {
    match loc {
        Location::Cnot { .. } => [(Pauli::X, Pauli::I), (Pauli::Z, Pauli::I), (Pauli::I, Pauli::X), (Pauli::I, Pauli::Z)]
            .into_iter()
            .map(|(control, target)| Fault::Two(Pauli2 { control, target }))
            .collect(),
        Location::Prep { .. } | Location::Measure { .. } => vec![Fault::Flip],
        _ => vec![Fault::Single(Pauli::X), Fault::Single(Pauli::Z)],
    }
}

/// Enumerates every elementary fault of round 1 in a two-round circuit.
pub fn templates(layout: &CodeLayout, basis: Basis) -> Result<Vec<Template>> {
    let n_checks = layout.detectors(basis).len();
    let mut out = Vec::new();
    for loc in enumerate_locations(layout, 1) {
        for f in components(&loc) {
            let (ev, sv) = inject_unchecked(layout, 2, &[(loc, f)]);
            let diff = sv.diff(basis);
            let mut highlights = Vec::new();
            for layer in 0..2 {
                for c in 0..n_checks {
                    if diff[[layer, c]] == 1 {
                        highlights.push((c, layer));
                    }
                }
            }
            let frame = ev.final_frame(basis);
            let flips: Vec<usize> = (0..frame.len()).filter(|&q| frame[q] == 1).collect();
            if highlights.len() > 2 {
                return Err(Error::Hyperedge(format!("{loc:?} {f:?} lights {} checks", highlights.len())));
            }
            if highlights.is_empty() {
                if layout.flips_logical(basis, &frame) {
                    return Err(Error::Hyperedge(format!("{loc:?} {f:?} is an undetected logical")));
                }
                continue;
            }
            let window = matches!(loc, Location::DataWindow { .. });
            out.push(Template { highlights, flips, window });
        }
    }
    Ok(out)
}

struct Builder {
    n_checks: usize,
    layers: usize,
    edges: Vec<GraphEdge>,
    seen: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn vertex(&self, check: usize, layer: usize) -> usize {
        layer * self.n_checks + check
    }

    fn boundary(&self, layer: usize) -> usize {
        self.layers * self.n_checks + layer
    }

    fn add(&mut self, u: usize, v: usize, weight: u32, kind: EdgeKind, flips: Vec<usize>) {
        let key = (u.min(v), u.max(v));
        if self.seen.contains_key(&key) {
            return;
        }
        self.seen.insert(key, self.edges.len());
        self.edges.push(GraphEdge { u: key.0, v: key.1, weight, kind, flips });
    }
}

/// Builds the graph for `layers` rounds, or for `layers` collapsed sheets.
pub fn build_graph(layout: &CodeLayout, basis: Basis, layers: usize, collapsed: bool) -> Result<DecodingGraph> {
    if layers == 0 {
        return Err(Error::InvalidParameter("graph needs at least one layer".into()));
    }
    let tpl = templates(layout, basis)?;
    let n_checks = layout.detectors(basis).len();
    let mut b = Builder { n_checks, layers, edges: Vec::new(), seen: HashMap::new() };
    // window templates first so spatial edges carry single-qubit flips
    let mut ordered: Vec<&Template> = tpl.iter().filter(|t| t.window).collect();
    ordered.extend(tpl.iter().filter(|t| !t.window));
    for layer in 0..layers {
        for t in &ordered {
            if collapsed {
                match t.highlights.as_slice() {
                    [(c, _)] => {
                        let (u, v) = (b.vertex(*c, layer), b.boundary(layer));
                        b.add(u, v, 1, EdgeKind::Boundary, t.flips.clone());
                    }
                    [(c1, _), (c2, _)] if c1 != c2 => {
                        let (u, v) = (b.vertex(*c1, layer), b.vertex(*c2, layer));
                        b.add(u, v, 1, EdgeKind::Spatial, t.flips.clone());
                    }
                    _ => {}
                }
                continue;
            }
            let last = layer + 1 == layers;
            if last && !t.window {
                continue;
            }
            match t.highlights.as_slice() {
                [(c, dt)] => {
                    let (u, v) = (b.vertex(*c, layer + dt), b.boundary(layer + dt));
                    b.add(u, v, 1, EdgeKind::Boundary, t.flips.clone());
                }
                [(c1, t1), (c2, t2)] => {
                    let kind = if t1 == t2 {
                        EdgeKind::Spatial
                    } else if c1 == c2 {
                        EdgeKind::Vertical
                    } else {
                        EdgeKind::Diagonal
                    };
                    let (u, v) = (b.vertex(*c1, layer + t1), b.vertex(*c2, layer + t2));
                    b.add(u, v, 1, kind, t.flips.clone());
                }
                _ => unreachable!("templates hold one or two highlights"),
            }
        }
    }
    if collapsed {
        for layer in 0..layers.saturating_sub(1) {
            for c in 0..n_checks {
                let (u, v) = (b.vertex(c, layer), b.vertex(c, layer + 1));
                b.add(u, v, 1, EdgeKind::Vertical, Vec::new());
            }
        }
    }
    for layer in 0..layers.saturating_sub(1) {
        let (u, v) = (b.boundary(layer), b.boundary(layer + 1));
        b.add(u, v, 0, EdgeKind::BoundaryLink, Vec::new());
    }
    let n_vertices = layers * n_checks + layers;
    let mut adjacency = vec![Vec::new(); n_vertices];
    for (k, e) in b.edges.iter().enumerate() {
        adjacency[e.u].push((e.v, k));
        adjacency[e.v].push((e.u, k));
    }
    Ok(DecodingGraph { basis, n_checks, layers, collapsed, edges: b.edges, adjacency })
}

impl DecodingGraph {
    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        v >= self.layers * self.n_checks
    }

    pub fn vertex(&self, check: usize, layer: usize) -> usize {
        layer * self.n_checks + check
    }

    /// Highlighted vertices of a `[layer, check]` volume.
    pub fn highlights(&self, vol: &Array2<u8>) -> Result<Vec<usize>> {
        if vol.dim() != (self.layers, self.n_checks) {
            return Err(Error::ShapeMismatch {
                expected: format!("({}, {})", self.layers, self.n_checks),
                got: format!("{:?}", vol.dim()),
            });
        }
        Ok(vol.indexed_iter().filter(|(_, &b)| b == 1).map(|((l, c), _)| self.vertex(c, l)).collect())
    }

    /// 0-1 BFS from `src`: distances and the edge used to reach each vertex.
    pub fn shortest_paths(&self, src: usize) -> (Vec<u32>, Vec<usize>) {
        let n = self.n_vertices();
        let mut dist = vec![u32::MAX; n];
        let mut pred = vec![usize::MAX; n];
        let mut dq = VecDeque::new();
        dist[src] = 0;
        dq.push_back(src);
        while let Some(u) = dq.pop_front() {
            for &(v, k) in &self.adjacency[u] {
                let w = self.edges[k].weight;
                let nd = dist[u] + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = k;
                    if w == 0 {
                        dq.push_front(v);
                    } else {
                        dq.push_back(v);
                    }
                }
            }
        }
        (dist, pred)
    }

    /// Vertices touched an odd number of times by an edge set.
    pub fn syndrome_of(&self, edges: &[usize]) -> Vec<usize> {
        let mut odd = vec![false; self.n_vertices()];
        for &k in edges {
            odd[self.edges[k].u] ^= true;
            odd[self.edges[k].v] ^= true;
        }
        (0..self.n_vertices()).filter(|&v| odd[v] && !self.is_boundary(v)).collect()
    }

    /// Data flips of an edge set, as a dense 0/1 vector.
    pub fn flips_of(&self, edges: &[usize], n_data: usize) -> Vec<u8> {
        let mut out = vec![0u8; n_data];
        for &k in edges {
            for &q in &self.edges[k].flips {
                out[q] ^= 1;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;

    #[test]
    fn single_round_is_spatial_only() {
        let l = build_layout(3, 3).unwrap();
        let g = build_graph(&l, Basis::X, 1, false).unwrap();
        assert!(g.edges.iter().all(|e| matches!(e.kind, EdgeKind::Spatial | EdgeKind::Boundary)));
        // every single-qubit error has an edge with its endpoints
        for q in 0..9 {
            let mut err = vec![0u8; 9];
            err[q] = 1;
            let syn = l.syndrome(Basis::X, &err);
            let lit: Vec<usize> = (0..4).filter(|&c| syn[c] == 1).collect();
            assert!(g.edges.iter().any(|e| {
                let ends: Vec<usize> = [e.u, e.v].into_iter().filter(|&v| !g.is_boundary(v)).collect();
                ends == lit
            }));
        }
    }

    #[test]
    fn hooks_and_verticals_present() {
        let l = build_layout(5, 5).unwrap();
        for basis in [Basis::X, Basis::Z] {
            let g = build_graph(&l, basis, 4, false).unwrap();
            assert!(g.edges.iter().any(|e| e.kind == EdgeKind::Vertical));
            assert!(g.edges.iter().any(|e| e.kind == EdgeKind::Diagonal));
            assert!(g.edges.iter().filter(|e| e.kind != EdgeKind::BoundaryLink).all(|e| e.weight == 1));
        }
    }

    #[test]
    fn edge_flips_match_syndrome() {
        let l = build_layout(5, 3).unwrap();
        for basis in [Basis::X, Basis::Z] {
            let g = build_graph(&l, basis, 1, false).unwrap();
            for e in &g.edges {
                let mut err = vec![0u8; l.n_data()];
                for &q in &e.flips {
                    err[q] ^= 1;
                }
                let syn = l.syndrome(basis, &err);
                let lit: Vec<usize> = (0..syn.len()).filter(|&c| syn[c] == 1).collect();
                let mut ends: Vec<usize> = [e.u, e.v].into_iter().filter(|&v| !g.is_boundary(v)).collect();
                ends.sort();
                assert_eq!(lit, ends);
            }
        }
    }

    #[test]
    fn collapsed_shape() {
        let l = build_layout(3, 3).unwrap();
        let g = build_graph(&l, Basis::X, 3, true).unwrap();
        assert_eq!(g.n_vertices(), 3 * 4 + 3);
        assert_eq!(g.edges.iter().filter(|e| e.kind == EdgeKind::Vertical).count(), 2 * 4);
        assert!(g.edges.iter().all(|e| e.kind != EdgeKind::Diagonal));
    }
}
