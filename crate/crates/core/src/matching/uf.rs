//! Union-Find decoder: grow odd clusters by half-edges until every cluster
//! is even or touches the boundary, then peel a spanning forest.

use std::collections::VecDeque;

use super::graph::{DecodingGraph, EdgeKind};
use super::mwpm::Correction;

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    odd: Vec<bool>,
    boundary: Vec<bool>,
    members: Vec<Vec<usize>>,
}

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.odd[ra] ^= self.odd[rb];
        self.boundary[ra] |= self.boundary[rb];
        let moved = std::mem::take(&mut self.members[rb]);
        self.members[ra].extend(moved);
    }
}

pub fn uf_decode(graph: &DecodingGraph, highlights: &[usize]) -> Correction {
    if highlights.is_empty() {
        return Correction::default();
    }
    let nb = graph.layers * graph.n_checks;
    let node = |v: usize| if graph.is_boundary(v) { nb } else { v };
    let n = nb + 1;
    // edges in merged-node form, skipping boundary links
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, e) in graph.edges.iter().enumerate() {
        if e.kind == EdgeKind::BoundaryLink {
            continue;
        }
        let (a, b) = (node(e.u), node(e.v));
        adj[a].push((b, k));
        adj[b].push((a, k));
    }
    let mut marked = vec![false; n];
    for &h in highlights {
        marked[h] ^= true;
    }
    let mut dsu = Dsu {
        parent: (0..n).collect(),
        size: vec![1; n],
        odd: marked.clone(),
        boundary: (0..n).map(|v| v == nb).collect(),
        members: (0..n).map(|v| vec![v]).collect(),
    };
    let mut support = vec![0u8; graph.edges.len()];
    loop {
        let mut active: Vec<usize> = Vec::new();
        for v in 0..n {
            let r = dsu.find(v);
            if r == v && dsu.odd[r] && !dsu.boundary[r] {
                active.push(r);
            }
        }
        if active.is_empty() {
            break;
        }
        let mut grown = Vec::new();
        for &r in &active {
            let members = dsu.members[r].clone();
            for v in members {
                for &(_, k) in &adj[v] {
                    if support[k] < 2 {
                        support[k] += 1;
                        if support[k] == 2 {
                            grown.push(k);
                        }
                    }
                }
            }
        }
        for k in grown {
            let e = &graph.edges[k];
            dsu.union(node(e.u), node(e.v));
        }
    }
    // peeling over the grown edges
    let mut in_tree = vec![false; n];
    let mut parent_edge = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::new();
    let mut roots: Vec<usize> = vec![nb];
    roots.extend(highlights.iter().copied());
    for root in roots {
        if in_tree[root] {
            continue;
        }
        in_tree[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            for &(v, k) in &adj[u] {
                if support[k] == 2 && !in_tree[v] {
                    in_tree[v] = true;
                    parent[v] = u;
                    parent_edge[v] = k;
                    q.push_back(v);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for &v in order.iter().rev() {
        if marked[v] && parent[v] != usize::MAX {
            edges.push(parent_edge[v]);
            marked[v] = false;
            let p = parent[v];
            marked[p] ^= true;
        }
    }
    let weight = edges.iter().map(|&k| graph.edges[k].weight as u64).sum();
    Correction::from_multiset(edges, weight)
}
