//! Exhaustive minimum-weight matching for small highlight sets, using
//! Floyd-Warshall distances. Test oracle for the blossom path.

use super::graph::DecodingGraph;

pub fn all_pairs(graph: &DecodingGraph) -> Vec<Vec<u64>> {
    let n = graph.n_vertices();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for e in &graph.edges {
        let w = e.weight as u64;
        if w < d[e.u][e.v] {
            d[e.u][e.v] = w;
            d[e.v][e.u] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == inf {
                continue;
            }
            for j in 0..n {
                let c = d[i][k] + d[k][j];
                if c < d[i][j] {
                    d[i][j] = c;
                }
            }
        }
    }
    d
}

/// Minimum total distance over all pairings where each highlight either
/// pairs with another highlight or with the boundary.
pub fn brute_force_weight(graph: &DecodingGraph, dist: &[Vec<u64>], highlights: &[usize]) -> u64 {
    let bd: Vec<u64> = highlights
        .iter()
        .map(|&h| (0..graph.n_vertices()).filter(|&v| graph.is_boundary(v)).map(|v| dist[h][v]).min().unwrap_or(u64::MAX / 4))
        .collect();
    fn rec(i: usize, used: &mut Vec<bool>, h: &[usize], bd: &[u64], dist: &[Vec<u64>]) -> u64 {
        if i == h.len() {
            return 0;
        }
        if used[i] {
            return rec(i + 1, used, h, bd, dist);
        }
        used[i] = true;
        let mut best = bd[i] + rec(i + 1, used, h, bd, dist);
        for j in i + 1..h.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(dist[h[i]][h[j]] + rec(i + 1, used, h, bd, dist));
                used[j] = false;
            }
        }
        used[i] = false;
        best
    }
    rec(0, &mut vec![false; highlights.len()], highlights, &bd, dist)
}
