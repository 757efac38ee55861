//! Maximum-weight general matching by Edmonds' blossom algorithm with
//! primal-dual updates, O(n^3). Integer weights only; callers should pass
//! even weights so every dual update stays integral.

const NONE: isize = -1;

struct Matcher<'a> {
    edges: &'a [(usize, usize, i64)],
    nvertex: usize,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<isize>,
    label: Vec<u8>,
    labelend: Vec<isize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<isize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<isize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<isize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

fn wrap(j: isize, len: usize) -> usize {
    j.rem_euclid(len as isize) as usize
}

impl<'a> Matcher<'a> {
    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nvertex {
                out.push(t);
            } else {
                for &c in self.blossomchilds[t].iter().rev() {
                    stack.push(c);
                }
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: isize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let l = self.leaves(b);
            self.queue.extend(l);
        } else if t == 2 {
            let base = self.blossombase[b] as usize;
            let mb = self.mate[base];
            debug_assert!(mb >= 0);
            let e = self.endpoint[mb as usize];
            self.assign_label(e, 1, mb ^ 1);
        }
    }

    fn scan_blossom(&mut self, mut v: isize, mut w: isize) -> isize {
        let mut path = Vec::new();
        let mut base = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v as usize];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b] as usize] as isize;
                b = self.inblossom[v as usize];
                v = self.endpoint[self.labelend[b] as usize] as isize;
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("free blossom slot");
        self.blossombase[b] = base as isize;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b as isize;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b as isize;
            path.push(bv);
            endps.push(self.labelend[bv] as usize);
            v = self.endpoint[self.labelend[bv] as usize];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b as isize;
            path.push(bw);
            endps.push((self.labelend[bw] ^ 1) as usize);
            w = self.endpoint[self.labelend[bw] as usize];
            bw = self.inblossom[w];
        }
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;
        for v in self.leaves(b) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto = vec![NONE; 2 * self.nvertex];
        for &bv in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                None => self.leaves(bv).iter().map(|&v| self.neighbend[v].iter().map(|p| p / 2).collect()).collect(),
                Some(l) => vec![l],
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj] as usize))
                    {
                        bestedgeto[bj] = k as isize;
                    }
                }
            }
            self.blossombestedges[bv] = None;
            self.bestedge[bv] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).map(|k| k as usize).collect();
        self.bestedge[b] = NONE;
        for &k in &list {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b] as usize) {
                self.bestedge[b] = k as isize;
            }
        }
        self.blossombestedges[b] = Some(list);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len();
            let entrychild = self.inblossom[self.endpoint[(self.labelend[b] ^ 1) as usize]];
            let mut j = childs.iter().position(|&c| c == entrychild).expect("entry child") as isize;
            let (jstep, endptrick): (isize, isize) = if j & 1 != 0 {
                j -= len as isize;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            let endps = self.blossomendps[b].clone();
            while j != 0 {
                let e1 = self.endpoint[(p ^ 1) as usize];
                self.label[e1] = 0;
                let q = endps[wrap(j - endptrick, len)] as isize;
                let e2 = self.endpoint[((q ^ endptrick) ^ 1) as usize];
                self.label[e2] = 0;
                self.assign_label(e1, 2, p);
                self.allowedge[(q / 2) as usize] = true;
                j += jstep;
                p = endps[wrap(j - endptrick, len)] as isize ^ endptrick;
                self.allowedge[(p / 2) as usize] = true;
                j += jstep;
            }
            let bv = childs[wrap(j, len)];
            let e = self.endpoint[(p ^ 1) as usize];
            self.label[e] = 2;
            self.label[bv] = 2;
            self.labelend[e] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[wrap(j, len)] != entrychild {
                let bv = childs[wrap(j, len)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let found = self.leaves(bv).into_iter().find(|&v| self.label[v] != 0);
                if let Some(v) = found {
                    self.label[v] = 0;
                    let mb = self.mate[self.blossombase[bv] as usize];
                    let e = self.endpoint[mb as usize];
                    self.label[e] = 0;
                    let le = self.labelend[v];
                    self.assign_label(v, 2, le);
                }
                j += jstep;
            }
        }
        self.label[b] = u8::MAX;
        self.labelend[b] = NONE;
        self.blossomchilds[b] = Vec::new();
        self.blossomendps[b] = Vec::new();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b as isize {
            t = self.blossomparent[t] as usize;
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len();
        let i = self.blossomchilds[b].iter().position(|&c| c == t).expect("child");
        let mut j = i as isize;
        let (jstep, endptrick): (isize, isize) = if i & 1 != 0 {
            j -= len as isize;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][wrap(j, len)];
            let p = self.blossomendps[b][wrap(j - endptrick, len)] as isize ^ endptrick;
            if t >= self.nvertex {
                let e = self.endpoint[p as usize];
                self.augment_blossom(t, e);
            }
            j += jstep;
            let t = self.blossomchilds[b][wrap(j, len)];
            if t >= self.nvertex {
                let e = self.endpoint[(p ^ 1) as usize];
                self.augment_blossom(t, e);
            }
            let (a, c) = (self.endpoint[p as usize], self.endpoint[(p ^ 1) as usize]);
            self.mate[a] = p ^ 1;
            self.mate[c] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v as isize);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p as isize;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs] as usize];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt] as usize];
                let j = self.endpoint[(self.labelend[bt] ^ 1) as usize];
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = (self.labelend[bt] ^ 1) as usize;
            }
        }
    }
}

/// Returns `mate[v]` (or `None`) for a maximum-weight matching. With
/// `max_cardinality` the matching is maximum-weight among those of maximum
/// cardinality.
pub fn max_weight_matching(edges: &[(usize, usize, i64)], max_cardinality: bool) -> Vec<Option<usize>> {
    if edges.is_empty() {
        return Vec::new();
    }
    let nedge = edges.len();
    let nvertex = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
    let endpoint: Vec<usize> = (0..2 * nedge).map(|p| if p % 2 == 0 { edges[p / 2].0 } else { edges[p / 2].1 }).collect();
    let mut neighbend = vec![Vec::new(); nvertex];
    for (k, &(i, j, _)) in edges.iter().enumerate() {
        neighbend[i].push(2 * k + 1);
        neighbend[j].push(2 * k);
    }
    let mut m = Matcher {
        edges,
        nvertex,
        endpoint,
        neighbend,
        mate: vec![NONE; nvertex],
        label: vec![0; 2 * nvertex],
        labelend: vec![NONE; 2 * nvertex],
        inblossom: (0..nvertex).collect(),
        blossomparent: vec![NONE; 2 * nvertex],
        blossomchilds: vec![Vec::new(); 2 * nvertex],
        blossombase: (0..nvertex as isize).chain(std::iter::repeat(NONE).take(nvertex)).collect(),
        blossomendps: vec![Vec::new(); 2 * nvertex],
        bestedge: vec![NONE; 2 * nvertex],
        blossombestedges: vec![None; 2 * nvertex],
        unusedblossoms: (nvertex..2 * nvertex).collect(),
        dualvar: std::iter::repeat(maxweight).take(nvertex).chain(std::iter::repeat(0).take(nvertex)).collect(),
        allowedge: vec![false; nedge],
        queue: Vec::new(),
    };

    for _ in 0..nvertex {
        m.label.iter_mut().for_each(|l| *l = 0);
        m.bestedge.iter_mut().for_each(|b| *b = NONE);
        for b in nvertex..2 * nvertex {
            m.blossombestedges[b] = None;
        }
        m.allowedge.iter_mut().for_each(|a| *a = false);
        m.queue.clear();
        for v in 0..nvertex {
            if m.mate[v] == NONE && m.label[m.inblossom[v]] == 0 {
                m.assign_label(v, 1, NONE);
            }
        }
        let mut augmented = false;
        loop {
            while !augmented {
                let Some(v) = m.queue.pop() else { break };
                let nb = m.neighbend[v].clone();
                for p in nb {
                    let k = p / 2;
                    let w = m.endpoint[p];
                    if m.inblossom[v] == m.inblossom[w] {
                        continue;
                    }
                    let mut kslack = 0;
                    if !m.allowedge[k] {
                        kslack = m.slack(k);
                        if kslack <= 0 {
                            m.allowedge[k] = true;
                        }
                    }
                    if m.allowedge[k] {
                        if m.label[m.inblossom[w]] == 0 {
                            m.assign_label(w, 2, (p ^ 1) as isize);
                        } else if m.label[m.inblossom[w]] == 1 {
                            let base = m.scan_blossom(v as isize, w as isize);
                            if base >= 0 {
                                m.add_blossom(base as usize, k);
                            } else {
                                m.augment_matching(k);
                                augmented = true;
                                break;
                            }
                        } else if m.label[w] == 0 {
                            m.label[w] = 2;
                            m.labelend[w] = (p ^ 1) as isize;
                        }
                    } else if m.label[m.inblossom[w]] == 1 {
                        let b = m.inblossom[v];
                        if m.bestedge[b] == NONE || kslack < m.slack(m.bestedge[b] as usize) {
                            m.bestedge[b] = k as isize;
                        }
                    } else if m.label[w] == 0 && (m.bestedge[w] == NONE || kslack < m.slack(m.bestedge[w] as usize)) {
                        m.bestedge[w] = k as isize;
                    }
                }
            }
            if augmented {
                break;
            }
            let mut deltatype = -1i32;
            let mut delta = 0i64;
            let mut deltaedge = 0usize;
            let mut deltablossom = 0usize;
            if !max_cardinality {
                deltatype = 1;
                delta = *m.dualvar[..nvertex].iter().min().unwrap();
            }
            for v in 0..nvertex {
                if m.label[m.inblossom[v]] == 0 && m.bestedge[v] != NONE {
                    let d = m.slack(m.bestedge[v] as usize);
                    if deltatype == -1 || d < delta {
                        delta = d;
                        deltatype = 2;
                        deltaedge = m.bestedge[v] as usize;
                    }
                }
            }
            for b in 0..2 * nvertex {
                if m.blossomparent[b] == NONE && m.label[b] == 1 && m.bestedge[b] != NONE {
                    let kslack = m.slack(m.bestedge[b] as usize);
                    debug_assert_eq!(kslack % 2, 0);
                    let d = kslack / 2;
                    if deltatype == -1 || d < delta {
                        delta = d;
                        deltatype = 3;
                        deltaedge = m.bestedge[b] as usize;
                    }
                }
            }
            for b in nvertex..2 * nvertex {
                if m.blossombase[b] >= 0
                    && m.blossomparent[b] == NONE
                    && m.label[b] == 2
                    && (deltatype == -1 || m.dualvar[b] < delta)
                {
                    delta = m.dualvar[b];
                    deltatype = 4;
                    deltablossom = b;
                }
            }
            if deltatype == -1 {
                deltatype = 1;
                delta = (*m.dualvar[..nvertex].iter().min().unwrap()).max(0);
            }
            for v in 0..nvertex {
                match m.label[m.inblossom[v]] {
                    1 => m.dualvar[v] -= delta,
                    2 => m.dualvar[v] += delta,
                    _ => {}
                }
            }
            for b in nvertex..2 * nvertex {
                if m.blossombase[b] >= 0 && m.blossomparent[b] == NONE {
                    match m.label[b] {
                        1 => m.dualvar[b] += delta,
                        2 => m.dualvar[b] -= delta,
                        _ => {}
                    }
                }
            }
            match deltatype {
                1 => break,
                2 => {
                    m.allowedge[deltaedge] = true;
                    let (mut i, mut j, _) = edges[deltaedge];
                    if m.label[m.inblossom[i]] == 0 {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = j;
                    m.queue.push(i);
                }
                3 => {
                    m.allowedge[deltaedge] = true;
                    let (i, _, _) = edges[deltaedge];
                    m.queue.push(i);
                }
                _ => m.expand_blossom(deltablossom, false),
            }
        }
        if !augmented {
            break;
        }
        for b in nvertex..2 * nvertex {
            if m.blossomparent[b] == NONE && m.blossombase[b] >= 0 && m.label[b] == 1 && m.dualvar[b] == 0 {
                m.expand_blossom(b, true);
            }
        }
    }
    (0..nvertex)
        .map(|v| if m.mate[v] >= 0 { Some(m.endpoint[m.mate[v] as usize]) } else { None })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(n: usize, edges: &[(usize, usize, i64)], maxcard: bool) -> (usize, i64) {
        // best (cardinality, weight) over all matchings
        fn rec(k: usize, used: &mut Vec<bool>, edges: &[(usize, usize, i64)], card: usize, w: i64, best: &mut (usize, i64), maxcard: bool) {
            if k == edges.len() {
                let better = if maxcard { (card, w) > *best } else { w > best.1 };
                if better {
                    *best = (card, w);
                }
                return;
            }
            rec(k + 1, used, edges, card, w, best, maxcard);
            let (i, j, wt) = edges[k];
            if !used[i] && !used[j] {
                used[i] = true;
                used[j] = true;
                rec(k + 1, used, edges, card + 1, w + wt, best, maxcard);
                used[i] = false;
                used[j] = false;
            }
        }
        let mut best = (0, 0);
        rec(0, &mut vec![false; n], edges, 0, 0, &mut best, maxcard);
        best
    }

    fn score(mate: &[Option<usize>], edges: &[(usize, usize, i64)]) -> (usize, i64) {
        let mut card = 0;
        let mut w = 0;
        for &(i, j, wt) in edges {
            if mate.get(i).copied().flatten() == Some(j) {
                card += 1;
                w += wt;
            }
        }
        for (v, m) in mate.iter().enumerate() {
            if let Some(u) = m {
                assert_eq!(mate[*u], Some(v));
            }
        }
        (card, w)
    }

    #[test]
    fn known_cases() {
        assert_eq!(max_weight_matching(&[(0, 1, 1)], false), vec![Some(1), Some(0)]);
        assert_eq!(
            max_weight_matching(&[(1, 2, 10), (2, 3, 11)], false),
            vec![None, None, Some(3), Some(2)]
        );
        assert_eq!(
            max_weight_matching(&[(1, 2, 5), (2, 3, 11), (3, 4, 5)], true),
            vec![None, Some(2), Some(1), Some(4), Some(3)]
        );
        // blossom with augmentation through it
        assert_eq!(
            max_weight_matching(&[(1, 2, 8), (1, 3, 9), (2, 3, 10), (3, 4, 7)], false),
            vec![None, Some(2), Some(1), Some(4), Some(3)]
        );
        // nested S-blossom, relabeled as T
        assert_eq!(
            max_weight_matching(
                &[(1, 2, 9), (1, 3, 9), (2, 3, 10), (2, 4, 8), (3, 5, 8), (4, 5, 10), (5, 6, 6)],
                false
            ),
            vec![None, Some(3), Some(4), Some(1), Some(2), Some(6), Some(5)]
        );
        // create nested blossom, augment, expand recursively
        assert_eq!(
            max_weight_matching(
                &[(1, 2, 40), (1, 3, 40), (2, 3, 60), (2, 4, 55), (3, 5, 55), (4, 5, 50), (1, 8, 15), (5, 7, 30), (7, 6, 10), (8, 10, 10), (4, 9, 30)],
                false
            ),
            vec![None, Some(2), Some(1), Some(5), Some(9), Some(3), Some(7), Some(6), Some(10), Some(4), Some(8)]
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn matches_brute_force(
            n in 2usize..9,
            raw in proptest::collection::vec((0usize..9, 0usize..9, 0i64..20), 1..14),
            maxcard in any::<bool>(),
        ) {
            let mut seen = std::collections::HashSet::new();
            let edges: Vec<(usize, usize, i64)> = raw
                .into_iter()
                .filter(|&(i, j, _)| i < n && j < n && i != j)
                .filter(|&(i, j, _)| seen.insert((i.min(j), i.max(j))))
                .map(|(i, j, w)| (i, j, 2 * w))
                .collect();
            prop_assume!(!edges.is_empty());
            let mate = max_weight_matching(&edges, maxcard);
            let got = score(&mate, &edges);
            let want = brute(n, &edges, maxcard);
            if maxcard {
                prop_assert_eq!(got, want);
            } else {
                prop_assert_eq!(got.1, want.1);
            }
        }
    }
}
