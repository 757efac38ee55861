//! Local rewriting of data-error patterns into a fixed representative of
//! their stabilizer coset. Every rewrite multiplies by one stabilizer of the
//! same Pauli type, so syndrome and logical class never change.

use crate::error::{Error, Result};
use crate::geometry::{Basis, CodeLayout, StabKind, Stabilizer, NE, NW, SE, SW};

fn corner_bits(s: &Stabilizer, e: &[u8]) -> [Option<u8>; 4] {
    let mut b = [None; 4];
    for k in 0..4 {
        b[k] = s.corners[k].map(|q| e[q] & 1);
    }
    b
}

fn multiply(s: &Stabilizer, e: &mut [u8]) {
    for q in s.support() {
        e[q] ^= 1;
    }
}

fn same_type(layout: &CodeLayout, basis: Basis) -> &[Stabilizer] {
    match basis {
        Basis::X => layout.stabilizers(StabKind::X),
        Basis::Z => layout.stabilizers(StabKind::Z),
    }
}

/// Removes weight-4 and weight-2 stabilizer patterns and turns weight-3
/// patterns into the complementary single qubit. Returns true on change.
pub fn weight_reduction(layout: &CodeLayout, basis: Basis, e: &mut [u8]) -> bool {
    let mut changed = false;
    for s in same_type(layout, basis) {
        let w = s.support().iter().filter(|&&q| e[q] & 1 == 1).count();
        let full = s.weight();
        if w == full || (full == 4 && w == 3) {
            multiply(s, e);
            changed = true;
        }
    }
    changed
}

fn pattern(bits: &[Option<u8>; 4], set: &[usize]) -> bool {
    (0..4).all(|k| match bits[k] {
        Some(b) => (b == 1) == set.contains(&k),
        None => !set.contains(&k),
    })
}

/// Moves weight-2 (bulk) and weight-1 (boundary) patterns to their preferred
/// position inside a plaquette. Returns true on change.
pub fn fix_equivalence(layout: &CodeLayout, basis: Basis, e: &mut [u8]) -> bool {
    let mut changed = false;
    for s in same_type(layout, basis) {
        let bits = corner_bits(s, e);
        let hit = if s.weight() == 4 {
            match basis {
                Basis::X => {
                    pattern(&bits, &[SW, SE]) || pattern(&bits, &[NW, SW]) || pattern(&bits, &[NW, SE])
                }
                Basis::Z => {
                    pattern(&bits, &[NW, SW]) || pattern(&bits, &[NW, NE]) || pattern(&bits, &[NE, SW])
                }
            }
        } else {
            let (r, c) = s.anchor;
            match basis {
                // top edge: right qubit goes left; bottom edge: left goes right
                Basis::X if r == -1 => pattern(&bits, &[SE]),
                Basis::X => pattern(&bits, &[NW]),
                // right edge: bottom goes up; left edge: top goes down
                Basis::Z if c == -1 => pattern(&bits, &[NE]),
                Basis::Z => pattern(&bits, &[SW]),
            }
        };
        if hit {
            multiply(s, e);
            changed = true;
        }
    }
    changed
}

/// Iterates both passes to a fixed point.
pub fn canonicalize(layout: &CodeLayout, basis: Basis, error: &[u8]) -> Result<Vec<u8>> {
    let mut e: Vec<u8> = error.iter().map(|b| b & 1).collect();
    let cap = 4 * layout.dx * layout.dz;
    for _ in 0..cap {
        let a = weight_reduction(layout, basis, &mut e);
        let b = fix_equivalence(layout, basis, &mut e);
        if !a && !b {
            return Ok(e);
        }
    }
    Err(Error::NoConvergence(cap))
}

/// GF(2) row-space test: is `a ⊕ b` a product of same-type stabilizers?
pub fn same_coset(layout: &CodeLayout, basis: Basis, a: &[u8], b: &[u8]) -> bool {
    let n = layout.n_data();
    let words = n.div_ceil(64);
    let pack = |v: &dyn Fn(usize) -> bool| {
        let mut w = vec![0u64; words];
        for q in 0..n {
            if v(q) {
                w[q / 64] |= 1 << (q % 64);
            }
        }
        w
    };
    let mut rows: Vec<Vec<u64>> = same_type(layout, basis)
        .iter()
        .map(|s| {
            let sup = s.support();
            pack(&|q| sup.contains(&q))
        })
        .collect();
    let mut target = pack(&|q| (a[q] ^ b[q]) & 1 == 1);
    let mut rank = 0;
    for col in 0..n {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[w] & bit != 0 {
                row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
            }
        }
        if target[w] & bit != 0 {
            target.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
        }
        rank += 1;
    }
    target.iter().all(|&x| x == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_layout;

    fn all_patterns(n: usize) -> impl Iterator<Item = Vec<u8>> {
        (0u32..(1 << n)).map(move |m| (0..n).map(|q| ((m >> q) & 1) as u8).collect())
    }

    #[test]
    fn exhaustive_d3() {
        let l = build_layout(3, 3).unwrap();
        for basis in [Basis::X, Basis::Z] {
            for e in all_patterns(9) {
                let c = canonicalize(&l, basis, &e).unwrap();
                assert_eq!(l.syndrome(basis, &e), l.syndrome(basis, &c));
                assert_eq!(l.flips_logical(basis, &e), l.flips_logical(basis, &c));
                assert!(same_coset(&l, basis, &e, &c));
                assert_eq!(canonicalize(&l, basis, &c).unwrap(), c);
            }
        }
    }

    #[test]
    fn single_plaquette_rules() {
        let l = build_layout(5, 5).unwrap();
        // X rules on bulk X check with top-left (0,0)
        let q = |r, c| l.qubit(r, c);
        let mut e = vec![0u8; 25];
        e[q(1, 0)] = 1;
        e[q(1, 1)] = 1;
        let c = canonicalize(&l, Basis::X, &e).unwrap();
        let mut want = vec![0u8; 25];
        want[q(0, 0)] = 1;
        want[q(0, 1)] = 1;
        assert_eq!(c, want);
        // weight-3 goes to the complementary corner
        let mut e = vec![0u8; 25];
        for &(r, cc) in &[(0, 0), (0, 1), (1, 0)] {
            e[q(r, cc)] = 1;
        }
        let c = canonicalize(&l, Basis::X, &e).unwrap();
        let mut want = vec![0u8; 25];
        want[q(1, 1)] = 1;
        assert_eq!(c, want);
    }

    #[test]
    fn coset_oracle_rejects_logical() {
        let l = build_layout(3, 3).unwrap();
        let zero = vec![0u8; 9];
        let mut lz = vec![0u8; 9];
        for &q in &l.logical_z {
            lz[q] = 1;
        }
        assert!(!same_coset(&l, Basis::Z, &zero, &lz));
        let mut s = vec![0u8; 9];
        for q in l.z_stabilizers[1].support() {
            s[q] = 1;
        }
        assert!(same_coset(&l, Basis::Z, &zero, &s));
    }
}
