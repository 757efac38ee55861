//! Reducing the syndrome-difference volume before global matching.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sheet lengths when `dm` rounds are grouped `d'` at a time; the last
/// sheet holds the remainder.
pub fn sheet_sizes(dm: usize, sheet: usize) -> Result<Vec<usize>> {
    if sheet == 0 || dm == 0 {
        return Err(Error::InvalidParameter(format!("sheet size {sheet} and rounds {dm} must be positive")));
    }
    let mut v = vec![sheet; dm / sheet];
    if dm % sheet != 0 {
        v.push(dm % sheet);
    }
    Ok(v)
}

/// XORs each sheet of consecutive difference rounds into one row.
pub fn syndrome_collapse(diff: &Array2<u8>, sheet: usize) -> Result<Array2<u8>> {
    let sizes = sheet_sizes(diff.nrows(), sheet)?;
    let mut out = Array2::<u8>::zeros((sizes.len(), diff.ncols()));
    for k in 0..diff.nrows() {
        let s = k / sheet;
        for j in 0..diff.ncols() {
            out[[s, j]] ^= diff[[k, j]];
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Sweep from the first round towards the last.
    Up,
    /// Sweep from the last round towards the first.
    Down,
}

/// Greedy single sweep removing vertically adjacent highlighted pairs in
/// one check's time series. A removed pair is skipped entirely.
pub fn cleanup_column(col: &mut [u8], dir: Direction) {
    let n = col.len();
    match dir {
        Direction::Up => {
            let mut m = 0;
            while m + 1 < n {
                if col[m] == 1 && col[m + 1] == 1 {
                    col[m] = 0;
                    col[m + 1] = 0;
                    m += 2;
                } else {
                    m += 1;
                }
            }
        }
        Direction::Down => {
            let mut m = n;
            while m >= 2 {
                if col[m - 1] == 1 && col[m - 2] == 1 {
                    col[m - 1] = 0;
                    col[m - 2] = 0;
                    m -= 2;
                } else {
                    m -= 1;
                }
            }
        }
    }
}

/// Applies the same sweep direction to every check.
pub fn vertical_cleanup(diff: &Array2<u8>, dir: Direction) -> Array2<u8> {
    let mut out = diff.clone();
    for j in 0..diff.ncols() {
        let mut col: Vec<u8> = diff.column(j).to_vec();
        cleanup_column(&mut col, dir);
        for (k, v) in col.into_iter().enumerate() {
            out[[k, j]] = v;
        }
    }
    out
}

/// Compares highlight counts above and below the middle round (1-based
/// round `ceil((dm+1)/2)` is excluded). More above sweeps up, more below
/// sweeps down, ties are broken by `rng`.
pub fn choose_cleanup_direction<R: Rng + ?Sized>(col: &[u8], rng: &mut R) -> Direction {
    let dm = col.len();
    let mid = dm.div_ceil(2) + usize::from(dm % 2 == 0); // 1-based
    let below = col[..mid.saturating_sub(1).min(dm)].iter().filter(|&&b| b == 1).count();
    let above = col[mid.min(dm)..].iter().filter(|&&b| b == 1).count();
    if above > below {
        Direction::Up
    } else if below > above {
        Direction::Down
    } else if rng.gen_bool(0.5) {
        Direction::Up
    } else {
        Direction::Down
    }
}

/// Per-check adaptive cleanup.
pub fn adaptive_cleanup<R: Rng + ?Sized>(diff: &Array2<u8>, rng: &mut R) -> Array2<u8> {
    let mut out = diff.clone();
    for j in 0..diff.ncols() {
        let mut col: Vec<u8> = diff.column(j).to_vec();
        let dir = choose_cleanup_direction(&col, rng);
        cleanup_column(&mut col, dir);
        for (k, v) in col.into_iter().enumerate() {
            out[[k, j]] = v;
        }
    }
    out
}

/// Smallest number of rounds for which `m` time-like chains, repeating
/// every two rounds, can fail an up-sweep: the first `dm > 4m - 5`.
pub fn min_rounds_for_timelike(m: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidParameter("need at least two time-like errors".into()));
    }
    Ok(4 * m - 4)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sparsifier {
    None,
    Collapse { sheet: usize },
    Cleanup { direction: Direction },
    AdaptiveCleanup,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sheets() {
        assert_eq!(sheet_sizes(13, 6).unwrap(), vec![6, 6, 1]);
        assert_eq!(sheet_sizes(12, 6).unwrap(), vec![6, 6]);
        assert!(sheet_sizes(5, 0).is_err());
    }

    #[test]
    fn triple_column() {
        let mut c = vec![1, 1, 1];
        cleanup_column(&mut c, Direction::Up);
        assert_eq!(c, vec![0, 0, 1]);
        let mut c = vec![1, 1, 1];
        cleanup_column(&mut c, Direction::Down);
        assert_eq!(c, vec![1, 0, 0]);
    }

    #[test]
    fn timelike_bound() {
        assert_eq!(min_rounds_for_timelike(3).unwrap(), 8);
        assert_eq!(min_rounds_for_timelike(2).unwrap(), 4);
        assert!(min_rounds_for_timelike(1).is_err());
    }

    #[test]
    fn direction_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // dm = 5, mid-round 3
        assert_eq!(choose_cleanup_direction(&[0, 0, 1, 1, 1], &mut rng), Direction::Up);
        assert_eq!(choose_cleanup_direction(&[1, 1, 1, 0, 0], &mut rng), Direction::Down);
        // dm = 4, mid-round 3
        assert_eq!(choose_cleanup_direction(&[1, 1, 0, 1], &mut rng), Direction::Down);
    }

    proptest! {
        #[test]
        fn collapse_telescopes(bits in proptest::collection::vec(0u8..2, 13 * 4), sheet in 1usize..14) {
            let raw = Array2::from_shape_vec((13, 4), bits).unwrap();
            let diff = crate::noise::time_diff2(&raw);
            let c = syndrome_collapse(&diff, sheet).unwrap();
            let sizes = sheet_sizes(13, sheet).unwrap();
            let mut end = 0;
            let mut prev_end: Option<usize> = None;
            for (s, len) in sizes.iter().enumerate() {
                end += len;
                for j in 0..4 {
                    let want = raw[[end - 1, j]] ^ prev_end.map(|p| raw[[p - 1, j]]).unwrap_or(0);
                    prop_assert_eq!(c[[s, j]], want);
                }
                prev_end = Some(end);
            }
        }

        #[test]
        fn cleanup_keeps_parity(bits in proptest::collection::vec(0u8..2, 9 * 3), up in any::<bool>()) {
            let diff = Array2::from_shape_vec((9, 3), bits).unwrap();
            let dir = if up { Direction::Up } else { Direction::Down };
            let out = vertical_cleanup(&diff, dir);
            for j in 0..3 {
                let a: u8 = diff.column(j).iter().fold(0, |x, y| x ^ y);
                let b: u8 = out.column(j).iter().fold(0, |x, y| x ^ y);
                prop_assert_eq!(a, b);
                let col: Vec<u8> = out.column(j).to_vec();
                prop_assert!(col.iter().zip(diff.column(j)).all(|(o, i)| o <= i));
                prop_assert!(col.windows(2).all(|w| !(w[0] == 1 && w[1] == 1)));
            }
        }
    }
}
