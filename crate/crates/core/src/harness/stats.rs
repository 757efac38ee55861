/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_values() {
        // k = 10, n = 100
        let (lo, hi) = wilson(10, 100, Z95);
        assert!((lo - 0.055_229_1).abs() < 1e-6, "{lo}");
        assert!((hi - 0.174_366_6).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson(0, 50, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (50.0 + Z95 * Z95)).abs() < 1e-12, "{hi}");
    }

    #[test]
    fn coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &p in &[0.01, 0.1, 0.4] {
            let n = 400;
            let mut hit = 0;
            let reps = 2000;
            for _ in 0..reps {
                let k = (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64;
                let (lo, hi) = wilson(k, n as u64, Z95);
                if lo <= p && p <= hi {
                    hit += 1;
                }
            }
            assert!(hit as f64 / reps as f64 >= 0.93, "p={p} coverage {}", hit as f64 / reps as f64);
        }
    }
}
