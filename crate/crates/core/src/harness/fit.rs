//! Least-squares fit of `p_L = u · d · dm · (b·p)^((d-1)/2)` in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub d: usize,
    pub dm: usize,
    pub p: f64,
    pub p_l: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub u: f64,
    pub b: f64,
    /// Root-mean-square residual of the log-space fit.
    pub rms_log_residual: f64,
    pub points_used: usize,
}

pub fn eval_polynomial(u: f64, b: f64, d: usize, dm: usize, p: f64) -> f64 {
    u * d as f64 * dm as f64 * (b * p).powf((d as f64 - 1.0) / 2.0)
}

/// Points with zero observed failures are skipped; at least two distinct
/// distances must remain.
pub fn fit_polynomial(points: &[FitPoint]) -> Result<PolyFit> {
    let usable: Vec<&FitPoint> = points.iter().filter(|q| q.p_l > 0.0 && q.p > 0.0).collect();
    let mut ds: Vec<usize> = usable.iter().map(|q| q.d).collect();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 2 {
        return Err(Error::Fit(format!("need at least two distinct distances with failures, got {}", ds.len())));
    }
    // y = ln u + x ln b, x = (d-1)/2
    let xs: Vec<f64> = usable.iter().map(|q| (q.d as f64 - 1.0) / 2.0).collect();
    let ys: Vec<f64> = usable
        .iter()
        .zip(&xs)
        .map(|(q, x)| q.p_l.ln() - (q.d as f64 * q.dm as f64).ln() - x * q.p.ln())
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PolyFit { u: intercept.exp(), b: slope.exp(), rms_log_residual: (rss / n).sqrt(), points_used: usable.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_coefficients() {
        let (u, b) = (0.000260, 143.084);
        let mut pts = Vec::new();
        for d in [3, 5, 7, 9] {
            for p in [1e-4, 5e-4, 1e-3, 3e-3] {
                pts.push(FitPoint { d, dm: d, p, p_l: eval_polynomial(u, b, d, d, p) });
            }
        }
        let f = fit_polynomial(&pts).unwrap();
        assert!((f.u / u - 1.0).abs() < 1e-9);
        assert!((f.b / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_distance_rejected() {
        let pts = vec![FitPoint { d: 3, dm: 3, p: 1e-3, p_l: 1e-4 }, FitPoint { d: 3, dm: 3, p: 2e-3, p_l: 4e-4 }];
        assert!(fit_polynomial(&pts).is_err());
    }
}
