//! Buffer-time models for decoding under inbound latency and finite
//! throughput, sliding-window variants, and the code distance needed for a
//! given number of measurement rounds.
//!
//! All times are in seconds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Buffer times beyond this are reported as divergent.
pub const DIVERGENCE_LIMIT_S: f64 = 1.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyConfig {
    /// Duration of one syndrome round.
    pub t_s: f64,
    /// Inbound latency.
    pub t_l: f64,
    /// Decode seconds per round, `T_DEC(r) = c r`.
    pub c: f64,
    pub r1: usize,
    pub r2: usize,
}

impl LatencyConfig {
    /// Values used for the reference buffer-time curves, with `c = 1 µs`.
    pub fn reference() -> LatencyConfig {
        LatencyConfig { t_s: 1.4e-6, t_l: 20e-6, c: 1e-6, r1: 16, r2: 17 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.t_s) || !ok(self.t_l) || !ok(self.c) || self.r1 + self.r2 == 0 {
            return Err(Error::InvalidParameter(format!("latency parameters must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.r1 + self.r2
    }

    pub fn t_dec(&self, r: f64) -> f64 {
        self.c * r
    }
}

/// Decode time as a function of the number of rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeTime {
    Linear { c: f64 },
    /// `Σ coeffs[k] r^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl DecodeTime {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            DecodeTime::Linear { c } => c * r,
            DecodeTime::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, a| acc * r + a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    /// Whole syndrome rounds: `n = ceil(T / T_s)`.
    Exact,
    /// `n = T / T_s`, the relaxation behind the closed form.
    Continuous,
}

fn guard(t: f64, j: usize) -> Result<f64> {
    if !t.is_finite() || t > DIVERGENCE_LIMIT_S {
        return Err(Error::Diverged(format!("buffer {j} exceeds {DIVERGENCE_LIMIT_S} s")));
    }
    Ok(t)
}

/// Buffer times `T^{b_1} .. T^{b_jmax}` from the recursion.
pub fn buffer_times(cfg: &LatencyConfig, jmax: usize, mode: RoundingMode) -> Result<Vec<f64>> {
    cfg.validate()?;
    if jmax == 0 {
        return Err(Error::InvalidParameter("j must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(jmax);
    let mut t = guard(cfg.t_dec(cfg.rounds() as f64) + cfg.t_l, 1)?;
    out.push(t);
    for j in 2..=jmax {
        let n = match mode {
            // tiny tolerance so that exact multiples of T_s do not round up
            RoundingMode::Exact => (t / cfg.t_s * (1.0 - 1e-12)).ceil(),
            RoundingMode::Continuous => t / cfg.t_s,
        };
        t = guard(cfg.t_dec(n) + cfg.t_l, j)?;
        out.push(t);
    }
    Ok(out)
}

pub fn buffer_time_recursive(cfg: &LatencyConfig, j: usize, mode: RoundingMode) -> Result<f64> {
    Ok(*buffer_times(cfg, j, mode)?.last().expect("j >= 1"))
}

/// `c^j r / T_s^(j-1) + T_l (a^j - 1)/(a - 1)` with `a = c / T_s`;
/// at `a = 1` the limit `c r + j T_l`.
pub fn buffer_time_closed_form(cfg: &LatencyConfig, j: usize) -> Result<f64> {
    cfg.validate()?;
    if j == 0 {
        return Err(Error::InvalidParameter("j must be >= 1".into()));
    }
    let r = cfg.rounds() as f64;
    let a = cfg.c / cfg.t_s;
    let jf = j as f64;
    let first = cfg.c * r * a.powf(jf - 1.0);
    let geom = if (a - 1.0).abs() < 1e-9 {
        // series of (a^j - 1)/(a - 1) around a = 1
        let e = a - 1.0;
        jf + jf * (jf - 1.0) / 2.0 * e + jf * (jf - 1.0) * (jf - 2.0) / 6.0 * e * e
    } else {
        (a.powf(jf) - 1.0) / (a - 1.0)
    };
    Ok(first + cfg.t_l * geom)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    First,
    /// Decoding of the previous window outlasts this window's rounds.
    Slow,
    /// The decoder idles waiting for this window's syndromes.
    Fast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub sizes: Vec<usize>,
}

impl WindowPlan {
    pub fn validate(&self, total_rounds: usize) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::InvalidParameter("windows must be non-empty".into()));
        }
        let s: usize = self.sizes.iter().sum();
        if s != total_rounds {
            return Err(Error::InvalidParameter(format!("window sizes sum to {s}, expected {total_rounds}")));
        }
        Ok(())
    }

    /// Fast when `r_j T_s > T_DEC(r_{j-1})`.
    pub fn regimes(&self, t_s: f64, dec: &DecodeTime) -> Vec<Regime> {
        self.sizes
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                if j == 0 {
                    Regime::First
                } else if r as f64 * t_s > dec.eval(self.sizes[j - 1] as f64) {
                    Regime::Fast
                } else {
                    Regime::Slow
                }
            })
            .collect()
    }
}

/// Window-by-window accumulation: the first window costs `T_l + T_DEC(r_1)`,
/// a slow window `T_DEC(r_j)`, a fast one additionally waits the gap
/// `r_j T_s - T_DEC(r_{j-1})`.
pub fn sliding_window_stepwise(cfg: &LatencyConfig, plan: &WindowPlan, dec: &DecodeTime) -> Result<f64> {
    cfg.validate()?;
    plan.validate(cfg.rounds())?;
    let regimes = plan.regimes(cfg.t_s, dec);
    let mut t = 0.0;
    for (j, (&r, reg)) in plan.sizes.iter().zip(&regimes).enumerate() {
        let rd = r as f64;
        t += match reg {
            Regime::First => cfg.t_l + dec.eval(rd),
            Regime::Slow => dec.eval(rd),
            Regime::Fast => dec.eval(rd) + rd * cfg.t_s - dec.eval(plan.sizes[j - 1] as f64),
        };
    }
    Ok(t)
}

/// First buffer time under sliding-window decoding. Uniformly slow plans give
/// `T_l + Σ T_DEC(r_i)`, uniformly fast ones `T_l + Σ_{i≥2} r_i T_s`;
/// mixed plans are accumulated window by window.
pub fn sliding_window_buffer(cfg: &LatencyConfig, plan: &WindowPlan, dec: &DecodeTime) -> Result<f64> {
    cfg.validate()?;
    plan.validate(cfg.rounds())?;
    let regimes = plan.regimes(cfg.t_s, dec);
    let rest = &regimes[1..];
    if rest.iter().all(|r| *r == Regime::Slow) {
        return Ok(cfg.t_l + plan.sizes.iter().map(|&r| dec.eval(r as f64)).sum::<f64>());
    }
    if rest.iter().all(|r| *r == Regime::Fast) {
        return Ok(cfg.t_l + plan.sizes[1..].iter().map(|&r| r as f64 * cfg.t_s).sum::<f64>());
    }
    sliding_window_stepwise(cfg, plan, dec)
}

const LAMBERT_TOL: f64 = 1e-12;
const LAMBERT_MAX_ITER: usize = 100;
const INV_E: f64 = 0.367_879_441_171_442_33;

fn halley(x: f64, mut w: f64) -> Result<f64> {
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            return Ok(w);
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= LAMBERT_TOL * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence(LAMBERT_MAX_ITER))
}

fn branch_point_guess(x: f64, sign: f64) -> f64 {
    let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt() * sign;
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

/// Principal branch `W_0`, defined for `x >= -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - 1e-15 {
        return Err(Error::InvalidParameter(format!("W0 undefined at {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    let guess = if x < -0.25 {
        branch_point_guess(x, 1.0)
    } else if x < 3.0 {
        x.ln_1p() * (1.0 - x.ln_1p() / (2.0 + x.ln_1p()))
    } else {
        let l1 = x.ln();
        l1 - l1.ln()
    };
    halley(x, guess)
}

/// Lower branch `W_{-1}`, defined for `-1/e <= x < 0`, with `W_{-1}(x) <= -1`.
pub fn lambert_wm1(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - 1e-15 || x >= 0.0 {
        return Err(Error::InvalidParameter(format!("W-1 undefined at {x}")));
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    let guess = if x < -0.25 {
        branch_point_guess(x, -1.0)
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    halley(x, guess)
}

/// Logical error model `p_L = u dm d (b p)^(c d + k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPolynomial {
    pub u: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
}

impl ErrorPolynomial {
    /// Exponent `(d-1)/2` form, e.g. for the 11-layer vertical-cleanup fit.
    pub fn half_distance(u: f64, b: f64) -> ErrorPolynomial {
        ErrorPolynomial { u, b, c: 0.5, k: -0.5 }
    }

    pub fn eval(&self, d: f64, dm: f64, p: f64) -> f64 {
        self.u * dm * d * (self.b * p).powf(self.c * d + self.k)
    }
}

fn round_up_odd(d: f64) -> usize {
    let mut n = d.ceil().max(3.0) as usize;
    if n % 2 == 0 {
        n += 1;
    }
    n
}

fn check_inputs(dm: usize, p: f64, delta: f64, poly: &ErrorPolynomial) -> Result<f64> {
    if dm == 0 || !(delta > 0.0 && delta < 1.0) || !(p > 0.0) || poly.u <= 0.0 || poly.c <= 0.0 {
        return Err(Error::InvalidParameter(format!("bad distance query dm={dm} p={p} delta={delta}")));
    }
    let bp = poly.b * p;
    if bp >= 1.0 {
        return Err(Error::InvalidParameter(format!("p={p} is above threshold (b p = {bp})")));
    }
    Ok(bp.ln())
}

/// Continuous solution of `p_L(d) = δ` on the decreasing side of `p_L`,
/// `d = W_{-1}(x) / (c ln(bp))` with `x = c ln(bp) δ (bp)^(-k) / (u dm)`.
/// `None` when every distance already meets the target.
pub fn distance_continuous(dm: usize, p: f64, delta: f64, poly: &ErrorPolynomial) -> Result<Option<f64>> {
    let l = check_inputs(dm, p, delta, poly)?;
    let x = poly.c * l * delta * (poly.b * p).powf(-poly.k) / (poly.u * dm as f64);
    if x < -INV_E {
        return Ok(None);
    }
    Ok(Some(lambert_wm1(x)? / (poly.c * l)))
}

/// Smallest odd distance `>= 3` meeting `p_L < δ`, from the Lambert-W solution.
pub fn distance_for_dm(dm: usize, p: f64, delta: f64, poly: &ErrorPolynomial) -> Result<usize> {
    Ok(match distance_continuous(dm, p, delta, poly)? {
        None => 3,
        Some(d) => round_up_odd(d),
    })
}

/// Same quantity by bisection on `p_L(d) - δ` past the peak of `p_L`.
pub fn distance_by_bisection(dm: usize, p: f64, delta: f64, poly: &ErrorPolynomial) -> Result<usize> {
    let l = check_inputs(dm, p, delta, poly)?;
    let f = |d: f64| poly.eval(d, dm as f64, p) - delta;
    // d (bp)^(cd) peaks at d = -1/(c ln bp)
    let mut lo = (-1.0 / (poly.c * l)).max(1e-9);
    if f(lo) < 0.0 {
        return Ok(3);
    }
    let mut hi = lo.max(1.0) * 2.0;
    while f(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::NoConvergence(64));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(round_up_odd(hi))
}
