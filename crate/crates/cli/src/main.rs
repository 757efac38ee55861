use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use hierqec::geometry::{build_layout, Basis};
use hierqec::harness::plot::{error_rate_plot, svg_plot, Axes, Series};
use hierqec::harness::{
    decode_batch, fit_polynomial, run_experiment, write_csv, write_manifest, ExperimentConfig, ExperimentResult, FitPoint, LocalChoice, TrainJob,
};
use hierqec::latency::{
    buffer_time_closed_form, buffer_times, distance_continuous, distance_for_dm, sliding_window_buffer, DecodeTime, ErrorPolynomial, LatencyConfig,
    RoundingMode, WindowPlan,
};
use hierqec::matching::GlobalDecoder;
use hierqec::nn::io::{load, save};
use hierqec::nn::train::evaluate_bce;
use hierqec::persist::{generate_batch, ShotBatch};
use hierqec::pipeline::{fold_corrections, LocalDecoder};
use hierqec::sparsify::Sparsifier;

#[derive(Parser)]
#[command(name = "hierqec", version, about = "Hierarchical surface-code decoding experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo logical error rates for one or more experiment configs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run manifest; defaults to `<out>.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Sample a batch of shots to a binary file.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a local decoder on freshly sampled shots.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained network on a stored batch.
    Infer {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the decoding pipeline over a stored batch.
    Decode {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit `p_L = u d dm (b p)^((d-1)/2)` to simulation output.
    Fit {
        /// CSV written by `simulate`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "x")]
        basis: FitBasis,
        /// Only rows whose pipeline label matches, e.g. `none+none+mwpm`.
        #[arg(long)]
        pipeline: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Buffer times and distance requirements.
    Latency(LatencyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FitBasis {
    X,
    Z,
    Any,
}

/// Times in microseconds.
#[derive(clap::Args, Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct LatencyArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1.4)]
    t_s: f64,
    #[arg(long, default_value_t = 20.0)]
    t_l: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 16)]
    r1: usize,
    #[arg(long, default_value_t = 17)]
    r2: usize,
    #[arg(long, default_value_t = 10)]
    j_max: usize,
    /// Comma-separated sliding-window sizes summing to r1 + r2.
    #[arg(long, value_delimiter = ',')]
    windows: Vec<usize>,
    /// Decode-time polynomial coefficients in µs (constant term first); linear `c` when absent.
    #[arg(long, value_delimiter = ',')]
    poly: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Writes d against dm for each target in `deltas`.
    #[arg(long)]
    distance_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-6, 1e-9, 1e-12, 1e-15])]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 0.0008198)]
    u: f64,
    #[arg(long, default_value_t = 107.803)]
    b: f64,
    #[arg(long, default_value_t = 1_000_000)]
    dm_max: usize,
}

#[derive(Parser)]
struct LatencyDefaults {
    #[command(flatten)]
    args: LatencyArgs,
}

impl Default for LatencyArgs {
    fn default() -> Self {
        LatencyDefaults::parse_from(["latency"]).args
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

#[derive(Deserialize)]
struct SampleConfig {
    dx: usize,
    dz: usize,
    dm: usize,
    p: f64,
    count: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct DecodeConfig {
    local: LocalChoice,
    sparsifier: Sparsifier,
    global: GlobalDecoder,
}

#[derive(Serialize)]
struct InferSummary {
    shots: usize,
    bce: f64,
    baseline_bce: f64,
    mean_raw_highlights: f64,
    mean_local_highlights: f64,
    weights_sha256: String,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)?).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn print_rows(results: &[ExperimentResult]) {
    for r in results {
        for row in &r.rows {
            println!(
                "({},{},{}) {} p={:e}: p_L x={:.3e} z={:.3e} any={:.3e} [{:.2e}, {:.2e}]  A_raw={:.2} A_local={:.2} A_sparse={:.2} r_a={:.4}",
                row.dx, row.dz, row.dm, row.pipeline, row.p, row.x.rate, row.z.rate, row.any.rate, row.any.ci_low, row.any.ci_high,
                row.mean_raw_highlights, row.mean_local_highlights, row.mean_sparse_highlights, row.r_a
            );
        }
    }
}

fn simulate(config: &Path, out: &Path, manifest: Option<PathBuf>, svg: Option<PathBuf>) -> Result<()> {
    let cfgs = match read_json::<OneOrMany<ExperimentConfig>>(config)? {
        OneOrMany::One(c) => vec![c],
        OneOrMany::Many(v) => v,
    };
    for c in &cfgs {
        c.validate().context("invalid experiment config")?;
    }
    let results = cfgs.iter().map(run_experiment).collect::<hierqec::Result<Vec<_>>>()?;
    print_rows(&results);
    let rows: Vec<_> = results.iter().flat_map(|r| r.rows.clone()).collect();
    write_csv(&rows, out)?;
    write_manifest(&results, &manifest.unwrap_or_else(|| with_suffix(out, ".json")))?;
    if let Some(svg) = svg {
        std::fs::write(svg, error_rate_plot(&rows))?;
    }
    Ok(())
}

fn infer(weights: &Path, input: &Path, out: Option<PathBuf>) -> Result<()> {
    let (net, sha) = load(weights).with_context(|| format!("loading {}", weights.display()))?;
    let batch = ShotBatch::load(input)?;
    let (x, y) = batch.tensors()?;
    let bce = evaluate_bce(&net, &x, &y, 256)?;
    let layout = build_layout(batch.dx, batch.dz)?;
    let local = LocalDecoder::Network(std::sync::Arc::new(net));
    let (mut raw, mut after) = (0usize, 0usize);
    for s in &batch.shots {
        let (cx, cz) = local.corrections(&layout, &s.errors, &s.syndromes)?;
        let fx = fold_corrections(&layout, Basis::X, &s.syndromes.diff_x, &cx);
        let fz = fold_corrections(&layout, Basis::Z, &s.syndromes.diff_z, &cz);
        raw += s.syndromes.diff_x.iter().chain(s.syndromes.diff_z.iter()).filter(|&&b| b == 1).count();
        after += fx.iter().chain(fz.iter()).filter(|&&b| b == 1).count();
    }
    let n = batch.shots.len().max(1) as f64;
    let summary = InferSummary {
        shots: batch.shots.len(),
        bce,
        baseline_bce: std::f64::consts::LN_2,
        mean_raw_highlights: raw as f64 / n,
        mean_local_highlights: after as f64 / n,
        weights_sha256: sha,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(out) = out {
        write_json(&out, &summary)?;
    }
    Ok(())
}

fn fit(input: &Path, basis: FitBasis, pipeline: Option<String>, out: Option<PathBuf>) -> Result<()> {
    let mut rd = csv::Reader::from_path(input).with_context(|| format!("reading {}", input.display()))?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("missing column {name}"));
    let rate_col = match basis {
        FitBasis::X => "x_rate",
        FitBasis::Z => "z_rate",
        FitBasis::Any => "any_rate",
    };
    let (ci_dx, ci_dz, ci_dm, ci_p, ci_r, ci_pipe) = (col("dx")?, col("dz")?, col("dm")?, col("p")?, col(rate_col)?, col("pipeline")?);
    let mut points = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if pipeline.as_deref().is_some_and(|want| want != &rec[ci_pipe]) {
            continue;
        }
        let dx: usize = rec[ci_dx].parse()?;
        let dz: usize = rec[ci_dz].parse()?;
        if dx != dz {
            bail!("fit expects square codes, found dx={dx} dz={dz}");
        }
        points.push(FitPoint { d: dx, dm: rec[ci_dm].parse()?, p: rec[ci_p].parse()?, p_l: rec[ci_r].parse()? });
    }
    let f = fit_polynomial(&points)?;
    println!("u = {:.6e}, b = {:.6}, rms log residual = {:.4}, points = {}", f.u, f.b, f.rms_log_residual, f.points_used);
    if let Some(out) = out {
        write_json(&out, &f)?;
    }
    Ok(())
}

fn latency(mut a: LatencyArgs) -> Result<()> {
    if let Some(path) = a.config.clone() {
        a = read_json(&path)?;
    }
    let us = 1e-6;
    let cfg = LatencyConfig { t_s: a.t_s * us, t_l: a.t_l * us, c: a.c * us, r1: a.r1, r2: a.r2 };
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut exact_pts = Vec::new();
    let exact = buffer_times(&cfg, a.j_max, RoundingMode::Exact);
    let cont = buffer_times(&cfg, a.j_max, RoundingMode::Continuous);
    println!("j, exact_us, continuous_us, closed_form_us");
    for j in 1..=a.j_max {
        let e = exact.as_ref().ok().map(|v| v[j - 1] / us);
        let c = cont.as_ref().ok().map(|v| v[j - 1] / us);
        let f = buffer_time_closed_form(&cfg, j)? / us;
        let show = |v: Option<f64>| v.map_or("diverged".to_string(), |x| format!("{x:.6}"));
        println!("{j}, {}, {}, {f:.6}", show(e), show(c));
        if let Some(e) = e {
            exact_pts.push((j as f64, e));
        }
        rows.push(vec![j.to_string(), show(e), show(c), format!("{f:.6}")]);
    }
    if !a.windows.is_empty() {
        let dec = if a.poly.is_empty() {
            DecodeTime::Linear { c: cfg.c }
        } else {
            DecodeTime::Polynomial { coeffs: a.poly.iter().map(|v| v * us).collect() }
        };
        let plan = WindowPlan { sizes: a.windows.clone() };
        let t = sliding_window_buffer(&cfg, &plan, &dec)?;
        println!("sliding windows {:?} {:?}: T_b1 = {:.6} us", plan.sizes, plan.regimes(cfg.t_s, &dec), t / us);
    }
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["j", "exact_us", "continuous_us", "closed_form_us"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    if let Some(svg) = &a.svg {
        let s = vec![Series { label: format!("c={} us", a.c), points: exact_pts }];
        std::fs::write(svg, svg_plot(&s, Axes { x_label: "buffer j", y_label: "T_bj (us)", log_x: false, log_y: true }))?;
    }
    if let Some(path) = &a.distance_out {
        let poly = ErrorPolynomial::half_distance(a.u, a.b);
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["delta", "dm", "d", "d_continuous"])?;
        for &delta in &a.deltas {
            // 1, 2, 5 steps per decade
            let mut dm = 1usize;
            let mut k = 0;
            while dm <= a.dm_max {
                let d = distance_for_dm(dm, a.p, delta, &poly)?;
                let dc = distance_continuous(dm, a.p, delta, &poly)?.unwrap_or(f64::NAN);
                w.write_record([format!("{delta:e}"), dm.to_string(), d.to_string(), format!("{dc:.4}")])?;
                k += 1;
                dm = [1, 2, 5][k % 3] * 10usize.pow(k as u32 / 3);
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Simulate { config, out, manifest, svg } => simulate(&config, &out, manifest, svg),
        Cmd::Sample { config, out } => {
            let c: SampleConfig = read_json(&config)?;
            let b = generate_batch(c.dx, c.dz, c.dm, c.p, c.count, c.seed)?;
            b.save(&out)?;
            println!("wrote {} shots to {}", b.shots.len(), out.display());
            Ok(())
        }
        Cmd::Train { config, out } => {
            let job: TrainJob = read_json(&config)?;
            let (net, summary) = job.run()?;
            let m = save(&net, &out, Some(serde_json::json!({ "job": job, "summary": summary })))?;
            println!("held-out BCE {:.5} (constant 0.5: {:.5}), {} params, sha256 {}", summary.heldout_bce, summary.baseline_bce, m.parameter_count, m.sha256);
            Ok(())
        }
        Cmd::Infer { weights, input, out } => infer(&weights, &input, out),
        Cmd::Decode { config, input, out } => {
            let c: DecodeConfig = read_json(&config)?;
            let batch = ShotBatch::load(&input)?;
            let r = decode_batch(&batch, &c.local, c.sparsifier, c.global)?;
            print_rows(std::slice::from_ref(&r));
            if let Some(out) = out {
                write_csv(&r.rows, &out)?;
            }
            Ok(())
        }
        Cmd::Fit { input, basis, pipeline, out } => fit(&input, basis, pipeline, out),
        Cmd::Latency(a) => latency(a),
    }
}
