use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use psm_core::chamfer::{chamfer_distance_with, Backend, ChamferOptions};
use psm_core::emd::{emd_auction, emd_exact, emd_with, AuctionParams, EmdBackend, EXACT_LIMIT};
use psm_core::losses::{candidate_distances, mon_loss, CandidateBundle, Metric};
use psm_core::meanshape::{emit_plot, optimize_mean_shape, Family, Init, SgdConfig, ShapeDistributionSpec};
use psm_core::voxel::{binarize, grid_unit_scale, iou, splat, Bounds};
use psm_core::{bench, io, sampling, selftest, Error, Point3, PointSet};

#[derive(Parser)]
#[command(name = "psm", version, about = "Point-set distances, sampling, voxelization and mean shapes")]
struct Cli {
    /// Emit a JSON object instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true, env = "PSM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chamfer distance between two .xyz files.
    Chamfer(ChamferArgs),
    /// Earth Mover's distance between two equal-size .xyz files.
    Emd(EmdArgs),
    /// Farthest point sampling.
    Fps(FpsArgs),
    /// Splat points into an occupancy grid.
    Voxelize(VoxelizeArgs),
    /// Intersection over union of two binary grids.
    Iou(IouArgs),
    /// Min-of-N loss of candidates against a groundtruth.
    Mon(MonArgs),
    /// Optimize a mean shape by SGD against a shape distribution.
    Meanshape(MeanshapeArgs),
    /// Auction accuracy and timing against the exact solver.
    Bench(BenchArgs),
    /// Run the built-in invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct UnitArgs {
    /// Report distances in grid units `D·h/10` of a grid given as `D,h`.
    #[arg(long, value_name = "D,H", value_parser = parse_grid_units)]
    grid_units: Option<(usize, f64)>,
}

#[derive(Args)]
struct ChamferArgs {
    a: PathBuf,
    b: PathBuf,
    /// Write the gradient with respect to A.
    #[arg(long, value_name = "OUT.xyz")]
    grad: Option<PathBuf>,
    /// Write the gradient with respect to B.
    #[arg(long, value_name = "OUT.xyz")]
    grad_b: Option<PathBuf>,
    #[arg(long, default_value = "kdtree")]
    backend: Backend,
    /// Divide each directed sum by its set's size.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    units: UnitArgs,
}

#[derive(Args)]
struct EmdArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, conflicts_with = "auction")]
    exact: bool,
    #[arg(long)]
    auction: bool,
    /// Target relative error for the auction.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Auction time budget per instance.
    #[arg(long, default_value_t = 1000)]
    budget_ms: u64,
    #[arg(long, value_name = "OUT.xyz")]
    grad: Option<PathBuf>,
    #[arg(long, value_name = "OUT.xyz")]
    grad_b: Option<PathBuf>,
    /// Write `i j cost` lines for the matching.
    #[arg(long, value_name = "M.txt")]
    dump_matching: Option<PathBuf>,
    /// Divide the total by the set size.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    units: UnitArgs,
}

#[derive(Args)]
struct FpsArgs {
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Start from this index instead of a seeded random one.
    #[arg(long)]
    start_index: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VoxelizeArgs {
    input: PathBuf,
    #[arg(long)]
    dims: usize,
    #[arg(long, default_value = "0,0,0", value_parser = parse_point)]
    origin: Point3,
    #[arg(long, default_value_t = 1.0)]
    cell: f64,
    /// Binarize at this threshold; otherwise occupancies are written as is.
    #[arg(long)]
    threshold: Option<f64>,
    /// Reject points outside the grid instead of clamping them inward.
    #[arg(long)]
    strict: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct IouArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct MonArgs {
    /// Groundtruth followed by candidate files.
    #[arg(required_unless_present = "manifest", num_args = 2..)]
    files: Vec<PathBuf>,
    /// JSON bundle manifest instead of positional files.
    #[arg(long, conflicts_with = "files")]
    manifest: Option<PathBuf>,
    /// Overrides the manifest's metric.
    #[arg(long)]
    metric: Option<Metric>,
    #[command(flatten)]
    units: UnitArgs,
}

#[derive(Args)]
struct MeanshapeArgs {
    /// Distribution spec JSON.
    #[arg(long, required_unless_present = "family")]
    spec: Option<PathBuf>,
    /// Built-in family with default parameters.
    #[arg(long, conflicts_with = "spec")]
    family: Option<String>,
    #[arg(long, default_value = "emd")]
    metric: Metric,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 4)]
    batch: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Steps until the learning rate halves (default: steps/20).
    #[arg(long)]
    lr_half_life: Option<usize>,
    #[arg(long, default_value = "uniform")]
    init: Init,
    /// Points in the optimized set (default: the spec's n_points).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    budget_ms: u64,
    /// Write the CSV report here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    skip_chamfer: bool,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid number `{t}`")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Point3::new(x, y, z)),
        _ => Err("expected three finite numbers `x,y,z`".into()),
    }
}

fn parse_grid_units(s: &str) -> Result<(usize, f64), String> {
    let (d, h) = s.split_once(',').ok_or("expected `D,h`")?;
    let d: usize = d.trim().parse().map_err(|_| format!("invalid dims `{d}`"))?;
    let h: f64 = h.trim().parse().map_err(|_| format!("invalid cell size `{h}`"))?;
    if d == 0 || !(h > 0.0 && h.is_finite()) {
        return Err("dims and cell size must be positive".into());
    }
    Ok((d, h))
}

/// 12 significant digits; zero prints as `0.000000000000`.
fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let e = if v == 0.0 { -1 } else { v.abs().log10().floor() as i32 };
    if (-5..12).contains(&e) {
        let s = format!("{:.*}", (11 - e).max(0) as usize, v);
        // log10 can land one short near powers of ten.
        if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 12 {
            format!("{:.*}", (10 - e).max(0) as usize, v)
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

struct Output {
    json: bool,
}

impl Output {
    fn emit(&self, text: String, obj: Value) {
        if self.json {
            println!("{obj}");
        } else {
            println!("{text}");
        }
    }
}

fn write_grad(path: &Option<PathBuf>, g: &Option<Vec<Point3>>) -> psm_core::Result<()> {
    if let (Some(p), Some(g)) = (path, g) {
        io::write_xyz(&PointSet(g.clone()), p)?;
    }
    Ok(())
}

fn unit_scale(u: &UnitArgs) -> Option<f64> {
    u.grid_units.map(|(d, h)| grid_unit_scale(d, h))
}

fn chamfer(args: ChamferArgs, out: &Output) -> psm_core::Result<()> {
    let a = io::read_xyz(&args.a)?;
    let b = io::read_xyz(&args.b)?;
    let want_grad = args.grad.is_some() || args.grad_b.is_some();
    let opts = ChamferOptions { backend: args.backend, want_grad, normalize: args.normalize };
    let r = chamfer_distance_with(&a, &b, &opts)?;
    write_grad(&args.grad, &r.grad_a)?;
    write_grad(&args.grad_b, &r.grad_b)?;
    let scale = unit_scale(&args.units);
    let value = scale.map_or(r.value, |s| r.value / (s * s));
    out.emit(
        fmt_num(value),
        json!({
            "metric": "cd",
            "value": value,
            "raw_value": r.value,
            "unit_scale": scale,
            "backend": args.backend,
            "normalized": args.normalize,
            "size_a": a.len(),
            "size_b": b.len(),
        }),
    );
    Ok(())
}

fn emd(args: EmdArgs, out: &Output) -> psm_core::Result<()> {
    let a = io::read_xyz(&args.a)?;
    let b = io::read_xyz(&args.b)?;
    let params = AuctionParams {
        target_rel_err: args.eps,
        time_budget: Duration::from_millis(args.budget_ms),
        ..Default::default()
    };
    params.validate()?;
    let want_grad = args.grad.is_some() || args.grad_b.is_some();
    let (r, assignment, backend, achieved_eps, stats) = if args.exact {
        let (r, m) = emd_exact(&a, &b, want_grad)?;
        (r, m, EmdBackend::Exact, 0.0, None)
    } else if args.auction {
        let r = emd_auction(&a, &b, &params, want_grad)?;
        (r.result, r.assignment, EmdBackend::Auction, r.achieved_eps, Some(r.stats))
    } else {
        let r = emd_with(&a, &b, want_grad, &params)?;
        (r.result, r.assignment, r.backend, r.achieved_eps, r.stats)
    };
    write_grad(&args.grad, &r.grad_a)?;
    write_grad(&args.grad_b, &r.grad_b)?;
    if let Some(p) = &args.dump_matching {
        io::write_matching(&assignment, p)?;
    }
    let mut value = r.value;
    if args.normalize {
        value /= a.len() as f64;
    }
    let scale = unit_scale(&args.units);
    if let Some(s) = scale {
        value /= s;
    }
    out.emit(
        fmt_num(value),
        json!({
            "metric": "emd",
            "value": value,
            "raw_value": r.value,
            "unit_scale": scale,
            "normalized": args.normalize,
            "backend": backend,
            "achieved_eps": achieved_eps,
            "exact_limit": EXACT_LIMIT,
            "params": params,
            "stats": stats,
            "size": a.len(),
        }),
    );
    Ok(())
}

fn fps(args: FpsArgs, out: &Output) -> psm_core::Result<()> {
    let ps = io::read_xyz(&args.input)?;
    let start = match args.start_index {
        Some(i) if i >= ps.len() => {
            return Err(Error::invalid("start-index", format!("{i} is out of range for {} points", ps.len())))
        }
        Some(i) => i,
        None => {
            if ps.is_empty() {
                return Err(Error::EmptySet);
            }
            psm_core::RandomSource::new(args.seed).below(ps.len())
        }
    };
    let idx = sampling::farthest_point_indices(&ps, args.k, start)?;
    let sel: PointSet = idx.iter().map(|&i| ps[i]).collect();
    io::write_xyz(&sel, &args.output)?;
    let radius = sampling::covering_radius(&ps, &idx);
    out.emit(
        format!("{} points, covering radius {}", sel.len(), fmt_num(radius)),
        json!({ "k": sel.len(), "start_index": start, "indices": idx, "covering_radius": radius }),
    );
    Ok(())
}

fn voxelize(args: VoxelizeArgs, out: &Output) -> psm_core::Result<()> {
    let ps = io::read_xyz(&args.input)?;
    let bounds = if args.strict { Bounds::Strict } else { Bounds::Clamp };
    let mut g = splat(&ps, args.dims, args.origin, args.cell, bounds)?;
    if let Some(t) = args.threshold {
        g = binarize(&g, t)?;
    }
    io::write_grid(&g, &args.output)?;
    let mass: f64 = g.values.iter().sum();
    out.emit(
        format!("{} occupied of {} cells", g.occupied(), g.values.len()),
        json!({
            "dims": g.dims,
            "cells": g.values.len(),
            "occupied": g.occupied(),
            "mass": mass,
            "threshold": args.threshold,
            "unit_scale": g.unit_scale(),
        }),
    );
    Ok(())
}

fn iou_cmd(args: IouArgs, out: &Output) -> psm_core::Result<()> {
    let a = io::read_grid(&args.a)?;
    let b = io::read_grid(&args.b)?;
    let v = iou(&a, &b)?;
    out.emit(fmt_num(v), json!({ "iou": v }));
    Ok(())
}

fn mon(args: MonArgs, out: &Output) -> psm_core::Result<()> {
    let mut bundle = match &args.manifest {
        Some(m) => io::read_bundle(m)?,
        None => {
            let groundtruth = io::read_xyz(&args.files[0])?;
            let candidates = args.files[1..].iter().map(io::read_xyz).collect::<psm_core::Result<_>>()?;
            CandidateBundle { candidates, groundtruth, metric: Metric::default() }
        }
    };
    if let Some(m) = args.metric {
        bundle.metric = m;
    }
    let (mut value, argmin) = mon_loss(&bundle)?;
    let mut all = candidate_distances(&bundle)?;
    let scale = unit_scale(&args.units);
    if let Some(s) = scale {
        let div = if bundle.metric == Metric::Cd { s * s } else { s };
        value /= div;
        all.iter_mut().for_each(|d| *d /= div);
    }
    out.emit(
        format!("{} {argmin}", fmt_num(value)),
        json!({
            "metric": bundle.metric,
            "value": value,
            "argmin_index": argmin,
            "distances": all,
            "unit_scale": scale,
        }),
    );
    Ok(())
}

fn meanshape(args: MeanshapeArgs, out: &Output) -> psm_core::Result<()> {
    let spec = match (&args.spec, &args.family) {
        (Some(p), _) => io::read_distribution_spec(p)?,
        (None, Some(f)) => ShapeDistributionSpec::new(Family::default_for(f)?),
        (None, None) => unreachable!("clap requires one of --spec/--family"),
    };
    let cfg = SgdConfig {
        metric: args.metric,
        steps: args.steps,
        batch: args.batch,
        lr: args.lr,
        lr_half_life: args.lr_half_life,
        init: args.init,
        m: args.m,
        seed: args.seed,
    };
    let r = optimize_mean_shape(&spec, &cfg)?;
    if let Some(p) = &args.output {
        io::write_xyz(&r.x, p)?;
    }
    if let Some(p) = &args.plot {
        emit_plot(&r.x, &spec, p)?;
    }
    if let Some(p) = &args.trace {
        io::write_trace(&r.loss_trace, p)?;
    }
    let last = r.loss_trace.last().copied().unwrap_or(f64::NAN);
    out.emit(
        format!("final loss {}", fmt_num(last)),
        json!({
            "family": spec.family.name(),
            "config": cfg,
            "points": r.x.len(),
            "initial_loss": r.loss_trace.first(),
            "final_loss": last,
        }),
    );
    Ok(())
}

fn bench_cmd(args: BenchArgs, out: &Output) -> psm_core::Result<()> {
    if args.trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let cfg = bench::BenchConfig {
        sizes: args.sizes,
        trials: args.trials,
        seed: args.seed,
        params: AuctionParams {
            target_rel_err: args.eps,
            time_budget: Duration::from_millis(args.budget_ms),
            ..Default::default()
        },
        skip_chamfer: args.skip_chamfer,
    };
    cfg.params.validate()?;
    let rows = bench::run_bench(&cfg)?;
    if let Some(p) = &args.csv {
        std::fs::write(p, bench::rows_to_csv(&rows)).map_err(|e| Error::io(p, e))?;
    }
    out.emit(bench::rows_to_table(&rows), json!({ "params": cfg.params, "rows": rows }));
    Ok(())
}

fn selftest_cmd(args: SelftestArgs, out: &Output) -> psm_core::Result<bool> {
    let results = selftest::run_all(args.seed);
    let ok = results.iter().all(|r| r.passed);
    let text = results
        .iter()
        .map(|r| format!("{} {} ({:.0} ms) {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.elapsed_ms, r.detail))
        .collect::<Vec<_>>()
        .join("\n");
    out.emit(text, json!({ "passed": ok, "checks": results }));
    Ok(ok)
}

fn run(cli: Cli) -> psm_core::Result<bool> {
    let out = Output { json: cli.json };
    match cli.cmd {
        Command::Chamfer(a) => chamfer(a, &out)?,
        Command::Emd(a) => emd(a, &out)?,
        Command::Fps(a) => fps(a, &out)?,
        Command::Voxelize(a) => voxelize(a, &out)?,
        Command::Iou(a) => iou_cmd(a, &out)?,
        Command::Mon(a) => mon(a, &out)?,
        Command::Meanshape(a) => meanshape(a, &out)?,
        Command::Bench(a) => bench_cmd(a, &out)?,
        Command::Selftest(a) => return selftest_cmd(a, &out),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
