//! Accuracy and timing harness for the EMD and Chamfer backends.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::chamfer::{chamfer_distance, Backend};
use crate::emd::{emd_auction, emd_exact, AuctionParams, EXACT_LIMIT};
use crate::error::Result;
use crate::geom::{Point3, PointSet};
use crate::rng::RandomSource;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub params: AuctionParams,
    /// Skip Chamfer timings (they dominate for large sizes with the brute backend).
    pub skip_chamfer: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { sizes: vec![64, 128, 256], trials: 100, seed: 7, params: AuctionParams::default(), skip_chamfer: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub trials: usize,
    pub exact_feasible: bool,
    pub mean_rel_err: Option<f64>,
    pub p95_rel_err: Option<f64>,
    pub max_rel_err: Option<f64>,
    /// Trials whose relative error exceeded that trial's certified bound.
    pub bound_violations: Option<usize>,
    pub mean_achieved_eps: f64,
    pub max_achieved_eps: f64,
    pub exact_ms: Option<f64>,
    pub auction_ms: f64,
    pub cd_brute_ms: Option<f64>,
    pub cd_kdtree_ms: Option<f64>,
}

pub fn uniform_cube(rng: &mut RandomSource, n: usize) -> PointSet {
    (0..n)
        .map(|_| {
            let x = rng.uniform();
            let y = rng.uniform();
            let z = rng.uniform();
            Point3::new(x, y, z)
        })
        .collect()
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let root = RandomSource::new(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &size in &cfg.sizes {
        let mut rng = root.split(size as u64 + 1);
        let exact_feasible = size <= EXACT_LIMIT;
        let (mut errs, mut achieved, mut violations) = (Vec::new(), Vec::new(), 0usize);
        let (mut exact_ms, mut auction_ms, mut brute_ms, mut tree_ms) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..cfg.trials {
            let a = uniform_cube(&mut rng, size);
            let b = uniform_cube(&mut rng, size);

            let t = Instant::now();
            let auc = emd_auction(&a, &b, &cfg.params, false)?;
            auction_ms += ms_since(t);
            achieved.push(auc.achieved_eps);

            if exact_feasible {
                let t = Instant::now();
                let (ex, _) = emd_exact(&a, &b, false)?;
                exact_ms += ms_since(t);
                let rel = if ex.value > 0.0 { (auc.result.value - ex.value) / ex.value } else { 0.0 };
                if rel > auc.achieved_eps * (1.0 + 1e-9) + 1e-12 {
                    violations += 1;
                }
                errs.push(rel);
            }

            if !cfg.skip_chamfer {
                let t = Instant::now();
                chamfer_distance(&a, &b, false, Backend::Brute)?;
                brute_ms += ms_since(t);
                let t = Instant::now();
                chamfer_distance(&a, &b, false, Backend::KdTree)?;
                tree_ms += ms_since(t);
            }
        }
        let n = cfg.trials.max(1) as f64;
        let has_errs = exact_feasible && !errs.is_empty();
        rows.push(BenchRow {
            size,
            trials: cfg.trials,
            exact_feasible,
            mean_rel_err: has_errs.then(|| mean(&errs)),
            p95_rel_err: has_errs.then(|| percentile(&errs, 0.95)),
            max_rel_err: has_errs.then(|| errs.iter().copied().fold(0.0, f64::max)),
            bound_violations: exact_feasible.then_some(violations),
            mean_achieved_eps: if achieved.is_empty() { 0.0 } else { mean(&achieved) },
            max_achieved_eps: achieved.iter().copied().fold(0.0, f64::max),
            exact_ms: exact_feasible.then_some(exact_ms / n),
            auction_ms: auction_ms / n,
            cd_brute_ms: (!cfg.skip_chamfer).then_some(brute_ms / n),
            cd_kdtree_ms: (!cfg.skip_chamfer).then_some(tree_ms / n),
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6e}"))
}

pub const CSV_HEADER: &str = "size,trials,exact_feasible,mean_rel_err,p95_rel_err,max_rel_err,bound_violations,mean_achieved_eps,max_achieved_eps,exact_ms,auction_ms,cd_brute_ms,cd_kdtree_ms";

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6e},{:.6e},{},{:.6e},{},{}",
            r.size,
            r.trials,
            r.exact_feasible,
            opt(r.mean_rel_err),
            opt(r.p95_rel_err),
            opt(r.max_rel_err),
            r.bound_violations.map_or_else(String::new, |v| v.to_string()),
            r.mean_achieved_eps,
            r.max_achieved_eps,
            opt(r.exact_ms),
            r.auction_ms,
            opt(r.cd_brute_ms),
            opt(r.cd_kdtree_ms),
        );
    }
    out
}

pub fn rows_to_table(rows: &[BenchRow]) -> String {
    let dash = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"));
    let mut out = format!(
        "{:>6} {:>6} {:>11} {:>11} {:>11} {:>10} {:>10} {:>10} {:>10}\n",
        "size", "trials", "mean_err", "p95_err", "max_eps", "exact_ms", "auct_ms", "cd_brute", "cd_kdtree"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>11} {:>11} {:>11.3e} {:>10} {:>10.3} {:>10} {:>10}",
            r.size,
            r.trials,
            r.mean_rel_err.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}")),
            r.p95_rel_err.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}")),
            r.max_achieved_eps,
            dash(r.exact_ms, 3),
            r.auction_ms,
            dash(r.cd_brute_ms, 3),
            dash(r.cd_kdtree_ms, 3),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 0.95), 95.0);
        assert_eq!(percentile(&[3.0], 0.95), 3.0);
    }

    #[test]
    fn small_bench_is_deterministic_in_error_columns() {
        let cfg = BenchConfig { sizes: vec![16, 32], trials: 5, ..Default::default() };
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_rel_err, y.mean_rel_err);
            assert_eq!(x.p95_rel_err, y.p95_rel_err);
            assert_eq!(x.bound_violations, Some(0));
            assert!(x.p95_rel_err.unwrap() <= x.max_achieved_eps + 1e-12);
        }
        let csv = rows_to_csv(&a);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with(CSV_HEADER));
    }
}
