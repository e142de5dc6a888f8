//! Invariant checks runnable from the shipped binary.
//!
//! Each check uses its own small reference computation (linear scans,
//! factorial enumeration, finite differences) rather than the code path it checks.

use std::time::Instant;

use serde::Serialize;

use crate::chamfer::{chamfer_distance, Backend, KdTree};
use crate::emd::{emd_auction, emd_exact, AuctionParams};
use crate::geom::{Point3, PointSet};
use crate::io;
use crate::losses::{mon_loss, CandidateBundle, Metric};
use crate::numeric::rel_diff;
use crate::rng::RandomSource;
use crate::sampling::farthest_point_indices;
use crate::voxel::{binarize, grid_unit_scale, iou, splat, splat_accumulate, Bounds};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: f64,
}

type Check = fn(&mut RandomSource) -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("kdtree_matches_linear_scan", kdtree_matches_linear_scan),
    ("chamfer_backends_agree", chamfer_backends_agree),
    ("chamfer_symmetry_and_translation", chamfer_symmetry_and_translation),
    ("chamfer_gradient_finite_differences", chamfer_gradient_fd),
    ("emd_exact_matches_enumeration", emd_exact_matches_enumeration),
    ("emd_auction_within_bound", emd_auction_within_bound),
    ("emd_gradient_finite_differences", emd_gradient_fd),
    ("fps_greedy_property", fps_greedy_property),
    ("splat_symmetry_and_mass", splat_symmetry_and_mass),
    ("iou_basics", iou_basics),
    ("mon_monotone", mon_monotone),
    ("xyz_round_trip", xyz_round_trip),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    let root = RandomSource::new(seed);
    CHECKS
        .iter()
        .enumerate()
        .map(|(k, (name, check))| {
            let mut rng = root.split(k as u64 + 1);
            let t = Instant::now();
            let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&mut rng)))
                .unwrap_or_else(|_| Err("panicked".to_string()));
            let elapsed_ms = t.elapsed().as_secs_f64() * 1e3;
            match r {
                Ok(detail) => CheckOutcome { name, passed: true, detail, elapsed_ms },
                Err(detail) => CheckOutcome { name, passed: false, detail, elapsed_ms },
            }
        })
        .collect()
}

fn cube(rng: &mut RandomSource, n: usize) -> PointSet {
    (0..n)
        .map(|_| {
            let x = rng.uniform();
            let y = rng.uniform();
            let z = rng.uniform();
            Point3::new(x, y, z)
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: crate::Error) -> String {
    e.to_string()
}

fn kdtree_matches_linear_scan(rng: &mut RandomSource) -> Result<String, String> {
    let ps = cube(rng, 1000);
    let tree = KdTree::build(&ps).map_err(e2s)?;
    for _ in 0..200 {
        let q = Point3::new(rng.uniform() * 1.2 - 0.1, rng.uniform(), rng.uniform());
        let mut best = (0usize, f64::INFINITY);
        for (i, p) in ps.iter().enumerate() {
            let d = (q.x - p.x).powi(2) + (q.y - p.y).powi(2) + (q.z - p.z).powi(2);
            if d < best.1 {
                best = (i, d);
            }
        }
        let got = tree.nearest(&q);
        ensure(got.0 == best.0, || format!("query {q:?}: tree {got:?}, scan {best:?}"))?;
    }
    Ok("200 queries".into())
}

fn chamfer_backends_agree(rng: &mut RandomSource) -> Result<String, String> {
    for _ in 0..10 {
        let n = 1 + rng.below(600);
        let m = 1 + rng.below(600);
        let a = cube(rng, n);
        let b = cube(rng, m);
        let x = chamfer_distance(&a, &b, false, Backend::Brute).map_err(e2s)?.value;
        let y = chamfer_distance(&a, &b, false, Backend::KdTree).map_err(e2s)?.value;
        ensure(rel_diff(x, y, f64::MIN_POSITIVE) <= 1e-12, || format!("brute {x} vs kdtree {y}"))?;
    }
    Ok("10 pairs".into())
}

fn chamfer_symmetry_and_translation(rng: &mut RandomSource) -> Result<String, String> {
    for _ in 0..10 {
        let a = cube(rng, 50);
        let b = cube(rng, 70);
        let ab = chamfer_distance(&a, &b, false, Backend::KdTree).map_err(e2s)?.value;
        let ba = chamfer_distance(&b, &a, false, Backend::KdTree).map_err(e2s)?.value;
        ensure(ab == ba, || format!("asymmetric: {ab} vs {ba}"))?;
        let t = Point3::new(3.0, -1.0, 0.5);
        let moved = chamfer_distance(&a.translated(t), &b.translated(t), false, Backend::KdTree).map_err(e2s)?.value;
        ensure(rel_diff(ab, moved, 1e-12) <= 1e-9, || format!("translation changed value: {ab} vs {moved}"))?;
    }
    Ok("10 pairs".into())
}

fn chamfer_brute_value(a: &[Point3], b: &[Point3]) -> f64 {
    let dir = |x: &[Point3], y: &[Point3]| -> f64 {
        x.iter().map(|p| y.iter().map(|q| p.dist_sq(q)).fold(f64::INFINITY, f64::min)).sum()
    };
    dir(a, b) + dir(b, a)
}

fn chamfer_gradient_fd(rng: &mut RandomSource) -> Result<String, String> {
    const H: f64 = 1e-5;
    let a = cube(rng, 12);
    let b = cube(rng, 9);
    let r = chamfer_distance(&a, &b, true, Backend::Brute).map_err(e2s)?;
    let ga = r.grad_a.unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..a.len() {
        for axis in 0..3 {
            let mut plus = a.clone();
            *plus[i].axis_mut(axis) += H;
            let mut minus = a.clone();
            *minus[i].axis_mut(axis) -= H;
            let fd = (chamfer_brute_value(&plus, &b) - chamfer_brute_value(&minus, &b)) / (2.0 * H);
            worst = worst.max(rel_diff(ga[i].axis(axis), fd, 1e-3));
        }
    }
    ensure(worst <= 1e-4, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("worst relative error {worst:.2e}"))
}

fn enumerate_min(a: &[Point3], b: &[Point3]) -> f64 {
    fn rec(a: &[Point3], b: &[Point3], used: &mut Vec<bool>, i: usize, acc: f64, best: &mut f64) {
        if i == a.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(a, b, used, i + 1, acc + a[i].dist(&b[j]), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
    best
}

fn emd_exact_matches_enumeration(rng: &mut RandomSource) -> Result<String, String> {
    for _ in 0..30 {
        let s = 1 + rng.below(7);
        let a = cube(rng, s);
        let b = cube(rng, s);
        let (r, m) = emd_exact(&a, &b, false).map_err(e2s)?;
        let brute = enumerate_min(&a, &b);
        ensure(m.is_bijection(), || "not a bijection".into())?;
        ensure(rel_diff(r.value, brute, 1e-300) <= 1e-10, || format!("s={s}: exact {} vs enumeration {brute}", r.value))?;
    }
    Ok("30 instances".into())
}

fn emd_auction_within_bound(rng: &mut RandomSource) -> Result<String, String> {
    for _ in 0..10 {
        let s = 2 + rng.below(63);
        let a = cube(rng, s);
        let b = cube(rng, s);
        let (ex, _) = emd_exact(&a, &b, false).map_err(e2s)?;
        let au = emd_auction(&a, &b, &AuctionParams::default(), false).map_err(e2s)?;
        let v = au.result.value;
        ensure(v >= ex.value * (1.0 - 1e-12), || format!("auction {v} below optimum {}", ex.value))?;
        ensure(v <= ex.value * (1.0 + au.achieved_eps) * (1.0 + 1e-12), || {
            format!("auction {v} above (1+{}) x {}", au.achieved_eps, ex.value)
        })?;
    }
    Ok("10 instances".into())
}

fn emd_gradient_fd(rng: &mut RandomSource) -> Result<String, String> {
    const H: f64 = 1e-5;
    let s = 5;
    let a = cube(rng, s);
    let b = cube(rng, s);
    let (r, _) = emd_exact(&a, &b, true).map_err(e2s)?;
    let ga = r.grad_a.unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..s {
        for axis in 0..3 {
            let mut plus = a.clone();
            *plus[i].axis_mut(axis) += H;
            let mut minus = a.clone();
            *minus[i].axis_mut(axis) -= H;
            let fd = (enumerate_min(&plus, &b) - enumerate_min(&minus, &b)) / (2.0 * H);
            worst = worst.max(rel_diff(ga[i].axis(axis), fd, 1e-3));
        }
    }
    ensure(worst <= 1e-4, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("worst relative error {worst:.2e}"))
}

fn fps_greedy_property(rng: &mut RandomSource) -> Result<String, String> {
    let ps = cube(rng, 300);
    let sel = farthest_point_indices(&ps, 40, 0).map_err(e2s)?;
    for k in 1..sel.len() {
        let min_to_sel = |p: &Point3| sel[..k].iter().map(|&j| p.dist(&ps[j])).fold(f64::INFINITY, f64::min);
        let chosen = min_to_sel(&ps[sel[k]]);
        let best = ps.iter().map(min_to_sel).fold(0.0, f64::max);
        ensure(chosen == best, || format!("step {k}: chose {chosen}, best {best}"))?;
    }
    Ok("40 selections".into())
}

fn splat_symmetry_and_mass(rng: &mut RandomSource) -> Result<String, String> {
    let o = Point3::ZERO;
    let one = |p: [f64; 3]| PointSet::from_arrays(&[p]);
    let g = splat(&one([1.5, 1.5, 1.5]), 4, o, 1.0, Bounds::Strict).map_err(e2s)?;
    ensure(g.get(1, 1, 1) == 1.0, || "cell center".into())?;
    let g = splat(&one([2.0, 1.5, 1.5]), 4, o, 1.0, Bounds::Strict).map_err(e2s)?;
    ensure(g.get(1, 1, 1) == 0.5 && g.get(2, 1, 1) == 0.5, || "face center".into())?;
    let g = splat(&one([2.0, 2.0, 2.0]), 4, o, 1.0, Bounds::Strict).map_err(e2s)?;
    ensure(g.values.iter().filter(|&&v| v == 0.125).count() == 8, || "corner".into())?;
    // Well-separated interior points: one per 3-cell block.
    let pts: PointSet = (0..20)
        .map(|k| {
            let (i, j, l) = (k % 3, (k / 3) % 3, k / 9);
            Point3::new(
                1.0 + 3.0 * i as f64 + rng.uniform(),
                1.0 + 3.0 * j as f64 + rng.uniform(),
                1.0 + 3.0 * l as f64 + rng.uniform(),
            )
        })
        .collect();
    let acc = splat_accumulate(&pts, 10, o, 1.0, Bounds::Strict).map_err(e2s)?;
    let mass: f64 = acc.iter().sum();
    ensure((mass - 20.0).abs() <= 1e-12, || format!("mass {mass}"))?;
    ensure(grid_unit_scale(32, 1.0) == 3.2, || "unit scale".into())?;
    Ok("symmetry cases and mass".into())
}

fn iou_basics(rng: &mut RandomSource) -> Result<String, String> {
    let ps = cube(rng, 200);
    let g = binarize(&splat(&ps, 8, Point3::ZERO, 0.125, Bounds::Clamp).map_err(e2s)?, 0.25).map_err(e2s)?;
    ensure(iou(&g, &g).map_err(e2s)? == 1.0, || "self IoU".into())?;
    let mut inv = g.clone();
    for v in &mut inv.values {
        *v = 1.0 - *v;
    }
    ensure(iou(&g, &inv).map_err(e2s)? == 0.0, || "disjoint IoU".into())?;
    ensure(iou(&g, &inv).map_err(e2s)? == iou(&inv, &g).map_err(e2s)?, || "symmetry".into())?;
    Ok("identity, disjoint, symmetry".into())
}

fn mon_monotone(rng: &mut RandomSource) -> Result<String, String> {
    let gt = cube(rng, 30);
    let mut bundle = CandidateBundle { candidates: vec![], groundtruth: gt, metric: Metric::Cd };
    let mut prev = f64::INFINITY;
    for _ in 0..8 {
        bundle.candidates.push(cube(rng, 30));
        let (v, _) = mon_loss(&bundle).map_err(e2s)?;
        ensure(v <= prev, || format!("MoN rose from {prev} to {v}"))?;
        prev = v;
    }
    Ok("8 appends".into())
}

fn xyz_round_trip(rng: &mut RandomSource) -> Result<String, String> {
    let ps: PointSet = (0..1000)
        .map(|_| Point3::new(rng.uniform() * 1e3 - 500.0, rng.uniform() * 1e-6, -rng.uniform()))
        .collect();
    let back = io::parse_xyz(&io::format_xyz(&ps)).map_err(e2s)?;
    ensure(back == ps, || "coordinates changed".into())?;
    Ok("1000 points".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let out = run_all(7);
        assert_eq!(out.len(), check_names().len());
        for o in &out {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }
}
