//! Earth Mover's distance between equal-size point sets.
//!
//! `d(a, b) = min over bijections φ of Σ ‖a_i − b_φ(i)‖₂`. Costs are plain
//! Euclidean norms, not squared (unlike Chamfer). Small instances go to an
//! exact O(s³) Hungarian solver; larger ones to an ε-scaling auction with a
//! time budget.

mod auction;
mod hungarian;

use serde::Serialize;

pub use auction::{AuctionParams, AuctionStats};

use crate::error::{Error, Result};
use crate::geom::{DistanceResult, Point3, PointSet};
use crate::numeric::pairwise_sum;

/// Largest instance the exact solver accepts.
pub const EXACT_LIMIT: usize = 512;
/// The dispatcher uses the exact solver up to and including this size.
pub const DISPATCH_THRESHOLD: usize = 256;

/// A bijection from indices of `a` to indices of `b` with its pair costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub total_cost: f64,
    pub per_pair_cost: Vec<f64>,
}

impl Assignment {
    fn from_perm(a: &PointSet, b: &PointSet, perm: Vec<usize>) -> Self {
        let per_pair_cost: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| a[i].dist(&b[j])).collect();
        let total_cost = pairwise_sum(&per_pair_cost);
        Assignment { perm, total_cost, per_pair_cost }
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.perm.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
    }

    /// The inverse matching, from `b` back to `a`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmdBackend {
    Exact,
    Auction,
}

impl EmdBackend {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmdBackend::Exact => "exact",
            EmdBackend::Auction => "auction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuctionResult {
    pub result: DistanceResult,
    pub assignment: Assignment,
    /// Certified relative error bound: `cost ≤ (1 + achieved_eps) · optimum`.
    pub achieved_eps: f64,
    pub stats: AuctionStats,
}

#[derive(Debug, Clone)]
pub struct EmdResult {
    pub result: DistanceResult,
    pub assignment: Assignment,
    pub backend: EmdBackend,
    /// Zero for the exact backend.
    pub achieved_eps: f64,
    pub stats: Option<AuctionStats>,
}

fn check_pair(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { a: a.len(), b: b.len() });
    }
    a.validate_nonempty()?;
    b.validate_nonempty()
}

/// Gradients of `Σ ‖a_i − b_φ(i)‖` for a fixed matching. Coincident pairs
/// contribute zero, which is a valid subgradient there.
pub fn matching_gradients(a: &PointSet, b: &PointSet, perm: &[usize]) -> (Vec<Point3>, Vec<Point3>) {
    let mut grad_a = vec![Point3::ZERO; a.len()];
    let mut grad_b = vec![Point3::ZERO; b.len()];
    for (i, &j) in perm.iter().enumerate() {
        let d = a[i] - b[j];
        let norm = d.norm();
        if norm > 0.0 {
            let unit = d * (1.0 / norm);
            grad_a[i] = unit;
            grad_b[j] = -unit;
        }
    }
    (grad_a, grad_b)
}

fn to_result(a: &PointSet, b: &PointSet, assignment: &Assignment, want_grad: bool) -> DistanceResult {
    if want_grad {
        let (ga, gb) = matching_gradients(a, b, &assignment.perm);
        DistanceResult { value: assignment.total_cost, grad_a: Some(ga), grad_b: Some(gb) }
    } else {
        DistanceResult::value_only(assignment.total_cost)
    }
}

pub fn emd_exact(a: &PointSet, b: &PointSet, want_grad: bool) -> Result<(DistanceResult, Assignment)> {
    check_pair(a, b)?;
    let n = a.len();
    if n > EXACT_LIMIT {
        return Err(Error::InstanceTooLarge { size: n, limit: EXACT_LIMIT });
    }
    let mut cost = Vec::with_capacity(n * n);
    for p in a.iter() {
        cost.extend(b.iter().map(|q| p.dist(q)));
    }
    let perm = hungarian::solve(&cost, n);
    let assignment = Assignment::from_perm(a, b, perm);
    Ok((to_result(a, b, &assignment, want_grad), assignment))
}

pub fn emd_auction(a: &PointSet, b: &PointSet, params: &AuctionParams, want_grad: bool) -> Result<AuctionResult> {
    check_pair(a, b)?;
    let sol = auction::solve(a, b, params)?;
    let assignment = Assignment::from_perm(a, b, sol.perm);
    Ok(AuctionResult {
        result: to_result(a, b, &assignment, want_grad),
        assignment,
        achieved_eps: sol.achieved_eps,
        stats: sol.stats,
    })
}

/// Exact for `s ≤ DISPATCH_THRESHOLD`, auction with default parameters otherwise.
pub fn emd(a: &PointSet, b: &PointSet, want_grad: bool) -> Result<EmdResult> {
    emd_with(a, b, want_grad, &AuctionParams::default())
}

pub fn emd_with(a: &PointSet, b: &PointSet, want_grad: bool, params: &AuctionParams) -> Result<EmdResult> {
    check_pair(a, b)?;
    if a.len() <= DISPATCH_THRESHOLD {
        let (result, assignment) = emd_exact(a, b, want_grad)?;
        Ok(EmdResult { result, assignment, backend: EmdBackend::Exact, achieved_eps: 0.0, stats: None })
    } else {
        let r = emd_auction(a, b, params, want_grad)?;
        Ok(EmdResult {
            result: r.result,
            assignment: r.assignment,
            backend: EmdBackend::Auction,
            achieved_eps: r.achieved_eps,
            stats: Some(r.stats),
        })
    }
}
