//! Forward auction with ε-scaling for the min-cost assignment problem.
//!
//! Persons are the points of `a`, objects the points of `b`. Each unassigned
//! person bids for the object minimizing `cost + price`, raising its price by
//! the gap to the second-best object plus ε. A phase ends when everyone is
//! assigned; the assignment then satisfies ε-complementary slackness and its
//! cost is within `s·ε` of the dual bound
//! `Σ_i min_j (c_ij + p_j) − Σ_j p_j ≤ optimum`.
//!
//! Phases shrink ε geometrically (prices carry over) until the certified
//! relative gap `(cost − bound) / bound` drops to the target error ratio, or ε
//! reaches its floor. When the elapsed time passes half the budget, the target
//! ratio is multiplied by `relax_factor` at every following phase boundary;
//! past the full budget the best complete assignment so far is returned. If
//! the first phase itself overruns, its ε is relaxed in place.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::PointSet;

#[derive(Debug, Clone, Serialize)]
pub struct AuctionParams {
    /// Initial ε; `None` means half of the largest pairwise cost.
    pub epsilon_init: Option<f64>,
    /// Per-phase multiplier on ε, in (0, 1).
    pub scaling_factor: f64,
    /// Target relative error; the default floor is `target · bound / s`.
    pub target_rel_err: f64,
    /// Explicit ε floor; `None` derives it from `target_rel_err`.
    pub epsilon_floor: Option<f64>,
    #[serde(serialize_with = "serialize_ms")]
    pub time_budget: Duration,
    /// Multiplier applied to the allowed error ratio (or to ε in the first
    /// phase) under budget pressure.
    pub relax_factor: f64,
    /// How many in-phase ε relaxations are tolerated before giving up.
    pub max_relaxations: u32,
}

fn serialize_ms<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl Default for AuctionParams {
    fn default() -> Self {
        AuctionParams {
            epsilon_init: None,
            scaling_factor: 0.25,
            target_rel_err: 0.01,
            epsilon_floor: None,
            time_budget: Duration::from_secs(1),
            relax_factor: 4.0,
            max_relaxations: 16,
        }
    }
}

impl AuctionParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon_init {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::invalid("epsilon_init", "must be positive and finite"));
            }
        }
        if !(self.scaling_factor > 0.0 && self.scaling_factor < 1.0) {
            return Err(Error::invalid("scaling_factor", "must lie in (0, 1)"));
        }
        if !(self.target_rel_err > 0.0 && self.target_rel_err.is_finite()) {
            return Err(Error::invalid("target_rel_err", "must be positive and finite"));
        }
        if let Some(f) = self.epsilon_floor {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::invalid("epsilon_floor", "must be positive and finite"));
            }
        }
        if !(self.relax_factor > 1.0 && self.relax_factor.is_finite()) {
            return Err(Error::invalid("relax_factor", "must be greater than 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AuctionStats {
    pub phases: u32,
    pub bids: u64,
    pub epsilon_final: f64,
    /// Number of budget-triggered relaxations (error ratio or in-phase ε).
    pub relaxations: u32,
    /// Error ratio in force when the solver stopped.
    pub target_final: f64,
    pub lower_bound: f64,
    pub elapsed_ms: f64,
}

pub(crate) struct Solution {
    pub perm: Vec<usize>,
    pub achieved_eps: f64,
    pub stats: AuctionStats,
}

struct Problem<'a> {
    a: &'a PointSet,
    b: &'a PointSet,
    n: usize,
}

impl Problem<'_> {
    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        self.a[i].dist(&self.b[j])
    }

    fn assignment_cost(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.cost(i, j)).sum()
    }

    fn dual_bound(&self, prices: &[f64]) -> f64 {
        let price_sum: f64 = prices.iter().sum();
        let row_min: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map(|i| {
                (0..self.n)
                    .map(|j| self.cost(i, j) + prices[j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        row_min.iter().sum::<f64>() - price_sum
    }

    fn max_cost(&self) -> f64 {
        (0..self.n)
            .into_par_iter()
            .map(|i| (0..self.n).map(|j| self.cost(i, j)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

enum PhaseOutcome {
    Complete(Vec<usize>),
    Aborted,
}

struct Clock {
    start: Instant,
    budget: Duration,
}

impl Clock {
    fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

fn gap_ratio(cost: f64, bound: f64) -> f64 {
    let bound = bound.max(0.0);
    if cost <= bound {
        0.0
    } else if bound > 0.0 {
        (cost - bound) / bound
    } else {
        f64::INFINITY
    }
}

pub(crate) fn solve(a: &PointSet, b: &PointSet, params: &AuctionParams) -> Result<Solution> {
    params.validate()?;
    let n = a.len();
    let problem = Problem { a, b, n };
    let clock = Clock { start: Instant::now(), budget: params.time_budget };
    let mut stats = AuctionStats { target_final: params.target_rel_err, ..Default::default() };

    let max_cost = problem.max_cost();
    if n == 1 || max_cost == 0.0 {
        let perm: Vec<usize> = (0..n).collect();
        let cost = problem.assignment_cost(&perm);
        stats.lower_bound = cost;
        stats.elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
        return Ok(Solution { perm, achieved_eps: 0.0, stats });
    }

    let mut eps = params.epsilon_init.unwrap_or(max_cost / 2.0);
    let eps_min_abs = max_cost * 1e-13;
    let mut target = params.target_rel_err;
    let mut prices = vec![0.0f64; n];
    // Lowest-cost complete assignment so far, with the ε of its phase.
    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    // Every phase's dual value is a valid lower bound on the optimum; keep the largest.
    let mut lower_bound = 0.0f64;

    loop {
        let outcome = run_phase(&problem, &mut prices, &mut eps, best.is_none(), params, &clock, &mut stats)?;
        let PhaseOutcome::Complete(perm) = outcome else { break };
        stats.phases += 1;
        let cost = problem.assignment_cost(&perm);
        lower_bound = lower_bound.max(problem.dual_bound(&prices));
        if best.as_ref().is_none_or(|(_, c, _)| cost < *c) {
            best = Some((perm, cost, eps));
        }
        let best_cost = best.as_ref().map_or(f64::INFINITY, |b| b.1);

        let elapsed = clock.elapsed();
        if elapsed >= clock.budget {
            break;
        }
        if elapsed * 2 >= clock.budget {
            target *= params.relax_factor;
            stats.relaxations += 1;
        }
        if best_cost - lower_bound <= target * lower_bound {
            break;
        }
        let floor = params
            .epsilon_floor
            .unwrap_or(target * lower_bound / n as f64)
            .max(eps_min_abs);
        if eps <= floor {
            break;
        }
        eps = (eps * params.scaling_factor).max(floor);
    }

    let (perm, cost, eps_final) = best.ok_or(Error::BudgetExhaustedWithoutAssignment)?;
    stats.epsilon_final = eps_final;
    stats.target_final = target;
    stats.lower_bound = lower_bound;
    stats.elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(Solution { perm, achieved_eps: gap_ratio(cost, lower_bound), stats })
}

fn run_phase(
    problem: &Problem<'_>,
    prices: &mut [f64],
    eps: &mut f64,
    first_phase: bool,
    params: &AuctionParams,
    clock: &Clock,
    stats: &mut AuctionStats,
) -> Result<PhaseOutcome> {
    const CHECK_EVERY: u64 = 256;
    let n = problem.n;
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut bids: u64 = 0;
    let mut in_phase_relaxations = 0u32;
    // Once the budget is gone, ε is relaxed again after every further `n` bids.
    let mut relax_at: Option<u64> = None;

    while let Some(i) = queue.pop_front() {
        bids += 1;
        let due = match relax_at {
            None => bids.is_multiple_of(CHECK_EVERY) && clock.elapsed() >= clock.budget,
            Some(at) => bids >= at,
        };
        if due {
            if !first_phase {
                stats.bids += bids;
                return Ok(PhaseOutcome::Aborted);
            }
            if in_phase_relaxations >= params.max_relaxations {
                return Err(Error::BudgetExhaustedWithoutAssignment);
            }
            in_phase_relaxations += 1;
            stats.relaxations += 1;
            *eps *= params.relax_factor;
            relax_at = Some(bids + n as u64);
        }

        let (mut best_j, mut best_v, mut second_v) = (usize::MAX, f64::INFINITY, f64::INFINITY);
        for (j, &p) in prices.iter().enumerate() {
            let v = problem.cost(i, j) + p;
            if v < best_v {
                second_v = best_v;
                best_v = v;
                best_j = j;
            } else if v < second_v {
                second_v = v;
            }
        }
        prices[best_j] += (second_v - best_v) + *eps;
        if let Some(prev) = owner[best_j].replace(i) {
            assigned[prev] = None;
            queue.push_back(prev);
        }
        assigned[i] = Some(best_j);
    }
    stats.bids += bids;
    Ok(PhaseOutcome::Complete(
        assigned.into_iter().map(|j| j.expect("phase ended with everyone assigned")).collect(),
    ))
}
