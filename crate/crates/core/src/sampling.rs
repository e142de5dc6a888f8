//! Resampling point sets.
//!
//! Farthest point sampling selects greedily by Euclidean distance; squared
//! distances are used internally, which yields the same argmax. Ties go to the
//! lowest index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PointSet;
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Fps,
    Random,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fps" => Ok(Method::Fps),
            "random" => Ok(Method::Random),
            other => Err(format!("unknown sampling method `{other}` (expected fps|random)")),
        }
    }
}

fn check_k(ps: &PointSet, k: usize) -> Result<()> {
    ps.validate_nonempty()?;
    if k == 0 || k > ps.len() {
        return Err(Error::KOutOfRange { k, n: ps.len() });
    }
    Ok(())
}

/// FPS with the start point drawn uniformly from `seed`.
pub fn farthest_point_sample(ps: &PointSet, k: usize, seed: u64) -> Result<PointSet> {
    check_k(ps, k)?;
    let start = RandomSource::new(seed).below(ps.len());
    farthest_point_indices(ps, k, start).map(|idx| idx.into_iter().map(|i| ps[i]).collect())
}

/// FPS from a fixed start index. Returns indices in selection order.
pub fn farthest_point_indices(ps: &PointSet, k: usize, start: usize) -> Result<Vec<usize>> {
    check_k(ps, k)?;
    if start >= ps.len() {
        return Err(Error::invalid("start_index", format!("{start} out of range for {} points", ps.len())));
    }
    let mut selected = Vec::with_capacity(k);
    let mut taken = vec![false; ps.len()];
    selected.push(start);
    taken[start] = true;
    let mut min_d: Vec<f64> = ps.iter().map(|p| p.dist_sq(&ps[start])).collect();
    while selected.len() < k {
        let last = ps[*selected.last().unwrap()];
        min_d.par_iter_mut().zip(ps.par_iter()).for_each(|(d, p)| {
            *d = d.min(p.dist_sq(&last));
        });
        // Duplicates of selected points sit at distance 0 and are only picked
        // once every remaining point is such a duplicate.
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_d.iter().enumerate() {
            if d > best_d && !taken[i] {
                best_d = d;
                best = i;
            }
        }
        selected.push(best);
        taken[best] = true;
    }
    Ok(selected)
}

/// `k` distinct indices via a seeded Fisher-Yates prefix.
pub fn random_subsample(ps: &PointSet, k: usize, seed: u64) -> Result<PointSet> {
    check_k(ps, k)?;
    let mut rng = RandomSource::new(seed);
    let mut idx: Vec<usize> = (0..ps.len()).collect();
    for i in 0..k {
        let j = i + rng.below(ps.len() - i);
        idx.swap(i, j);
    }
    Ok(idx[..k].iter().map(|&i| ps[i]).collect())
}

/// Downsample the larger set to the smaller's cardinality; the smaller passes through.
pub fn equalize(a: &PointSet, b: &PointSet, method: Method, seed: u64) -> Result<(PointSet, PointSet)> {
    a.validate_nonempty()?;
    b.validate_nonempty()?;
    let shrink = |ps: &PointSet, k: usize| match method {
        Method::Fps => farthest_point_sample(ps, k, seed),
        Method::Random => random_subsample(ps, k, seed),
    };
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Greater => Ok((shrink(a, b.len())?, b.clone())),
        std::cmp::Ordering::Less => Ok((a.clone(), shrink(b, a.len())?)),
        std::cmp::Ordering::Equal => Ok((a.clone(), b.clone())),
    }
}

/// Largest distance from any point of `ps` to its closest center.
pub fn covering_radius(ps: &PointSet, centers: &[usize]) -> f64 {
    ps.iter()
        .map(|p| centers.iter().map(|&c| p.dist(&ps[c])).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}
