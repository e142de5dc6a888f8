//! Chamfer distance.
//!
//! For each point of one set, the squared distance to its nearest neighbor in
//! the other set, summed over both directions. The terms are squared and the
//! sums are not normalized unless [`ChamferOptions::normalize`] is set.
//!
//! The value is not a metric: the triangle inequality does not hold in
//! general, and nothing here tries to enforce it.

mod kdtree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kdtree::{nearest_linear, KdTree, LEAF_SIZE};

use crate::error::Result;
use crate::geom::{DistanceResult, Point3, PointSet};
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Brute,
    #[default]
    KdTree,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "brute" => Ok(Backend::Brute),
            "kdtree" => Ok(Backend::KdTree),
            other => Err(format!("unknown backend `{other}` (expected brute|kdtree)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ChamferOptions {
    pub backend: Backend,
    pub want_grad: bool,
    /// Divide each directed sum by the cardinality of its source set.
    pub normalize: bool,
}

/// For every point of `from`, the index of and squared distance to its nearest
/// point in `to` (lowest index on ties).
pub fn nearest_neighbors(from: &[Point3], to: &PointSet, backend: Backend) -> Result<Vec<(usize, f64)>> {
    match backend {
        Backend::Brute => Ok(from.par_iter().map(|q| nearest_linear(to, q)).collect()),
        Backend::KdTree => {
            let tree = KdTree::build(to)?;
            Ok(from.par_iter().map(|q| tree.nearest(q)).collect())
        }
    }
}

pub fn chamfer_distance(a: &PointSet, b: &PointSet, want_grad: bool, backend: Backend) -> Result<DistanceResult> {
    chamfer_distance_with(a, b, &ChamferOptions { backend, want_grad, normalize: false })
}

pub fn chamfer_distance_with(a: &PointSet, b: &PointSet, opts: &ChamferOptions) -> Result<DistanceResult> {
    a.validate_nonempty()?;
    b.validate_nonempty()?;

    let nn_ab = nearest_neighbors(a, b, opts.backend)?;
    let nn_ba = nearest_neighbors(b, a, opts.backend)?;

    let (wa, wb) = if opts.normalize {
        (1.0 / a.len() as f64, 1.0 / b.len() as f64)
    } else {
        (1.0, 1.0)
    };

    let forward: Vec<f64> = nn_ab.iter().map(|&(_, d)| d).collect();
    let backward: Vec<f64> = nn_ba.iter().map(|&(_, d)| d).collect();
    let value = wa * pairwise_sum(&forward) + wb * pairwise_sum(&backward);

    if !opts.want_grad {
        return Ok(DistanceResult::value_only(value));
    }

    // d/da_i of ‖a_i − b_nn(i)‖² is 2(a_i − b_nn(i)); the same term enters
    // grad_b[nn(i)] with the opposite sign. Likewise for the backward sum.
    let mut grad_a: Vec<Point3> = a
        .iter()
        .zip(&nn_ab)
        .map(|(p, &(j, _))| (*p - b[j]) * (2.0 * wa))
        .collect();
    let mut grad_b: Vec<Point3> = b
        .iter()
        .zip(&nn_ba)
        .map(|(q, &(i, _))| (*q - a[i]) * (2.0 * wb))
        .collect();
    for (i, &(j, _)) in nn_ab.iter().enumerate() {
        grad_b[j] += (b[j] - a[i]) * (2.0 * wa);
    }
    for (j, &(i, _)) in nn_ba.iter().enumerate() {
        grad_a[i] += (a[i] - b[j]) * (2.0 * wb);
    }

    Ok(DistanceResult { value, grad_a: Some(grad_a), grad_b: Some(grad_b) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn ps(v: &[[f64; 3]]) -> PointSet {
        PointSet::from_arrays(v)
    }

    #[test]
    fn identical_sets_are_zero_with_zero_gradient() {
        let a = ps(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        for backend in [Backend::Brute, Backend::KdTree] {
            let r = chamfer_distance(&a, &a, true, backend).unwrap();
            assert_eq!(r.value, 0.0);
            assert!(r.grad_a.unwrap().iter().all(|g| *g == Point3::ZERO));
            assert!(r.grad_b.unwrap().iter().all(|g| *g == Point3::ZERO));
        }
    }

    #[test]
    fn single_pair() {
        let r = chamfer_distance(&ps(&[[0.0, 0.0, 0.0]]), &ps(&[[1.0, 0.0, 0.0]]), true, Backend::Brute).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.grad_a.unwrap()[0], Point3::new(-4.0, 0.0, 0.0));
        assert_eq!(r.grad_b.unwrap()[0], Point3::new(4.0, 0.0, 0.0));
    }

    #[test]
    fn asymmetric_sizes() {
        let a = ps(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]);
        let b = ps(&[[1.0, 0.0, 0.0]]);
        for backend in [Backend::Brute, Backend::KdTree] {
            let r = chamfer_distance(&a, &b, true, backend).unwrap();
            assert_eq!(r.value, 83.0);
            let ga = r.grad_a.unwrap();
            // a_0 is b_0's nearest neighbor, so it gets both terms.
            assert_eq!(ga[0], Point3::new(-4.0, 0.0, 0.0));
            assert_eq!(ga[1], Point3::new(18.0, 0.0, 0.0));
            assert_eq!(r.grad_b.unwrap()[0], Point3::new(2.0 + 2.0 - 18.0, 0.0, 0.0));
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let a = ps(&[[0.0, 0.0, 0.0]]);
        let b = ps(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let nn = nearest_neighbors(&a, &b, Backend::KdTree).unwrap();
        assert_eq!(nn[0].0, 0);
        let r = chamfer_distance(&a, &b, true, Backend::Brute).unwrap();
        // forward picks b_0; both b points pull a_0.
        assert_eq!(r.grad_a.unwrap()[0], Point3::new(-2.0, 0.0, 0.0) + Point3::new(-2.0, 0.0, 0.0) + Point3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn normalize_divides_each_direction() {
        let a = ps(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]);
        let b = ps(&[[1.0, 0.0, 0.0]]);
        let opts = ChamferOptions { backend: Backend::Brute, want_grad: false, normalize: true };
        let r = chamfer_distance_with(&a, &b, &opts).unwrap();
        assert_eq!(r.value, (1.0 + 81.0) / 2.0 + 1.0);
    }

    #[test]
    fn errors() {
        let a = ps(&[[0.0, 0.0, 0.0]]);
        assert!(matches!(chamfer_distance(&a, &PointSet::default(), false, Backend::Brute), Err(Error::EmptySet)));
        let bad = ps(&[[0.0, f64::NAN, 0.0]]);
        assert!(matches!(chamfer_distance(&a, &bad, false, Backend::KdTree), Err(Error::NonFiniteCoordinate(0))));
    }
}
