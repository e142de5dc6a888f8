//! Static 3-d tree for exact nearest-neighbor queries.
//!
//! Median split on the axis of widest extent, leaves of at most
//! [`LEAF_SIZE`] points. Queries return the lowest index among all points at
//! the minimal squared distance, matching a linear scan exactly.


use crate::error::Result;
use crate::geom::{Point3, PointSet};

pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    /// Points permuted into leaf order, paired with their original index.
    points: Vec<(Point3, usize)>,
}

impl KdTree {
    pub fn build(ps: &PointSet) -> Result<KdTree> {
        ps.validate_nonempty()?;
        let mut points: Vec<(Point3, usize)> =
            ps.iter().copied().enumerate().map(|(i, p)| (p, i)).collect();
        let mut nodes = Vec::with_capacity(2 * ps.len() / LEAF_SIZE + 1);
        let n = points.len();
        build_rec(&mut nodes, &mut points, 0, n);
        Ok(KdTree { nodes, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point; ties go to the lowest index.
    pub fn nearest(&self, q: &Point3) -> (usize, f64) {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, q, &mut best);
        (best.1, best.0)
    }

    fn search(&self, node: usize, q: &Point3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for (p, idx) in &self.points[start..end] {
                    let d = q.dist_sq(p);
                    if d < best.0 || (d == best.0 && *idx < best.1) {
                        *best = (d, *idx);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q.axis(axis) - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // `<=` keeps equal-distance candidates reachable for the index tie-break.
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build_rec(nodes: &mut Vec<Node>, pts: &mut [(Point3, usize)], start: usize, end: usize) -> usize {
    let id = nodes.len();
    let slice = &mut pts[start..end];
    let (lo, hi) = slice[1..]
        .iter()
        .fold((slice[0].0, slice[0].0), |(lo, hi), (p, _)| (lo.min(p), hi.max(p)));
    let extent = hi - lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if slice.len() <= LEAF_SIZE || extent.axis(axis) == 0.0 {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| {
        a.0.axis(axis)
            .total_cmp(&b.0.axis(axis))
            .then_with(|| a.1.cmp(&b.1))
    });
    let value = slice[mid].0.axis(axis);
    nodes.push(Node::Leaf { start, end });
    let left = build_rec(nodes, pts, start, start + mid);
    let right = build_rec(nodes, pts, start + mid, end);
    nodes[id] = Node::Split { axis, value, left, right };
    id
}

/// Linear scan with the same tie rule as the tree.
pub fn nearest_linear(points: &[Point3], q: &Point3) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = q.dist_sq(p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rng::RandomSource;

    fn random_set(rng: &mut RandomSource, n: usize) -> PointSet {
        (0..n)
            .map(|_| Point3::new(rng.uniform(), rng.uniform(), rng.uniform()))
            .collect()
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(KdTree::build(&PointSet::default()), Err(Error::EmptySet)));
    }

    #[test]
    fn singleton_always_answers_itself() {
        let ps = PointSet::from_arrays(&[[1.0, 2.0, 3.0]]);
        let tree = KdTree::build(&ps).unwrap();
        let mut rng = RandomSource::new(3);
        for _ in 0..20 {
            let q = Point3::new(rng.uniform() * 10.0, -rng.uniform(), rng.uniform());
            assert_eq!(tree.nearest(&q).0, 0);
        }
    }

    #[test]
    fn random_queries_match_linear_scan() {
        let mut rng = RandomSource::new(11);
        let ps = random_set(&mut rng, 1000);
        let tree = KdTree::build(&ps).unwrap();
        for _ in 0..100 {
            let q = Point3::new(rng.uniform(), rng.uniform(), rng.uniform());
            let (i, d) = tree.nearest(&q);
            let (j, e) = nearest_linear(&ps, &q);
            assert_eq!((i, d), (j, e));
        }
    }

    #[test]
    fn collinear_and_duplicate_points() {
        let mut ps: PointSet = (0..200).map(|i| Point3::new(i as f64 * 0.5, 0.0, 0.0)).collect();
        ps.extend((0..50).map(|i| Point3::new((i % 7) as f64, 0.0, 0.0)));
        ps.extend(std::iter::repeat_n(Point3::new(3.0, 0.0, 0.0), 40));
        let tree = KdTree::build(&ps).unwrap();
        let mut rng = RandomSource::new(5);
        for _ in 0..300 {
            // Half-integer grid queries produce many exact ties.
            let q = Point3::new((rng.below(240) as f64) * 0.25 - 5.0, 0.0, 0.0);
            assert_eq!(tree.nearest(&q), {
                let (i, d) = nearest_linear(&ps, &q);
                (i, d)
            });
        }
    }

    #[test]
    fn all_identical_points() {
        let ps: PointSet = std::iter::repeat_n(Point3::new(1.0, 1.0, 1.0), 100).collect();
        let tree = KdTree::build(&ps).unwrap();
        assert_eq!(tree.nearest(&Point3::ZERO).0, 0);
    }
}
