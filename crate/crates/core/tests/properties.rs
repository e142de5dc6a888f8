use proptest::prelude::*;

use psm_core::chamfer::{chamfer_distance, nearest_linear, Backend, KdTree};
use psm_core::emd::{emd_auction, emd_exact, AuctionParams};
use psm_core::io;
use psm_core::losses::{batch_loss, candidate_distances, mon_loss, CandidateBundle, Metric};
use psm_core::meanshape::{draw_shape, CircleRadius, Family, ShapeDistributionSpec};
use psm_core::sampling::{covering_radius, farthest_point_indices};
use psm_core::voxel::{binarize, iou, splat, Bounds};
use psm_core::{Point3, PointSet, RandomSource};

fn point(range: f64) -> impl Strategy<Value = Point3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn cloud(range: f64, sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(point(range), sizes).prop_map(PointSet)
}

fn pair(range: f64, sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (PointSet, PointSet)> {
    sizes.prop_flat_map(move |n| (cloud(range, n..=n), cloud(range, n..=n)))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn shuffled(ps: &PointSet, seed: u64) -> PointSet {
    let mut v = ps.0.clone();
    let mut rng = RandomSource::new(seed);
    for i in (1..v.len()).rev() {
        v.swap(i, rng.below(i + 1));
    }
    PointSet(v)
}

fn k_center_optimum(ps: &PointSet, k: usize) -> f64 {
    let n = ps.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            let centers: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            best = best.min(covering_radius(ps, &centers));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kdtree_distance_matches_linear_scan(ps in cloud(10.0, 1..=200), q in point(12.0)) {
        let tree = KdTree::build(&ps).unwrap();
        let (i, d) = tree.nearest(&q);
        let (j, e) = nearest_linear(&ps, &q);
        prop_assert_eq!(d, e);
        prop_assert_eq!(i, j);
    }

    #[test]
    fn chamfer_is_symmetric_and_nonnegative(a in cloud(5.0, 1..=60), b in cloud(5.0, 1..=60)) {
        let ab = chamfer_distance(&a, &b, false, Backend::KdTree).unwrap().value;
        let ba = chamfer_distance(&b, &a, false, Backend::KdTree).unwrap().value;
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(chamfer_distance(&a, &a, false, Backend::KdTree).unwrap().value, 0.0);
    }

    #[test]
    fn chamfer_permutation_and_translation_invariant(
        a in cloud(5.0, 1..=60), b in cloud(5.0, 1..=60), t in point(100.0), seed in any::<u64>()
    ) {
        let base = chamfer_distance(&a, &b, false, Backend::Brute).unwrap().value;
        let perm = chamfer_distance(&shuffled(&a, seed), &shuffled(&b, seed ^ 1), false, Backend::Brute).unwrap().value;
        prop_assert!(close(base, perm, 1e-12), "{base} vs {perm}");
        let moved = chamfer_distance(&a.translated(t), &b.translated(t), false, Backend::KdTree).unwrap().value;
        prop_assert!((base - moved).abs() <= 1e-9 * base.max(1.0), "{base} vs {moved}");
    }

    #[test]
    fn emd_is_symmetric_and_bounded_by_centroid_shift((a, b) in pair(5.0, 1..=40)) {
        let (ab, m) = emd_exact(&a, &b, false).unwrap();
        let (ba, _) = emd_exact(&b, &a, false).unwrap();
        prop_assert!(m.is_bijection());
        prop_assert!(close(ab.value, ba.value, 1e-12));
        let shift = a.iter().zip(b.iter()).fold(Point3::ZERO, |acc, (p, q)| acc + (*p - *q));
        prop_assert!(ab.value >= shift.norm() * (1.0 - 1e-12) - 1e-12, "{} < {}", ab.value, shift.norm());
        prop_assert!(ab.value <= a.iter().zip(b.iter()).map(|(p, q)| p.dist(q)).sum::<f64>() * (1.0 + 1e-12));
    }

    #[test]
    fn emd_permutation_and_translation_invariant((a, b) in pair(5.0, 1..=40), t in point(50.0), seed in any::<u64>()) {
        let base = emd_exact(&a, &b, false).unwrap().0.value;
        let perm = emd_exact(&shuffled(&a, seed), &b, false).unwrap().0.value;
        prop_assert!(close(base, perm, 1e-10));
        let moved = emd_exact(&a.translated(t), &b.translated(t), false).unwrap().0.value;
        prop_assert!((base - moved).abs() <= 1e-9 * base.max(1.0));
        prop_assert!(emd_exact(&a, &shuffled(&a, seed), false).unwrap().0.value == 0.0);
    }

    #[test]
    fn auction_respects_certified_bound((a, b) in pair(1.0, 2..=80)) {
        let (ex, _) = emd_exact(&a, &b, false).unwrap();
        let au = emd_auction(&a, &b, &AuctionParams::default(), false).unwrap();
        prop_assert!(au.assignment.is_bijection());
        prop_assert!(au.result.value >= ex.value * (1.0 - 1e-12));
        prop_assert!(au.result.value <= ex.value * (1.0 + au.achieved_eps) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn fps_is_greedy_and_a_two_approximation(ps in cloud(5.0, 1..=10), k in 1usize..4, start in any::<prop::sample::Index>()) {
        let k = k.min(ps.len());
        let start = start.index(ps.len());
        let sel = farthest_point_indices(&ps, k, start).unwrap();
        prop_assert_eq!(sel[0], start);
        for j in 1..k {
            let to_sel = |p: &Point3| sel[..j].iter().map(|&c| p.dist(&ps[c])).fold(f64::INFINITY, f64::min);
            let best = ps.iter().map(to_sel).fold(0.0, f64::max);
            prop_assert_eq!(to_sel(&ps[sel[j]]), best);
        }
        let longer = farthest_point_indices(&ps, ps.len(), start).unwrap();
        prop_assert_eq!(&longer[..k], &sel[..]);
        let opt = k_center_optimum(&ps, k);
        prop_assert!(covering_radius(&ps, &sel) <= 2.0 * opt * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn xyz_round_trips(ps in cloud(1e6, 0..=50)) {
        prop_assert_eq!(io::parse_xyz(&io::format_xyz(&ps)).unwrap(), ps);
    }

    #[test]
    fn grid_round_trips(ps in cloud(2.0, 1..=30), d in 1usize..6, h in 0.1f64..2.0) {
        let origin = Point3::new(-2.0, -2.0, -2.0);
        let g = splat(&ps, d, origin, h, Bounds::Clamp).unwrap();
        prop_assert_eq!(io::parse_grid(&io::format_grid(&g)).unwrap(), g);
    }

    #[test]
    fn splat_values_and_iou_are_bounded(a in cloud(2.0, 1..=40), b in cloud(2.0, 1..=40), t in 0.01f64..1.0) {
        let origin = Point3::new(-2.0, -2.0, -2.0);
        let ga = splat(&a, 6, origin, 4.0 / 6.0, Bounds::Clamp).unwrap();
        prop_assert!(ga.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!(ga.values.iter().sum::<f64>() <= a.len() as f64 + 1e-9);
        let gb = splat(&b, 6, origin, 4.0 / 6.0, Bounds::Clamp).unwrap();
        let (ba, bb) = (binarize(&ga, t).unwrap(), binarize(&gb, t).unwrap());
        let x = iou(&ba, &bb).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(x, iou(&bb, &ba).unwrap());
        prop_assert_eq!(iou(&ba, &ba).unwrap(), 1.0);
    }

    #[test]
    fn mon_is_monotone_and_below_mean(gt in cloud(1.0, 1..=20), cands in prop::collection::vec(cloud(1.0, 1..=20), 1..6)) {
        let mut bundle = CandidateBundle { candidates: vec![], groundtruth: gt, metric: Metric::Cd };
        let mut prev = f64::INFINITY;
        for c in cands {
            bundle.candidates.push(c);
            let (v, i) = mon_loss(&bundle).unwrap();
            let all = candidate_distances(&bundle).unwrap();
            prop_assert!(v <= prev);
            prop_assert_eq!(v, all[i]);
            prop_assert!(all[..i].iter().all(|&d| d > v));
            prop_assert!(v <= all.iter().sum::<f64>() / all.len() as f64 * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn batch_loss_ignores_pair_order(pairs in prop::collection::vec(pair(1.0, 1..=12), 1..8), seed in any::<u64>()) {
        let total = batch_loss(&pairs, Metric::Emd).unwrap();
        let mut reordered = pairs.clone();
        let mut rng = RandomSource::new(seed);
        for i in (1..reordered.len()).rev() {
            reordered.swap(i, rng.below(i + 1));
        }
        prop_assert!(close(total, batch_loss(&reordered, Metric::Emd).unwrap(), 1e-10));
    }

    #[test]
    fn circle_draws_stay_in_radius_band(seed in any::<u64>(), r_min in 0.05f64..0.3, width in 0.0f64..0.15) {
        let c = CircleRadius { center: [0.5, 0.5], r_min, r_max: r_min + width };
        let mut spec = ShapeDistributionSpec::new(Family::CircleRadius(c));
        spec.n_points = 64;
        let ps = draw_shape(&spec, &mut RandomSource::new(seed)).unwrap();
        prop_assert_eq!(ps.len(), 64);
        let center = Point3::new(0.5, 0.5, 0.0);
        let radii: Vec<f64> = ps.iter().map(|p| p.dist(&center)).collect();
        let (lo, hi) = radii.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
        prop_assert!(hi - lo <= 1e-12);
        prop_assert!(lo >= r_min - 1e-12 && hi <= r_min + width + 1e-12);
    }

    #[test]
    fn spec_round_trips(name in prop::sample::select(Family::NAMES.to_vec()), n in 1usize..1000, seed in any::<u64>()) {
        let mut spec = ShapeDistributionSpec::new(Family::default_for(name).unwrap());
        spec.n_points = n;
        spec.seed = seed;
        prop_assert_eq!(io::parse_distribution_spec(&io::format_distribution_spec(&spec)).unwrap(), spec);
    }
}
