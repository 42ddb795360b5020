use std::sync::Arc;

use nsfrac::fif::{
    self, FifOperatorStage, FifOptions, FifSequence, GridFunction, InterpolationData,
};
use nsfrac::maps::{ContractiveMap, MapSequence};
use nsfrac::metric::{hausdorff_distance, CompactSet, Point};
use nsfrac::sfs::{hutchinson, FunctionSystem};
use nsfrac::trajectory::{
    asymptotically_similar, backward_trajectory, forward_trajectory, TrajectoryOptions,
};
use nsfrac::{Direction, Schedule};
use proptest::prelude::*;

fn cloud(dim: usize, max: usize) -> impl Strategy<Value = CompactSet> {
    prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..=max).prop_map(move |v| {
        let pts = v
            .into_iter()
            .map(|(x, y)| {
                if dim == 1 {
                    Point::one(x)
                } else {
                    Point::two(x, y)
                }
            })
            .collect();
        CompactSet::new(pts).unwrap()
    })
}

fn pair(max: usize) -> impl Strategy<Value = (CompactSet, CompactSet)> {
    (1usize..=2).prop_flat_map(move |d| (cloud(d, max), cloud(d, max)))
}

/// Double loop over both clouds.
fn oracle(a: &CompactSet, b: &CompactSet) -> f64 {
    let dist = |p: &Point, q: &Point| {
        p.coords()
            .iter()
            .zip(q.coords())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let directed = |a: &CompactSet, b: &CompactSet| {
        let mut worst: f64 = 0.0;
        for p in a.points() {
            let mut best = f64::INFINITY;
            for q in b.points() {
                best = best.min(dist(p, q));
            }
            worst = worst.max(best);
        }
        worst
    };
    directed(a, b).max(directed(b, a))
}

fn affine(a: f64, b: f64) -> ContractiveMap {
    ContractiveMap::affine1d(a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hausdorff_is_symmetric((a, b) in pair(60)) {
        prop_assert_eq!(hausdorff_distance(&a, &b).unwrap(), hausdorff_distance(&b, &a).unwrap());
    }

    #[test]
    fn hausdorff_triangle((a, b, c) in (1usize..=2).prop_flat_map(|d| (cloud(d, 40), cloud(d, 40), cloud(d, 40)))) {
        let ac = hausdorff_distance(&a, &c).unwrap();
        let ab = hausdorff_distance(&a, &b).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn hausdorff_identity((a, b) in pair(60)) {
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        if hausdorff_distance(&a, &b).unwrap() == 0.0 {
            prop_assert!(a.is_subset_of(&b, 1e-12).unwrap() && b.is_subset_of(&a, 1e-12).unwrap());
        }
    }

    #[test]
    fn hausdorff_matches_double_loop((a, b) in pair(200)) {
        prop_assert!((hausdorff_distance(&a, &b).unwrap() - oracle(&a, &b)).abs() <= 1e-12);
    }

    #[test]
    fn two_map_example_for_any_shift(c in 0.1f64..50.0) {
        let seq = MapSequence::periodic(vec![affine(0.5, 0.0), affine(0.5, c)]).unwrap();
        let tol = 1e-9;
        let opts = TrajectoryOptions::new(tol, 400);
        let b = backward_trajectory(&seq, Point::one(0.0), &opts).unwrap();
        prop_assert!((b.limit.unwrap().x() - 2.0 * c / 3.0).abs() <= tol * c.max(1.0));
        let f = forward_trajectory(&seq, Point::one(0.0), &opts).unwrap();
        let mut acc: Vec<f64> = f.accumulation_points.iter().map(|p| p.x()).collect();
        acc.sort_by(f64::total_cmp);
        prop_assert_eq!(acc.len(), 2);
        prop_assert!((acc[0] - 2.0 * c / 3.0).abs() <= 10.0 * tol * c.max(1.0));
        prop_assert!((acc[1] - 4.0 * c / 3.0).abs() <= 10.0 * tol * c.max(1.0));
    }

    #[test]
    fn backward_limits_do_not_depend_on_the_start(
        maps in prop::collection::vec((-0.8f64..0.8, -5.0f64..5.0), 1..4),
        starts in prop::collection::vec(-100.0f64..100.0, 10),
    ) {
        let seq = MapSequence::periodic(maps.iter().map(|&(a, b)| affine(a, b)).collect()).unwrap();
        let tol = 1e-9;
        let limits: Vec<f64> = starts
            .iter()
            .map(|&x| backward_trajectory(&seq, Point::one(x), &TrajectoryOptions::new(tol, 2000)).unwrap().limit.unwrap().x())
            .collect();
        for l in &limits {
            prop_assert!((l - limits[0]).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn stationary_forward_equals_backward(a in -0.9f64..0.9, b in -5.0f64..5.0, x0 in -50.0f64..50.0) {
        let seq = MapSequence::stationary(affine(a, b));
        let opts = TrajectoryOptions::new(1e-9, 300);
        let f = forward_trajectory(&seq, Point::one(x0), &opts).unwrap();
        let g = backward_trajectory(&seq, Point::one(x0), &opts).unwrap();
        prop_assert_eq!(f.iterates, g.iterates);
    }

    #[test]
    fn backward_gaps_respect_the_chain_bound(
        maps in prop::collection::vec((-0.9f64..0.9, -5.0f64..5.0), 1..4),
        x0 in -50.0f64..50.0,
        y0 in -50.0f64..50.0,
    ) {
        let seq = MapSequence::periodic(maps.iter().map(|&(a, b)| affine(a, b)).collect()).unwrap();
        let r = asymptotically_similar(&seq, Point::one(x0), Point::one(y0), Direction::Backward, 60).unwrap();
        for (g, b) in r.gaps.iter().zip(&r.bounds) {
            prop_assert!(*g <= b + 1e-12);
        }
    }

    #[test]
    fn hutchinson_is_monotone(a in cloud(1, 30), extra in cloud(1, 30)) {
        let sys = FunctionSystem::new(vec![affine(0.5, 1.0), affine(-0.3, 2.0), affine(0.2, -4.0)]).unwrap();
        let mut both = a.points().to_vec();
        both.extend_from_slice(extra.points());
        let b = CompactSet::new(both).unwrap();
        let fa = hutchinson(&sys, &a).unwrap();
        let fb = hutchinson(&sys, &b).unwrap();
        prop_assert!(fa.is_subset_of(&fb, 1e-12).unwrap());
    }

    #[test]
    fn hutchinson_ignores_input_order(a in cloud(2, 80), rot in 0usize..80) {
        let sys = nsfrac::suite::affine_pair_2d().unwrap();
        let sys = FunctionSystem::new(sys.maps().iter().map(|m| m.clone().with_domain(nsfrac::BoxDomain::whole(2)).unwrap()).collect()).unwrap();
        let mut pts = a.points().to_vec();
        let n = pts.len();
        pts.rotate_left(rot % n);
        pts.reverse();
        let b = CompactSet::new(pts).unwrap();
        prop_assert_eq!(hutchinson(&sys, &a).unwrap(), hutchinson(&sys, &b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    // large enough that the grid-indexed search is used
    #[test]
    fn indexed_hausdorff_matches_double_loop(
        (a, b) in (1usize..=2).prop_flat_map(|d| (big_cloud(d), big_cloud(d)))
    ) {
        prop_assert!((hausdorff_distance(&a, &b).unwrap() - oracle(&a, &b)).abs() <= 1e-12);
    }
}

fn big_cloud(dim: usize) -> impl Strategy<Value = CompactSet> {
    prop::collection::vec((-50.0f64..50.0, -5.0f64..5.0), 300..=500).prop_map(move |v| {
        let pts = v
            .into_iter()
            .map(|(x, y)| {
                if dim == 1 {
                    Point::one(x)
                } else {
                    Point::two(x, y)
                }
            })
            .collect();
        CompactSet::new(pts).unwrap()
    })
}

fn hat() -> Arc<InterpolationData> {
    Arc::new(
        InterpolationData::new(vec![(0.0, 0.0), (0.4, 1.0), (0.7, -0.5), (1.0, 0.0)], None)
            .unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fif_iterates_stay_pinned_and_limits_agree(
        scales in prop::collection::vec(-0.6f64..0.6, 1..4),
        freq in 1.0f64..20.0,
    ) {
        let data = hat();
        let stages: Vec<FifOperatorStage> = scales.iter().map(|&s| FifOperatorStage::affine(data.clone(), s).unwrap()).collect();
        let seq = FifSequence::new(Schedule::periodic(stages.clone())).unwrap();
        let tol = 1e-10;
        let opts = FifOptions::new(tol, 300);
        let pl = GridFunction::piecewise_linear(data.clone());
        let wiggly = GridFunction::from_fn(data.clone(), |x| 0.8 * (freq * x).sin()).unwrap();
        let a = fif::fif_backward(&seq, &pl, &opts).unwrap();
        let b = fif::fif_backward(&seq, &wiggly, &opts).unwrap();
        prop_assert!(a.converged && b.converged);
        prop_assert!(a.limit.sup_distance(&b.limit) <= 10.0 * tol);
        let stepped = fif::apply_t(&stages[0], &wiggly).unwrap();
        for (&j, &(_, y)) in data.grid().node_indices().iter().zip(data.nodes()) {
            prop_assert_eq!(a.limit.values()[j], y);
            prop_assert_eq!(stepped.values()[j], y);
        }
        let m = fif::verify_matkowski(&stages[0], 5, freq.to_bits()).unwrap();
        prop_assert!(m.pass);
    }
}
