//! Forward and backward trajectories of map sequences.
//!
//! For maps `T_1, T_2, …` the forward trajectory is
//! `Φ_k(x) = T_k ∘ … ∘ T_1(x)` (the new map applied outermost) and the
//! backward trajectory is `Ψ_k(x) = T_1 ∘ … ∘ T_k(x)` (the new map enters
//! innermost, so every `Ψ_k` is evaluated from scratch).

use serde::{Deserialize, Serialize};

use crate::comparison::ComparisonChain;
use crate::error::{bail, Error, Result};
use crate::maps::{ContractiveMap, MapSequence};
use crate::metric::Point;
use crate::{CAUCHY_RUN, DEFAULT_KMAX, DEFAULT_TOL};

/// Gap below which [`asymptotically_similar`] calls two trajectories similar.
pub const SIMILARITY_TOL: f64 = 1e-9;
/// Slack allowed on the comparison-chain bound of a gap sequence.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug)]
pub struct TrajectoryOptions {
    pub tol: f64,
    pub kmax: usize,
    /// Number of chain terms used for the backward summability warning.
    pub summability_depth: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            kmax: DEFAULT_KMAX,
            summability_depth: 256,
        }
    }
}

impl TrajectoryOptions {
    pub fn new(tol: f64, kmax: usize) -> Self {
        Self {
            tol,
            kmax,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!(InvalidInput, "tolerance must be positive, got {}", self.tol);
        }
        if self.kmax < 1 {
            bail!(InvalidInput, "kmax must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryResult {
    /// `iterates[0]` is the start point, `iterates[k]` the k-th trajectory point.
    pub iterates: Vec<Point>,
    /// `gaps[k - 1] = d(iterates[k], iterates[k - 1])`.
    pub gaps: Vec<f64>,
    pub converged: bool,
    pub limit: Option<Point>,
    pub accumulation_points: Vec<Point>,
    pub iterations_used: usize,
    pub warnings: Vec<String>,
}

/// Tracks the Cauchy criterion: `CAUCHY_RUN` consecutive gaps below tol.
pub(crate) struct CauchyRun {
    tol: f64,
    run: usize,
}

impl CauchyRun {
    pub(crate) fn new(tol: f64) -> Self {
        Self { tol, run: 0 }
    }

    pub(crate) fn push(&mut self, gap: f64) -> bool {
        if gap < self.tol {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.run >= CAUCHY_RUN
    }
}

/// Greedy clustering: each item joins the first cluster whose seed lies
/// within `radius`, otherwise it seeds a new one. Returns the clusters as
/// index lists in order of creation.
pub(crate) fn greedy_clusters<T>(
    items: &[T],
    radius: f64,
    dist: impl Fn(&T, &T) -> f64,
) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|c| dist(&items[c[0]], item) <= radius)
        {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    clusters
}

/// The last quarter of a trajectory (at least one element).
pub(crate) fn last_quarter<T>(items: &[T]) -> &[T] {
    let n = items.len();
    &items[n - (n / 4).max(1)..]
}

/// Cluster centres (member means) of the last quarter of `points`.
pub fn accumulation_points(points: &[Point], radius: f64) -> Vec<Point> {
    let tail = last_quarter(points);
    greedy_clusters(tail, radius, |a, b| a.dist_unchecked(b))
        .into_iter()
        .map(|c| {
            let n = c.len() as f64;
            let (sx, sy) = c.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                (sx + tail[i].x(), sy + tail[i].y())
            });
            if tail[c[0]].dim() == 1 {
                Point::raw1(sx / n)
            } else {
                Point::raw2(sx / n, sy / n)
            }
        })
        .collect()
}

fn step(map: &ContractiveMap, p: &Point, k: usize) -> Result<Point> {
    map.apply(p).map_err(|e| match e {
        Error::Divergence { .. } => Error::Divergence { step: k },
        e => e,
    })
}

fn finish(
    iterates: Vec<Point>,
    gaps: Vec<f64>,
    converged: bool,
    tol: f64,
    warnings: Vec<String>,
) -> TrajectoryResult {
    let last = *iterates.last().expect("trajectory has a start point");
    let accumulation_points = if converged {
        vec![last]
    } else {
        accumulation_points(&iterates, 10.0 * tol)
    };
    TrajectoryResult {
        iterations_used: iterates.len() - 1,
        limit: converged.then_some(last),
        accumulation_points,
        iterates,
        gaps,
        converged,
        warnings,
    }
}

/// Runs `Φ_k(x0) = T_k(Φ_{k−1}(x0))` until the Cauchy criterion holds or
/// `kmax` steps are spent.
pub fn forward_trajectory(
    seq: &MapSequence,
    x0: Point,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryResult> {
    opts.validate()?;
    let mut iterates = vec![x0];
    let mut gaps = Vec::new();
    let mut cauchy = CauchyRun::new(opts.tol);
    let mut converged = false;
    let mut x = x0;
    for k in 1..=opts.kmax {
        let next = step(&seq.get(k), &x, k)?;
        let gap = next.dist_unchecked(&x);
        iterates.push(next);
        gaps.push(gap);
        x = next;
        if cauchy.push(gap) {
            converged = true;
            break;
        }
    }
    Ok(finish(iterates, gaps, converged, opts.tol, Vec::new()))
}

/// Evaluates `T_1 ∘ … ∘ T_k(x0)` given `maps = [T_1, …, T_k]`.
pub fn compose_backward(maps: &[ContractiveMap], x0: &Point) -> Result<Point> {
    let k = maps.len();
    maps.iter().rev().try_fold(*x0, |p, m| step(m, &p, k))
}

/// Single-pass `Ψ_depth(x0)`.
pub fn backward_point(seq: &MapSequence, x0: Point, depth: usize) -> Result<Point> {
    compose_backward(&seq.take(depth), &x0)
}

/// Warning text when the chain's series does not converge numerically.
pub(crate) fn summability_warning(chain: &ComparisonChain, depth: usize) -> Option<String> {
    match chain.series_sum(1.0, depth) {
        Ok(s) if s.converged => None,
        _ => Some(format!(
            "comparison-chain series did not converge within {depth} terms; backward convergence is not guaranteed"
        )),
    }
}

/// Runs `Ψ_k(x0) = T_1 ∘ … ∘ T_k(x0)`, recomputed from scratch for each k,
/// until the Cauchy criterion holds or `kmax` is reached.
pub fn backward_trajectory(
    seq: &MapSequence,
    x0: Point,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryResult> {
    opts.validate()?;
    let warnings: Vec<String> = summability_warning(&seq.chain(), opts.summability_depth)
        .into_iter()
        .collect();
    let mut maps: Vec<ContractiveMap> = Vec::new();
    let mut iterates = vec![x0];
    let mut gaps = Vec::new();
    let mut cauchy = CauchyRun::new(opts.tol);
    let mut converged = false;
    for k in 1..=opts.kmax {
        maps.push(seq.get(k));
        let psi = compose_backward(&maps, &x0)?;
        let gap = psi.dist_unchecked(iterates.last().unwrap());
        iterates.push(psi);
        gaps.push(gap);
        if cauchy.push(gap) {
            converged = true;
            break;
        }
    }
    Ok(finish(iterates, gaps, converged, opts.tol, warnings))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimilarityReport {
    pub similar: bool,
    /// `gaps[k] = d(traj_k(x0), traj_k(y0))`, `k = 0..=kmax`.
    pub gaps: Vec<f64>,
    /// The comparison-chain bound on each gap.
    pub bounds: Vec<f64>,
}

/// Compares the trajectories from `x0` and `y0`. Similar when the final gap
/// is below [`SIMILARITY_TOL`] and the second half of the gap sequence stays
/// under its comparison-chain bound. The backward bound is
/// `φ_1∘…∘φ_k(d0)`; the forward one is `φ_k∘…∘φ_1(d0)`.
pub fn asymptotically_similar(
    seq: &MapSequence,
    x0: Point,
    y0: Point,
    direction: Direction,
    kmax: usize,
) -> Result<SimilarityReport> {
    if x0.dim() != y0.dim() {
        bail!(InvalidInput, "start points have different dimensions");
    }
    let maps = seq.take(kmax);
    let d0 = x0.dist_unchecked(&y0);
    let mut gaps = vec![d0];
    let bounds = match direction {
        Direction::Forward => {
            let (mut x, mut y, mut b) = (x0, y0, d0);
            let mut bounds = vec![d0];
            for (k, m) in maps.iter().enumerate() {
                x = step(m, &x, k + 1)?;
                y = step(m, &y, k + 1)?;
                b = m.phi().apply(b);
                gaps.push(x.dist_unchecked(&y));
                bounds.push(b);
            }
            bounds
        }
        Direction::Backward => {
            for k in 1..=kmax {
                let x = compose_backward(&maps[..k], &x0)?;
                let y = compose_backward(&maps[..k], &y0)?;
                gaps.push(x.dist_unchecked(&y));
            }
            seq.chain().compositions(kmax, d0)?
        }
    };
    let similar = gaps[kmax] < SIMILARITY_TOL
        && (kmax / 2..=kmax).all(|k| gaps[k] <= bounds[k] + BOUND_SLACK);
    Ok(SimilarityReport {
        similar,
        gaps,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::ComparisonFunction;

    fn affine(a: f64, b: f64) -> ContractiveMap {
        ContractiveMap::affine1d(a, b).unwrap()
    }

    fn two_map(c: f64) -> MapSequence {
        MapSequence::periodic(vec![affine(0.5, 0.0), affine(0.5, c)]).unwrap()
    }

    #[test]
    fn banach_example_converges_to_2k() {
        let seq = MapSequence::stationary(affine(0.5, 1.0));
        let r = forward_trajectory(&seq, Point::one(0.0), &TrajectoryOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.limit.unwrap().x() - 2.0).abs() < 1e-9);
        assert!(*r.gaps.last().unwrap() < 1e-9);
    }

    #[test]
    fn alternating_forward_has_two_accumulation_points() {
        let r = forward_trajectory(
            &two_map(3.0),
            Point::one(0.0),
            &TrajectoryOptions::new(1e-9, 200),
        )
        .unwrap();
        assert!(!r.converged);
        assert!(r.limit.is_none());
        let mut xs: Vec<f64> = r.accumulation_points.iter().map(|p| p.x()).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs.len(), 2);
        assert!((xs[0] - 2.0).abs() < 1e-6 && (xs[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn reciprocal_converges_to_golden_ratio_conjugate() {
        let seq = MapSequence::stationary(ContractiveMap::reciprocal());
        let r = forward_trajectory(
            &seq,
            Point::one(1.0),
            &TrajectoryOptions::new(1e-13, 10_000),
        )
        .unwrap();
        let root = (5f64.sqrt() - 1.0) / 2.0;
        assert!(r.converged);
        assert!((r.limit.unwrap().x() - root).abs() < 1e-12);
    }

    #[test]
    fn alternating_backward_converges_to_2c_over_3() {
        for c in [3.0, 0.7, 12.0] {
            for x0 in [0.0, 10.0] {
                let r =
                    backward_trajectory(&two_map(c), Point::one(x0), &TrajectoryOptions::default())
                        .unwrap();
                assert!(r.converged);
                assert!((r.limit.unwrap().x() - 2.0 * c / 3.0).abs() < 1e-9 * c.max(1.0));
                assert!(r.warnings.is_empty());
            }
        }
    }

    #[test]
    fn stationary_sequences_agree_exactly() {
        let seq = MapSequence::stationary(affine(0.5, 1.0));
        let opts = TrajectoryOptions::new(1e-9, 80);
        let f = forward_trajectory(&seq, Point::one(7.0), &opts).unwrap();
        let b = backward_trajectory(&seq, Point::one(7.0), &opts).unwrap();
        assert_eq!(f.iterates, b.iterates);
        assert!((b.limit.unwrap().x() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn shrinking_shifts_backward_limit() {
        // T_i(x) = x/2 + 2^{-i}; Ψ_k(0) = Σ_{i≤k} 2^{-(i-1)}·2^{-i} → 2/3
        let seq = MapSequence::generated(|i| affine(0.5, 0.5f64.powi(i as i32)));
        let r = backward_trajectory(&seq, Point::one(0.0), &TrajectoryOptions::default()).unwrap();
        let mut oracle = 0.0;
        for i in (1..=60).rev() {
            oracle = 0.5 * oracle + 0.5f64.powi(i);
        }
        assert!(r.converged);
        assert!((r.limit.unwrap().x() - oracle).abs() < 1e-9);
        assert!((oracle - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            backward_point(&seq, Point::one(0.0), 60).unwrap(),
            Point::one(oracle)
        );
    }

    #[test]
    fn backward_limit_is_independent_of_start() {
        let seq = MapSequence::periodic(vec![
            ContractiveMap::reciprocal(),
            ContractiveMap::mobius(),
            ContractiveMap::reciprocal(),
        ])
        .unwrap();
        let opts = TrajectoryOptions::new(1e-9, 4000);
        let limits: Vec<f64> = [0.0, 1.0, 5.0, 40.0]
            .iter()
            .map(|&x| backward_trajectory(&seq, Point::one(x), &opts).unwrap())
            .inspect(|r| assert!(!r.warnings.is_empty()))
            .filter(|r| r.converged)
            .map(|r| r.limit.unwrap().x())
            .collect();
        for l in &limits {
            assert!((l - limits[0]).abs() < 1e-7);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let big = MapSequence::stationary(affine(0.5, 1e308));
        let err = forward_trajectory(&big, Point::one(1.7e308), &TrajectoryOptions::new(1e-9, 10));
        assert!(matches!(err, Err(Error::Divergence { step: 1 })));
    }

    #[test]
    fn option_validation() {
        let seq = MapSequence::stationary(affine(0.5, 1.0));
        assert!(
            forward_trajectory(&seq, Point::one(0.0), &TrajectoryOptions::new(0.0, 10)).is_err()
        );
        assert!(
            backward_trajectory(&seq, Point::one(0.0), &TrajectoryOptions::new(1e-9, 0)).is_err()
        );
        assert!(forward_trajectory(
            &MapSequence::stationary(ContractiveMap::reciprocal()),
            Point::one(-1.0),
            &TrajectoryOptions::default()
        )
        .is_err());
    }

    #[test]
    fn similarity_examples() {
        let seq = two_map(3.0);
        let r = asymptotically_similar(
            &seq,
            Point::one(0.0),
            Point::one(10.0),
            Direction::Backward,
            50,
        )
        .unwrap();
        assert!(r.similar);
        let f = asymptotically_similar(
            &seq,
            Point::one(0.0),
            Point::one(10.0),
            Direction::Forward,
            50,
        )
        .unwrap();
        assert!(f.similar);

        let same = asymptotically_similar(
            &seq,
            Point::one(1.0),
            Point::one(1.0),
            Direction::Backward,
            10,
        )
        .unwrap();
        assert!(same.similar);
        assert!(same.gaps.iter().all(|&g| g == 0.0));

        // Π_{j≥2}(1 − 1/j²) = 1/2: the gap plateaus at half the initial distance
        let plateau =
            MapSequence::generated(|i| affine(1.0 - 1.0 / ((i + 1) * (i + 1)) as f64, 0.0));
        let p = asymptotically_similar(
            &plateau,
            Point::one(0.0),
            Point::one(100.0),
            Direction::Backward,
            400,
        )
        .unwrap();
        assert!(!p.similar);
        let last = *p.gaps.last().unwrap();
        let exact = 100.0 * (402.0 / 401.0) / 2.0;
        assert!((last - exact).abs() < 1e-9, "{last} vs {exact}");
    }

    #[test]
    fn similarity_bound_holds_along_backward_gaps() {
        let seq = MapSequence::periodic(vec![
            affine(0.9, 0.1).with_phi(ComparisonFunction::linear(0.9).unwrap()),
            affine(-0.3, 2.0),
        ])
        .unwrap();
        let r = asymptotically_similar(
            &seq,
            Point::one(-4.0),
            Point::one(9.0),
            Direction::Backward,
            60,
        )
        .unwrap();
        for (g, b) in r.gaps.iter().zip(&r.bounds) {
            assert!(*g <= b + BOUND_SLACK);
        }
    }
}
