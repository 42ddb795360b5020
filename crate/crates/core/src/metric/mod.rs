//! Points, finite point clouds and Hausdorff distances.
//!
//! Compact sets are represented by finite point clouds. A cloud sampled from
//! a continuous set at pitch `p` differs from it by at most `p·√d/2` in the
//! Hausdorff metric, so distances between clouds approximate distances
//! between the sets they sample.

mod index;

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::error::{bail, Result};

pub use index::GridIndex;

/// Distance below which two points are considered the same point.
pub const DEDUP_TOL: f64 = 1e-12;

/// Pair counts above this go through [`GridIndex`] instead of the double loop.
const BRUTE_FORCE_LIMIT: usize = 1 << 16;

/// A point of ℝ^1 or ℝ^2 with finite coordinates.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: u8,
}

impl Point {
    /// Builds a point from a coordinate slice of length 1 or 2.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let p = match coords {
            [x] => Self::raw1(*x),
            [x, y] => Self::raw2(*x, *y),
            _ => bail!(
                InvalidInput,
                "points must have 1 or 2 coordinates, got {}",
                coords.len()
            ),
        };
        if !p.is_finite() {
            bail!(InvalidInput, "non-finite coordinate in {:?}", coords);
        }
        Ok(p)
    }

    /// A point on the line. Panics on a non-finite coordinate.
    pub fn one(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate {x}");
        Self::raw1(x)
    }

    /// A point in the plane. Panics on a non-finite coordinate.
    pub fn two(x: f64, y: f64) -> Self {
        assert!(
            x.is_finite() && y.is_finite(),
            "non-finite coordinate ({x}, {y})"
        );
        Self::raw2(x, y)
    }

    pub(crate) fn raw1(x: f64) -> Self {
        Self {
            coords: [x, 0.0],
            dim: 1,
        }
    }

    pub(crate) fn raw2(x: f64, y: f64) -> Self {
        Self {
            coords: [x, y],
            dim: 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    /// Second coordinate; 0 for points on the line.
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    /// Lexicographic total order on coordinates.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.coords[0]
            .total_cmp(&other.coords[0])
            .then(self.coords[1].total_cmp(&other.coords[1]))
    }

    #[inline]
    pub(crate) fn dist_unchecked(&self, other: &Self) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        (dx * dx + dy * dy).sqrt()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point{:?}", self.coords())
    }
}

impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn metric_distance(p: &Point, q: &Point) -> Result<f64> {
    if p.dim != q.dim {
        bail!(
            InvalidInput,
            "dimension mismatch: {} vs {}",
            p.dim(),
            q.dim()
        );
    }
    Ok(p.dist_unchecked(q))
}

/// A nonempty finite point cloud standing in for a compact set.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSet {
    points: Vec<Point>,
    resolution: f64,
}

impl CompactSet {
    /// Builds an exact finite set (resolution 0). Duplicates within
    /// [`DEDUP_TOL`] are dropped, keeping the first occurrence.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        Self::with_resolution(points, 0.0)
    }

    pub fn with_resolution(points: Vec<Point>, resolution: f64) -> Result<Self> {
        if points.is_empty() {
            bail!(InvalidInput, "compact set must be nonempty");
        }
        if !(resolution >= 0.0 && resolution.is_finite()) {
            bail!(
                InvalidInput,
                "resolution must be finite and >= 0, got {resolution}"
            );
        }
        let dim = points[0].dim;
        if let Some(p) = points.iter().find(|p| p.dim != dim) {
            bail!(
                InvalidInput,
                "mixed dimensions in compact set: {} and {}",
                dim,
                p.dim
            );
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            bail!(InvalidInput, "non-finite point {:?}", p);
        }
        Ok(Self {
            points: dedup_first_occurrence(points, DEDUP_TOL),
            resolution,
        })
    }

    /// Wraps points already known to be finite, of one dimension and sorted
    /// lexicographically with no duplicates.
    pub(crate) fn from_sorted_unique(points: Vec<Point>, resolution: f64) -> Self {
        debug_assert!(!points.is_empty());
        Self { points, resolution }
    }

    pub fn singleton(p: Point) -> Self {
        Self {
            points: vec![p],
            resolution: 0.0,
        }
    }

    /// Samples `[lo, hi]` at `pitch`, always including both endpoints.
    pub fn sample_interval(lo: f64, hi: f64, pitch: f64) -> Result<Self> {
        let n = sample_count(lo, hi, pitch)?;
        let points = (0..=n)
            .map(|k| {
                if k == n {
                    Point::raw1(hi)
                } else {
                    Point::raw1(lo + k as f64 * pitch)
                }
            })
            .collect();
        Self::with_resolution(points, pitch)
    }

    /// Samples the axis-aligned rectangle `[lo, hi]` at `pitch` on both axes.
    pub fn sample_box(lo: [f64; 2], hi: [f64; 2], pitch: f64) -> Result<Self> {
        let nx = sample_count(lo[0], hi[0], pitch)?;
        let ny = sample_count(lo[1], hi[1], pitch)?;
        let axis = |lo: f64, hi: f64, n: usize, k: usize| {
            if k == n {
                hi
            } else {
                lo + k as f64 * pitch
            }
        };
        let mut points = Vec::with_capacity((nx + 1) * (ny + 1));
        for i in 0..=nx {
            for j in 0..=ny {
                points.push(Point::raw2(
                    axis(lo[0], hi[0], nx, i),
                    axis(lo[1], hi[1], ny, j),
                ));
            }
        }
        Self::with_resolution(points, pitch)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Sampling pitch used to generate the cloud; 0 for exact finite sets.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Componentwise bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for a in 0..2 {
                lo[a] = lo[a].min(p.coords[a]);
                hi[a] = hi[a].max(p.coords[a]);
            }
        }
        (lo, hi)
    }

    /// True if every point of `self` lies within `tol` of some point of `other`.
    pub fn is_subset_of(&self, other: &CompactSet, tol: f64) -> Result<bool> {
        Ok(directed_distance(self, other)? <= tol)
    }
}

fn sample_count(lo: f64, hi: f64, pitch: f64) -> Result<usize> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        bail!(InvalidInput, "bad sampling range [{lo}, {hi}]");
    }
    if !(pitch > 0.0 && pitch.is_finite()) {
        bail!(InvalidInput, "sampling pitch must be positive, got {pitch}");
    }
    let n = ((hi - lo) / pitch).round();
    if n > 1e8 {
        bail!(
            InvalidInput,
            "sampling [{lo}, {hi}] at {pitch} gives too many points"
        );
    }
    Ok(n as usize)
}

/// Removes points within `tol` of an earlier point, preserving storage order.
fn dedup_first_occurrence(points: Vec<Point>, tol: f64) -> Vec<Point> {
    let n = points.len();
    if n < 2 {
        return points;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| points[i].lex_cmp(&points[j]).then(i.cmp(&j)));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut keep = vec![false; n];
    for i in 0..n {
        let p = &points[i];
        let r = rank[i];
        let near = |&j: &usize| j < i && keep[j] && p.dist_unchecked(&points[j]) <= tol;
        let left = order[..r]
            .iter()
            .rev()
            .take_while(|&&j| p.x() - points[j].x() <= tol)
            .any(near);
        let right = !left
            && order[r + 1..]
                .iter()
                .take_while(|&&j| points[j].x() - p.x() <= tol)
                .any(near);
        keep[i] = !(left || right);
    }
    points
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

/// Sorts lexicographically and removes points within `tol` of a kept one.
pub(crate) fn sort_dedup(mut points: Vec<Point>, tol: f64) -> Vec<Point> {
    points.par_sort_unstable_by(|a, b| a.lex_cmp(b));
    points.dedup_by(|b, a| a == b);
    if points.first().is_some_and(|p| p.dim() == 1) {
        // sorted on the line: only neighbours can be close
        points.dedup_by(|b, a| b.x() - a.x() <= tol);
        points
    } else {
        dedup_first_occurrence(points, tol)
    }
}

fn check_dims(a: &CompactSet, b: &CompactSet) -> Result<()> {
    if a.dim() != b.dim() {
        bail!(
            InvalidInput,
            "dimension mismatch between sets: {} vs {}",
            a.dim(),
            b.dim()
        );
    }
    Ok(())
}

/// Directed distance `max_{a∈A} min_{b∈B} d(a, b)`. Not symmetric.
pub fn directed_distance(a: &CompactSet, b: &CompactSet) -> Result<f64> {
    check_dims(a, b)?;
    if a.len().saturating_mul(b.len()) <= BRUTE_FORCE_LIMIT {
        Ok(brute::directed(a.points(), b.points()))
    } else {
        Ok(GridIndex::new(b.points()).directed_from(a.points()))
    }
}

/// Hausdorff distance `max{d(A, B), d(B, A)}`.
pub fn hausdorff_distance(a: &CompactSet, b: &CompactSet) -> Result<f64> {
    Ok(directed_distance(a, b)?.max(directed_distance(b, a)?))
}

/// Directed distance together with the realising pair `(i, j)`: `A[i]` is the
/// farthest point of `A` from `B` and `B[j]` its nearest neighbour. Ties go to
/// the first index in storage order.
pub fn directed_distance_witness(a: &CompactSet, b: &CompactSet) -> Result<(f64, usize, usize)> {
    check_dims(a, b)?;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, p) in a.points().iter().enumerate() {
        let (d, j) = b
            .points()
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |acc, (j, q)| {
                let d = p.dist_unchecked(q);
                if d < acc.0 {
                    (d, j)
                } else {
                    acc
                }
            });
        if d > best.0 {
            best = (d, i, j);
        }
    }
    Ok(best)
}

/// The reference O(|A|·|B|) path.
pub mod brute {
    use rayon::prelude::*;

    use super::Point;

    pub fn nearest(p: &Point, b: &[Point]) -> f64 {
        b.iter()
            .map(|q| p.dist_unchecked(q))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn directed(a: &[Point], b: &[Point]) -> f64 {
        a.par_iter().map(|p| nearest(p, b)).reduce(|| 0.0, f64::max)
    }

    pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
        directed(a, b).max(directed(b, a))
    }
}
