//! Non-stationary fractal interpolation on a uniform grid.
//!
//! A stage is the Read–Bajraktarević operator
//! `(T g)(x) = F_i(l_i⁻¹(x), g(l_i⁻¹(x)))` on `[x_{i−1}, x_i]` with affine
//! `l_i` and `F_i(x, y) = q_i(x) + α_i(y)`. Functions are sampled on a grid
//! that contains every node, so pinning `g(x_i) = y_i` is exact.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{ComparisonChain, ComparisonFunction};
use crate::error::{bail, Error, Result};
use crate::maps::ContractiveMap;
use crate::metric::Point;
use crate::schedule::Schedule;
use crate::trajectory::{summability_warning, CauchyRun};
use crate::{DEFAULT_KMAX, DEFAULT_TOL};

pub const DEFAULT_MIN_INTERVALS: usize = 1024;
const MAX_BASE_INTERVALS: usize = 1_000_000;
const NODE_SNAP_TOL: f64 = 1e-9;
pub const JOIN_TOL: f64 = 1e-12;
pub const MATKOWSKI_TOL: f64 = 1e-10;

/// The sampling grid: `m` equal intervals over `[x_0, x_N]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    x0: f64,
    x1: f64,
    m: usize,
    /// Grid index of each interpolation node.
    nodes: Vec<usize>,
}

impl Grid {
    fn fit(xs: &[f64], min_intervals: usize) -> Result<Self> {
        let (x0, x1) = (xs[0], xs[xs.len() - 1]);
        let rel: Vec<f64> = xs.iter().map(|x| (x - x0) / (x1 - x0)).collect();
        let base = (1..=MAX_BASE_INTERVALS).find(|&m| {
            rel.iter().all(|t| {
                let s = t * m as f64;
                (s - s.round()).abs() < NODE_SNAP_TOL * m as f64
            })
        });
        let Some(base) = base else {
            bail!(
                InvalidInput,
                "no uniform grid of at most {MAX_BASE_INTERVALS} intervals contains every node"
            );
        };
        let m = base * min_intervals.max(1).div_ceil(base);
        let nodes = rel
            .iter()
            .map(|t| (t * m as f64).round() as usize)
            .collect();
        Ok(Self { x0, x1, m, nodes })
    }

    pub fn intervals(&self) -> usize {
        self.m
    }

    pub fn pitch(&self) -> f64 {
        (self.x1 - self.x0) / self.m as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.m {
            self.x1
        } else {
            self.x0 + j as f64 * self.pitch()
        }
    }

    pub fn node_indices(&self) -> &[usize] {
        &self.nodes
    }
}

/// Nodes `(x_i, y_i)`, `i = 0..N`, a range `[a, b]` for the values and the
/// grid they live on.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationData {
    nodes: Vec<(f64, f64)>,
    range: (f64, f64),
    grid: Grid,
}

impl InterpolationData {
    /// With `range = None`, `[a, b] = [min y − s, max y + s]` where `s` is the
    /// spread of the data (1 for flat data).
    pub fn new(nodes: Vec<(f64, f64)>, range: Option<(f64, f64)>) -> Result<Self> {
        Self::with_min_intervals(nodes, range, DEFAULT_MIN_INTERVALS)
    }

    pub fn with_min_intervals(
        nodes: Vec<(f64, f64)>,
        range: Option<(f64, f64)>,
        min_intervals: usize,
    ) -> Result<Self> {
        if nodes.len() < 3 {
            bail!(
                InvalidInput,
                "interpolation needs at least 3 nodes (N >= 2), got {}",
                nodes.len()
            );
        }
        if nodes.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            bail!(InvalidInput, "interpolation nodes must be finite");
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[0].0 < w[1].0)) {
            bail!(
                InvalidInput,
                "node abscissae must increase strictly: {} then {}",
                w[0].0,
                w[1].0
            );
        }
        let lo = nodes.iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
        let hi = nodes.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
        let range = match range {
            Some((a, b)) => {
                if !(a <= lo && hi <= b) {
                    bail!(
                        InvalidInput,
                        "range [{a}, {b}] does not contain the data values [{lo}, {hi}]"
                    );
                }
                (a, b)
            }
            None => {
                let s = if hi > lo { hi - lo } else { 1.0 };
                (lo - s, hi + s)
            }
        };
        let xs: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let grid = Grid::fit(&xs, min_intervals)?;
        Ok(Self { nodes, range, grid })
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of segments N.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    fn with_range(&self, range: (f64, f64)) -> Self {
        Self {
            range,
            ..self.clone()
        }
    }
}

/// Samples of a continuous function at every grid point, pinned to the data.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    data: Arc<InterpolationData>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(data: Arc<InterpolationData>, values: Vec<f64>) -> Result<Self> {
        if values.len() != data.grid.m + 1 {
            bail!(
                InvalidInput,
                "expected {} samples, got {}",
                data.grid.m + 1,
                values.len()
            );
        }
        let (a, b) = data.range;
        if let Some(v) = values.iter().find(|v| !(a..=b).contains(*v)) {
            bail!(InvalidInput, "sample {v} lies outside the range [{a}, {b}]");
        }
        for (&j, &(_, y)) in data.grid.nodes.iter().zip(&data.nodes) {
            if values[j] != y {
                bail!(
                    InvalidInput,
                    "function is not pinned: value {} at node {j}, expected {y}",
                    values[j]
                );
            }
        }
        Ok(Self { data, values })
    }

    /// The polygon through the data.
    pub fn piecewise_linear(data: Arc<InterpolationData>) -> Self {
        let mut values = vec![0.0; data.grid.m + 1];
        for (w, seg) in data.grid.nodes.windows(2).zip(data.nodes.windows(2)) {
            let (j0, j1) = (w[0], w[1]);
            let (y0, y1) = (seg[0].1, seg[1].1);
            for (j, v) in values.iter_mut().enumerate().take(j1 + 1).skip(j0) {
                let t = (j - j0) as f64 / (j1 - j0) as f64;
                *v = y0 + t * (y1 - y0);
            }
        }
        pin(&data, &mut values);
        Self { data, values }
    }

    /// Samples `f` at the grid points and pins the nodes.
    pub fn from_fn(data: Arc<InterpolationData>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = (0..=data.grid.m).map(|j| f(data.grid.x(j))).collect();
        pin(&data, &mut values);
        Self::new(data, values)
    }

    pub fn data(&self) -> &Arc<InterpolationData> {
        &self.data
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(x_j, g(x_j))` for every grid point.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.data.grid.x(j), v))
            .collect()
    }

    /// Linear interpolation between samples; `x` is clamped to the interval.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.data.grid;
        let s = ((x - g.x0) / g.pitch()).clamp(0.0, g.m as f64);
        let j = (s.floor() as usize).min(g.m - 1);
        let t = s - j as f64;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn pin(data: &InterpolationData, values: &mut [f64]) {
    for (&j, &(_, y)) in data.grid.nodes.iter().zip(&data.nodes) {
        values[j] = y;
    }
}

/// One operator `T_k`: vertical maps `α_i` with the affine parts `q_i(x) = c_i·x + d_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FifOperatorStage {
    data: Arc<InterpolationData>,
    vertical: Vec<ContractiveMap>,
    q: Vec<(f64, f64)>,
    phi: ComparisonFunction,
}

impl FifOperatorStage {
    /// Solves `q_i` from the join conditions `F_i(x_0, y_0) = y_{i−1}` and
    /// `F_i(x_N, y_N) = y_i`.
    pub fn new(data: Arc<InterpolationData>, vertical: Vec<ContractiveMap>) -> Result<Self> {
        let (x0, y0) = data.nodes[0];
        let (xn, yn) = data.nodes[data.segments()];
        let mut q = Vec::with_capacity(vertical.len());
        for (i, alpha) in vertical.iter().enumerate() {
            let lo = alpha.apply(&Point::one(y0));
            let hi = alpha.apply(&Point::one(yn));
            let (Ok(lo), Ok(hi)) = (lo, hi) else {
                bail!(
                    InvalidStage,
                    "vertical map {} is undefined at the end values",
                    i + 1
                );
            };
            let (Some(&(_, ya)), Some(&(_, yb))) = (data.nodes.get(i), data.nodes.get(i + 1))
            else {
                break;
            };
            let c = ((yb - hi.x()) - (ya - lo.x())) / (xn - x0);
            q.push((c, ya - lo.x() - c * x0));
        }
        Self::with_offsets(data, vertical, q)
    }

    /// A stage with explicit `q_i = (c_i, d_i)`; the join conditions are
    /// checked to within [`JOIN_TOL`].
    pub fn with_offsets(
        data: Arc<InterpolationData>,
        vertical: Vec<ContractiveMap>,
        q: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = data.segments();
        if vertical.len() != n || q.len() != n {
            bail!(
                InvalidStage,
                "a stage needs {n} vertical maps and offsets, got {} and {}",
                vertical.len(),
                q.len()
            );
        }
        let (a, b) = data.range;
        for (i, alpha) in vertical.iter().enumerate() {
            if alpha.dim() != 1 {
                bail!(
                    InvalidStage,
                    "vertical map {} must act on the real line",
                    i + 1
                );
            }
            let d = alpha.domain();
            if a < d.lo()[0] || b > d.hi()[0] {
                bail!(
                    InvalidStage,
                    "range [{a}, {b}] is not inside the domain of vertical map {} ({:?})",
                    i + 1,
                    d
                );
            }
        }
        let stage = Self {
            phi: ComparisonFunction::max(vertical.iter().map(|m| m.phi().clone()).collect())?,
            data,
            vertical,
            q,
        };
        let (x0, y0) = stage.data.nodes[0];
        let (xn, yn) = stage.data.nodes[n];
        for i in 0..n {
            let left = stage.f(i, x0, y0);
            let right = stage.f(i, xn, yn);
            let (ya, yb) = (stage.data.nodes[i].1, stage.data.nodes[i + 1].1);
            if !((left - ya).abs() <= JOIN_TOL && (right - yb).abs() <= JOIN_TOL) {
                bail!(
                    InvalidStage,
                    "join conditions fail on segment {}: F(x0, y0) = {left} (want {ya}), F(xN, yN) = {right} (want {yb})",
                    i + 1
                );
            }
        }
        Ok(stage)
    }

    /// Every segment gets `y ↦ s·y`.
    pub fn affine(data: Arc<InterpolationData>, scale: f64) -> Result<Self> {
        let alpha = ContractiveMap::affine1d(scale, 0.0)?;
        let n = data.segments();
        Self::new(data, vec![alpha; n])
    }

    #[inline]
    fn f(&self, i: usize, x: f64, y: f64) -> f64 {
        let (c, d) = self.q[i];
        c * x + d + self.vertical[i].image_unchecked(&Point::raw1(y)).x()
    }

    pub fn data(&self) -> &Arc<InterpolationData> {
        &self.data
    }

    pub fn vertical(&self) -> &[ContractiveMap] {
        &self.vertical
    }

    pub fn offsets(&self) -> &[(f64, f64)] {
        &self.q
    }

    /// The shared vertical comparison function `max_i φ_i`.
    pub fn phi(&self) -> &ComparisonFunction {
        &self.phi
    }

    /// `max_i |c_i|`, the Lipschitz constant of `F` in `x`.
    pub fn lipschitz_x(&self) -> f64 {
        self.q.iter().map(|q| q.0.abs()).fold(0.0, f64::max)
    }
}

/// `T g`: on segment i, `F_i(l_i⁻¹(x), g(l_i⁻¹(x)))`, with nodes pinned.
pub fn apply_t(stage: &FifOperatorStage, g: &GridFunction) -> Result<GridFunction> {
    if g.data != stage.data && *g.data != *stage.data {
        bail!(
            InvalidInput,
            "function and stage are built on different data"
        );
    }
    let grid = &stage.data.grid;
    let (m, x0, h) = (grid.m, grid.x0, grid.pitch());
    let nodes = &grid.nodes;
    let (a, b) = stage.data.range;
    let mut values: Vec<f64> = (0..=m)
        .into_par_iter()
        .map(|j| {
            // segment i holds nodes[i]..=nodes[i+1]
            let i = nodes.partition_point(|&n| n <= j).clamp(1, nodes.len() - 1) - 1;
            let (j0, len) = (nodes[i], nodes[i + 1] - nodes[i]);
            // preimage grid position (j − j0)·m / len, split exactly
            let num = (j - j0) * m;
            let (idx, rem) = (num / len, num % len);
            let (u, y) = if rem == 0 {
                (grid.x(idx), g.values[idx])
            } else {
                let t = rem as f64 / len as f64;
                (
                    x0 + (idx as f64 + t) * h,
                    g.values[idx] * (1.0 - t) + g.values[idx + 1] * t,
                )
            };
            stage.f(i, u, y.clamp(a, b))
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    pin(&stage.data, &mut values);
    Ok(GridFunction {
        data: stage.data.clone(),
        values,
    })
}

/// An indexed family `k ↦ T_k` of stages on shared data.
#[derive(Clone, Debug)]
pub struct FifSequence {
    stages: Schedule<FifOperatorStage>,
}

impl FifSequence {
    pub fn new(stages: Schedule<FifOperatorStage>) -> Result<Self> {
        {
            let mut stored = stages.stored();
            if let Some(first) = stored.next() {
                if stored.any(|s| *s.data != *first.data) {
                    bail!(InvalidInput, "all stages must share the interpolation data");
                }
            }
        }
        Ok(Self { stages })
    }

    pub fn stationary(stage: FifOperatorStage) -> Self {
        Self {
            stages: Schedule::constant(stage),
        }
    }

    pub fn get(&self, k: usize) -> FifOperatorStage {
        self.stages.get(k).into_owned()
    }

    pub fn chain(&self) -> ComparisonChain {
        ComparisonChain::new(self.stages.map(|s| s.phi().clone()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FifOptions {
    pub tol: f64,
    pub kmax: usize,
    pub summability_depth: usize,
}

impl Default for FifOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            kmax: DEFAULT_KMAX,
            summability_depth: 256,
        }
    }
}

impl FifOptions {
    pub fn new(tol: f64, kmax: usize) -> Self {
        Self {
            tol,
            kmax,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct FifResult {
    /// `Ψ_k(g0)` for the last k computed.
    pub limit: GridFunction,
    pub converged: bool,
    /// `gaps[k − 1] = sup|Ψ_k(g0) − Ψ_{k−1}(g0)|`.
    pub gaps: Vec<f64>,
    pub iterations_used: usize,
    pub warnings: Vec<String>,
}

impl FifResult {
    pub fn last_gap(&self) -> f64 {
        self.gaps.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// `T_1 ∘ … ∘ T_k(g)` for `stages = [T_1, …, T_k]`.
pub fn compose_stages_backward(
    stages: &[FifOperatorStage],
    g: &GridFunction,
) -> Result<GridFunction> {
    let k = stages.len();
    stages.iter().rev().try_fold(g.clone(), |g, s| {
        apply_t(s, &g).map_err(|e| match e {
            Error::Divergence { .. } => Error::Divergence { step: k },
            e => e,
        })
    })
}

/// `Ψ_k(g0) = T_1 ∘ … ∘ T_k(g0)`, recomputed per k, until five consecutive
/// sup-norm gaps fall below tol. Not converging by kmax is reported, not an
/// error.
pub fn fif_backward(seq: &FifSequence, g0: &GridFunction, opts: &FifOptions) -> Result<FifResult> {
    crate::trajectory::TrajectoryOptions::new(opts.tol, opts.kmax).validate()?;
    let mut warnings: Vec<String> = summability_warning(&seq.chain(), opts.summability_depth)
        .into_iter()
        .collect();
    let mut stages = Vec::new();
    let mut prev = g0.clone();
    let mut gaps = Vec::new();
    let mut cauchy = CauchyRun::new(opts.tol);
    let mut converged = false;
    for k in 1..=opts.kmax {
        stages.push(seq.get(k));
        let psi = compose_stages_backward(&stages, g0)?;
        gaps.push(psi.sup_distance(&prev));
        prev = psi;
        if cauchy.push(*gaps.last().unwrap()) {
            converged = true;
            break;
        }
    }
    let (a, b) = prev.data.range;
    if let Some(v) = prev.values.iter().find(|v| !(a..=b).contains(*v)) {
        warnings.push(format!("limit value {v} leaves the range [{a}, {b}]"));
    }
    Ok(FifResult {
        iterations_used: gaps.len(),
        limit: prev,
        converged,
        gaps,
        warnings,
    })
}

/// `sup|T f − f|` on the grid.
pub fn fixed_point_residual(stage: &FifOperatorStage, f: &GridFunction) -> Result<f64> {
    Ok(apply_t(stage, f)?.sup_distance(f))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatkowskiReport {
    pub trials: usize,
    /// Largest `sup|Tg − Th| − φ(sup|g − h|)` seen.
    pub max_excess: f64,
    /// Interpolation allowance `Lip_x(F)·pitch`.
    pub slack: f64,
    pub pass: bool,
}

fn random_pinned(data: &Arc<InterpolationData>, rng: &mut ChaCha8Rng) -> GridFunction {
    let (a, b) = data.range;
    let (a, b) = (a.max(-1e6), b.min(1e6));
    let mut values: Vec<f64> = (0..=data.grid.m).map(|_| rng.gen_range(a..=b)).collect();
    pin(data, &mut values);
    GridFunction {
        data: data.clone(),
        values,
    }
}

/// Checks `sup|Tg − Th| ≤ φ(sup|g − h|)` over `trials` seeded pairs of random
/// pinned functions with values in the data range.
pub fn verify_matkowski(
    stage: &FifOperatorStage,
    trials: usize,
    seed: u64,
) -> Result<MatkowskiReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = trials.max(1);
    let slack = stage.lipschitz_x() * stage.data.grid.pitch();
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..trials {
        let g = random_pinned(&stage.data, &mut rng);
        let h = random_pinned(&stage.data, &mut rng);
        let d = apply_t(stage, &g)?.sup_distance(&apply_t(stage, &h)?);
        max_excess = max_excess.max(d - stage.phi.apply(g.sup_distance(&h)));
    }
    Ok(MatkowskiReport {
        trials,
        max_excess,
        slack,
        pass: max_excess <= MATKOWSKI_TOL + slack,
    })
}

/// Narrows the data range to `[a, b]`; used when the vertical maps only live
/// on part of the line.
pub fn restrict_range(data: &InterpolationData, range: (f64, f64)) -> Result<InterpolationData> {
    let lo = data.nodes.iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
    let hi = data
        .nodes
        .iter()
        .map(|n| n.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(range.0 <= lo && hi <= range.1) {
        bail!(
            InvalidInput,
            "range [{}, {}] does not contain the data values",
            range.0,
            range.1
        );
    }
    Ok(data.with_range(range))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat() -> Arc<InterpolationData> {
        Arc::new(InterpolationData::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], None).unwrap())
    }

    #[test]
    fn grid_contains_nodes() {
        let d = hat();
        assert_eq!(d.grid().intervals(), 1024);
        assert_eq!(d.grid().node_indices(), &[0, 512, 1024]);
        let d = InterpolationData::new(vec![(0.0, 0.0), (1.0, 1.0), (3.0, 0.0)], None).unwrap();
        assert_eq!(d.grid().intervals(), 1026);
        assert_eq!(d.grid().node_indices(), &[0, 342, 1026]);
        let d = InterpolationData::with_min_intervals(
            vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)],
            None,
            4096,
        )
        .unwrap();
        assert_eq!(d.grid().intervals(), 4096);
    }

    #[test]
    fn data_validation() {
        assert!(InterpolationData::new(vec![(0.0, 0.0), (1.0, 1.0)], None).is_err());
        assert!(InterpolationData::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)], None).is_err());
        assert!(
            InterpolationData::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)], Some((0.0, 0.5)))
                .is_err()
        );
        assert_eq!(hat().range(), (-1.0, 2.0));
    }

    #[test]
    fn zero_data_zero_maps_fix_zero() {
        let d = Arc::new(
            InterpolationData::new(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)], None).unwrap(),
        );
        let stage = FifOperatorStage::affine(d.clone(), 0.0).unwrap();
        assert!(stage.offsets().iter().all(|&q| q == (0.0, 0.0)));
        let zero = GridFunction::piecewise_linear(d);
        assert_eq!(apply_t(&stage, &zero).unwrap(), zero);
    }

    #[test]
    fn classical_first_iterate() {
        let d = hat();
        let stage = FifOperatorStage::affine(d.clone(), 0.3).unwrap();
        // hand-solved: F_1(x, y) = 0.3y + x, F_2(x, y) = 0.3y + 1 − x
        assert_eq!(stage.offsets(), &[(1.0, 0.0), (-1.0, 1.0)]);
        let g = GridFunction::piecewise_linear(d.clone());
        let tg = apply_t(&stage, &g).unwrap();
        assert_eq!(tg.values()[512], 1.0);
        for (j, &v) in tg.values().iter().enumerate() {
            let x = j as f64 / 1024.0;
            let (u, i) = if x <= 0.5 {
                (2.0 * x, 0)
            } else {
                (2.0 * x - 1.0, 1)
            };
            let pl = 1.0 - (2.0 * u - 1.0).abs();
            let oracle = if i == 0 {
                u + 0.3 * pl
            } else {
                1.0 - u + 0.3 * pl
            };
            assert!((v - oracle).abs() < 1e-15, "j={j}: {v} vs {oracle}");
        }
    }

    #[test]
    fn broken_join_is_rejected() {
        let d = hat();
        let alpha = ContractiveMap::affine1d(0.3, 0.0).unwrap();
        let err = FifOperatorStage::with_offsets(
            d,
            vec![alpha.clone(), alpha],
            vec![(1.0, 0.0), (0.0, 0.0)],
        );
        assert!(matches!(err, Err(Error::InvalidStage(_))));
        assert!(ContractiveMap::affine1d(1.2, 0.0).is_err());
    }

    /// Independent Picard iteration for the hat data with `α(y) = s·y`:
    /// on the dyadic grid `l_i⁻¹` lands on grid points, so the operator is
    /// plain index arithmetic.
    fn picard_oracle(s: f64, m: usize) -> Vec<f64> {
        let mut f: Vec<f64> = (0..=m)
            .map(|j| 1.0 - (2.0 * j as f64 / m as f64 - 1.0).abs())
            .collect();
        loop {
            let mut next = vec![0.0; m + 1];
            for (j, v) in next.iter_mut().enumerate() {
                let (k, left) = if 2 * j <= m {
                    (2 * j, true)
                } else {
                    (2 * j - m, false)
                };
                let u = k as f64 / m as f64;
                *v = if left { u } else { 1.0 - u } + s * f[k];
            }
            let gap = next
                .iter()
                .zip(&f)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            f = next;
            if gap < 1e-15 {
                return f;
            }
        }
    }

    #[test]
    fn stationary_backward_matches_picard() {
        let d = Arc::new(
            InterpolationData::with_min_intervals(
                vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)],
                None,
                4096,
            )
            .unwrap(),
        );
        let stage = FifOperatorStage::affine(d.clone(), 0.3).unwrap();
        let r = fif_backward(
            &FifSequence::stationary(stage.clone()),
            &GridFunction::piecewise_linear(d),
            &FifOptions::new(1e-10, 200),
        )
        .unwrap();
        assert!(r.converged);
        let oracle = picard_oracle(0.3, 4096);
        let err = r
            .limit
            .values()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(fixed_point_residual(&stage, &r.limit).unwrap() < 1e-10);
    }

    #[test]
    fn zero_vertical_maps_converge_in_one_step() {
        let d = hat();
        let stage = FifOperatorStage::affine(d.clone(), 0.0).unwrap();
        let start = GridFunction::from_fn(d.clone(), |x| (x * 7.0).sin() * 0.5).unwrap();
        let r = fif_backward(
            &FifSequence::stationary(stage.clone()),
            &start,
            &FifOptions::new(1e-12, 50),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.gaps[1..].iter().all(|&g| g == 0.0));
        // with α ≡ 0 every function maps to q_i∘l_i⁻¹, which is the data polygon
        assert!(r.limit.sup_distance(&GridFunction::piecewise_linear(d)) < 1e-15);
    }

    #[test]
    fn alternating_scales_converge_pinned() {
        let d = hat();
        let seq = FifSequence::new(Schedule::periodic(vec![
            FifOperatorStage::affine(d.clone(), 0.3).unwrap(),
            FifOperatorStage::affine(d.clone(), 0.5).unwrap(),
        ]))
        .unwrap();
        let r = fif_backward(
            &seq,
            &GridFunction::piecewise_linear(d.clone()),
            &FifOptions::new(1e-10, 200),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.warnings.is_empty());
        for (&j, &(_, y)) in d.grid().node_indices().iter().zip(d.nodes()) {
            assert_eq!(r.limit.values()[j], y);
        }
        let other = GridFunction::from_fn(d, |x| 0.7 * (x * 9.0).sin()).unwrap();
        let r2 = fif_backward(&seq, &other, &FifOptions::new(1e-10, 200)).unwrap();
        assert!(r.limit.sup_distance(&r2.limit) < 1e-9);
    }

    #[test]
    fn matkowski_checks() {
        let r = verify_matkowski(&FifOperatorStage::affine(hat(), 0.3).unwrap(), 50, 1).unwrap();
        assert!(r.pass, "{r:?}");
        // y ↦ y/(1+y) on nonnegative data
        let d = Arc::new(
            InterpolationData::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)], Some((0.0, 10.0)))
                .unwrap(),
        );
        let mobius = ContractiveMap::mobius();
        let stage = FifOperatorStage::new(d.clone(), vec![mobius.clone(), mobius]).unwrap();
        let r = verify_matkowski(&stage, 50, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(!matches!(stage.phi(), ComparisonFunction::Linear { .. }));
        // the default range dips below zero, outside the mobius domain
        let d = Arc::new(
            InterpolationData::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)], None).unwrap(),
        );
        assert!(FifOperatorStage::new(d, vec![ContractiveMap::mobius(); 2]).is_err());
    }

    #[test]
    fn uneven_nodes_use_interpolated_preimages() {
        let d = Arc::new(
            InterpolationData::new(vec![(0.0, 0.0), (1.0, 1.0), (3.0, 0.5)], None).unwrap(),
        );
        let stage = FifOperatorStage::affine(d.clone(), 0.4).unwrap();
        let g = GridFunction::from_fn(d.clone(), |x| (x * 2.0).cos()).unwrap();
        let tg = apply_t(&stage, &g).unwrap();
        let grid = d.grid();
        for j in [1usize, 100, 341, 343, 700, 1025] {
            let x = grid.x(j);
            let (i, x_lo, x_hi) = if x <= 1.0 {
                (0, 0.0, 1.0)
            } else {
                (1, 1.0, 3.0)
            };
            let u = (x - x_lo) / (x_hi - x_lo) * 3.0;
            let (c, dd) = stage.offsets()[i];
            let oracle = c * u + dd + 0.4 * g.eval(u);
            assert!((tg.values()[j] - oracle).abs() < 1e-12, "j={j}");
        }
    }
}
