//! φ-contractive point maps on axis-aligned invariant domains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison::{ComparisonChain, ComparisonFunction};
use crate::error::{bail, Error, Result};
use crate::metric::Point;
use crate::schedule::Schedule;

/// Slack for domain membership tests.
const DOMAIN_SLACK: f64 = 1e-12;
/// Half-width used to sample unbounded domains.
const WINDOW: f64 = 100.0;
/// Sample points per axis for the invariance check.
const INVARIANCE_SAMPLES: usize = 101;
/// Tolerance of [`verify_contraction`].
pub const CONTRACTION_TOL: f64 = 1e-12;

/// An axis-aligned box `[lo, hi]` in ℝ^1 or ℝ^2; sides may be unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    lo: [f64; 2],
    hi: [f64; 2],
    dim: u8,
}

impl BoxDomain {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || !(1..=2).contains(&lo.len()) {
            bail!(InvalidInput, "domain bounds must both have 1 or 2 entries");
        }
        let mut d = Self {
            lo: [0.0; 2],
            hi: [0.0; 2],
            dim: lo.len() as u8,
        };
        for a in 0..lo.len() {
            if lo[a].is_nan()
                || hi[a].is_nan()
                || lo[a] > hi[a]
                || lo[a] == f64::INFINITY
                || hi[a] == f64::NEG_INFINITY
            {
                bail!(InvalidInput, "bad domain side [{}, {}]", lo[a], hi[a]);
            }
            d.lo[a] = lo[a];
            d.hi[a] = hi[a];
        }
        Ok(d)
    }

    /// All of ℝ^dim.
    pub fn whole(dim: usize) -> Self {
        assert!((1..=2).contains(&dim));
        let mut d = Self {
            lo: [0.0; 2],
            hi: [0.0; 2],
            dim: dim as u8,
        };
        for a in 0..dim {
            d.lo[a] = f64::NEG_INFINITY;
            d.hi[a] = f64::INFINITY;
        }
        d
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(&[lo], &[hi])
    }

    /// `[lo, ∞)`.
    pub fn half_line(lo: f64) -> Self {
        Self::new(&[lo], &[f64::INFINITY]).expect("finite lower bound")
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim()]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim()]
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && (0..self.dim()).all(|a| {
                let c = p.coords()[a];
                let slack = |b: f64| DOMAIN_SLACK * b.abs().max(1.0);
                c >= self.lo[a] - slack(self.lo[a]) && c <= self.hi[a] + slack(self.hi[a])
            })
    }

    /// A bounded box used for sampling; unbounded sides are cut at
    /// [`WINDOW`] from the finite side or from the origin.
    pub fn sampling_window(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..self.dim() {
            let (l, h) = (self.lo[a], self.hi[a]);
            (lo[a], hi[a]) = match (l.is_finite(), h.is_finite()) {
                (true, true) => (l, h),
                (true, false) => (l, l + WINDOW),
                (false, true) => (h - WINDOW, h),
                (false, false) => (-WINDOW, WINDOW),
            };
        }
        (lo, hi)
    }

    /// Regular grid with `n` points per axis over the sampling window.
    pub fn sample_grid(&self, n: usize) -> Vec<Point> {
        let (lo, hi) = self.sampling_window();
        let n = n.max(2);
        let at = |a: usize, i: usize| lo[a] + (hi[a] - lo[a]) * i as f64 / (n - 1) as f64;
        match self.dim() {
            1 => (0..n).map(|i| Point::raw1(at(0, i))).collect(),
            _ => (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| Point::raw2(at(0, i), at(1, j)))
                .collect(),
        }
    }

    /// Uniform random point of the sampling window.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.sampling_window();
        let mut draw = |a: usize| {
            if hi[a] > lo[a] {
                rng.gen_range(lo[a]..=hi[a])
            } else {
                lo[a]
            }
        };
        match self.dim() {
            1 => Point::raw1(draw(0)),
            _ => {
                let x = draw(0);
                Point::raw2(x, draw(1))
            }
        }
    }
}

/// The concrete point maps supported.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    /// `x ↦ a·x + b`, `|a| < 1`.
    Affine1D { a: f64, b: f64 },
    /// `x ↦ M·x + v` with operator norm `‖M‖ < 1`.
    Affine2D { m: [[f64; 2]; 2], v: [f64; 2] },
    /// `x ↦ 1 / (1 + x)` on `[0, ∞)`.
    Reciprocal,
    /// `x ↦ x / (1 + x)` on `[0, ∞)`.
    Mobius,
}

impl MapKind {
    pub fn dim(&self) -> usize {
        match self {
            MapKind::Affine2D { .. } => 2,
            _ => 1,
        }
    }

    #[inline]
    fn image(&self, p: &Point) -> Point {
        match *self {
            MapKind::Affine1D { a, b } => Point::raw1(a * p.x() + b),
            MapKind::Affine2D { m, v } => Point::raw2(
                m[0][0] * p.x() + m[0][1] * p.y() + v[0],
                m[1][0] * p.x() + m[1][1] * p.y() + v[1],
            ),
            MapKind::Reciprocal => Point::raw1(1.0 / (1.0 + p.x())),
            MapKind::Mobius => Point::raw1(p.x() / (1.0 + p.x())),
        }
    }
}

/// Spectral norm of a 2×2 matrix.
pub fn operator_norm(m: &[[f64; 2]; 2]) -> f64 {
    let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let r = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let q = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let half = 0.5 * (p - r);
    (0.5 * (p + r) + (half * half + q * q).sqrt()).sqrt()
}

/// A point map together with its certified comparison function and an
/// invariant domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractiveMap {
    kind: MapKind,
    phi: ComparisonFunction,
    domain: BoxDomain,
}

impl ContractiveMap {
    /// `x ↦ a·x + b` on ℝ with φ = Linear(|a|).
    pub fn affine1d(a: f64, b: f64) -> Result<Self> {
        if !(a.abs() < 1.0) || !b.is_finite() {
            bail!(
                InvalidParameter,
                "affine map needs |a| < 1 and finite b, got a={a}, b={b}"
            );
        }
        Ok(Self {
            kind: MapKind::Affine1D { a, b },
            phi: ComparisonFunction::linear(a.abs())?,
            domain: BoxDomain::whole(1),
        })
    }

    /// `x ↦ M·x + v` on ℝ² with φ = Linear(‖M‖).
    pub fn affine2d(m: [[f64; 2]; 2], v: [f64; 2]) -> Result<Self> {
        if m.iter().flatten().chain(&v).any(|c| !c.is_finite()) {
            bail!(InvalidParameter, "non-finite affine coefficient");
        }
        let norm = operator_norm(&m);
        if !(norm < 1.0) {
            bail!(
                InvalidParameter,
                "affine map needs operator norm < 1, got {norm}"
            );
        }
        Ok(Self {
            kind: MapKind::Affine2D { m, v },
            phi: ComparisonFunction::linear(norm)?,
            domain: BoxDomain::whole(2),
        })
    }

    /// `x ↦ 1/(1+x)` on `[0, ∞)`, a Rakotch contraction with φ(t) = t/(1+t).
    pub fn reciprocal() -> Self {
        Self {
            kind: MapKind::Reciprocal,
            phi: ComparisonFunction::RatioShift { shift: 1.0 },
            domain: BoxDomain::half_line(0.0),
        }
    }

    /// `x ↦ x/(1+x)` on `[0, ∞)`, a Rakotch contraction with φ(t) = t/(1+t).
    pub fn mobius() -> Self {
        Self {
            kind: MapKind::Mobius,
            phi: ComparisonFunction::RatioShift { shift: 1.0 },
            domain: BoxDomain::half_line(0.0),
        }
    }

    /// Replaces the comparison function. The bound is not checked here; see
    /// [`verify_contraction`].
    pub fn with_phi(mut self, phi: ComparisonFunction) -> Self {
        self.phi = phi;
        self
    }

    /// Restricts the map to `domain`, which must be mapped into itself.
    pub fn with_domain(mut self, domain: BoxDomain) -> Result<Self> {
        if domain.dim() != self.kind.dim() {
            bail!(
                InvalidInput,
                "domain dimension {} does not match map dimension {}",
                domain.dim(),
                self.kind.dim()
            );
        }
        if matches!(self.kind, MapKind::Reciprocal | MapKind::Mobius) && domain.lo()[0] < 0.0 {
            bail!(InvalidInput, "reciprocal and mobius maps live on [0, inf)");
        }
        if let Some(p) = domain
            .sample_grid(INVARIANCE_SAMPLES)
            .into_iter()
            .find(|p| !domain.contains(&self.kind.image(p)))
        {
            bail!(
                Domain,
                "domain is not invariant: {:?} maps to {:?}",
                p,
                self.kind.image(&p)
            );
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn phi(&self) -> &ComparisonFunction {
        &self.phi
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Image of `p`, which must lie in the domain.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        if !self.domain.contains(p) {
            bail!(
                Domain,
                "{:?} is outside the map domain {:?}",
                p,
                self.domain
            );
        }
        let q = self.kind.image(p);
        if !q.is_finite() {
            return Err(Error::Divergence { step: 0 });
        }
        Ok(q)
    }

    #[inline]
    pub(crate) fn image_unchecked(&self, p: &Point) -> Point {
        self.kind.image(p)
    }
}

/// An indexed family `i ↦ T_i` of maps on a shared domain.
#[derive(Clone, Debug)]
pub struct MapSequence {
    maps: Schedule<ContractiveMap>,
}

impl MapSequence {
    pub fn new(maps: Schedule<ContractiveMap>) -> Result<Self> {
        {
            let mut stored = maps.stored();
            if let Some(first) = stored.next() {
                if let Some(other) = stored.find(|m| m.domain != first.domain) {
                    bail!(
                        InvalidInput,
                        "maps of a sequence must share one domain: {:?} vs {:?}",
                        first.domain,
                        other.domain
                    );
                }
            }
        }
        Ok(Self { maps })
    }

    /// `T_i = map` for every i.
    pub fn stationary(map: ContractiveMap) -> Self {
        Self {
            maps: Schedule::constant(map),
        }
    }

    pub fn periodic(maps: Vec<ContractiveMap>) -> Result<Self> {
        Self::new(Schedule::periodic(maps))
    }

    pub fn generated(f: impl Fn(usize) -> ContractiveMap + Send + Sync + 'static) -> Self {
        Self {
            maps: Schedule::generated(f),
        }
    }

    pub fn get(&self, i: usize) -> ContractiveMap {
        self.maps.get(i).into_owned()
    }

    pub fn take(&self, k: usize) -> Vec<ContractiveMap> {
        self.maps.take(k)
    }

    pub fn schedule(&self) -> &Schedule<ContractiveMap> {
        &self.maps
    }

    /// The chain φ_1, φ_2, … of the maps' comparison functions.
    pub fn chain(&self) -> ComparisonChain {
        ComparisonChain::new(self.maps.map(|m| m.phi.clone()))
    }
}

/// Result of [`verify_contraction`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub samples: usize,
    /// Largest `d(f(x), f(y)) − φ(d(x, y))` seen.
    pub max_violation: f64,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub pass: bool,
}

/// Draws `samples` seeded random pairs from the domain and measures how far
/// `d(f(x), f(y)) ≤ φ(d(x, y))` is from failing.
pub fn verify_contraction(f: &ContractiveMap, samples: usize, seed: u64) -> ContractionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_pair = None;
    for _ in 0..samples.max(1) {
        let x = f.domain.random_point(&mut rng);
        let y = f.domain.random_point(&mut rng);
        let lhs = f.image_unchecked(&x).dist_unchecked(&f.image_unchecked(&y));
        let v = lhs - f.phi.apply(x.dist_unchecked(&y));
        if v > max_violation {
            max_violation = v;
            worst_pair = Some((x.coords().to_vec(), y.coords().to_vec()));
        }
    }
    ContractionReport {
        samples: samples.max(1),
        max_violation,
        worst_pair,
        pass: max_violation <= CONTRACTION_TOL,
    }
}

/// `sup_x d(f(x), g(x))` over a sample grid of `f`'s domain.
pub fn uniform_deviation(f: &ContractiveMap, g: &ContractiveMap, grid_n: usize) -> Result<f64> {
    if f.dim() != g.dim() {
        bail!(InvalidInput, "maps of different dimension");
    }
    let mut sup: f64 = 0.0;
    for p in f.domain.sample_grid(grid_n) {
        if g.domain.contains(&p) {
            sup = sup.max(f.image_unchecked(&p).dist_unchecked(&g.image_unchecked(&p)));
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_examples() {
        let k = 1.5;
        let f = ContractiveMap::affine1d(0.5, k).unwrap();
        assert_eq!(f.apply(&Point::one(2.0 * k)).unwrap(), Point::one(2.0 * k));
        assert_eq!(
            ContractiveMap::reciprocal()
                .apply(&Point::one(0.0))
                .unwrap(),
            Point::one(1.0)
        );
        assert_eq!(
            ContractiveMap::mobius().apply(&Point::one(0.0)).unwrap(),
            Point::one(0.0)
        );
    }

    #[test]
    fn apply_outside_domain_fails() {
        let err = ContractiveMap::reciprocal().apply(&Point::one(-2.0));
        assert!(matches!(err, Err(Error::Domain(_))));
        let cantor = ContractiveMap::affine1d(1.0 / 3.0, 0.0)
            .unwrap()
            .with_domain(BoxDomain::interval(0.0, 1.0).unwrap())
            .unwrap();
        assert!(cantor.apply(&Point::one(1.5)).is_err());
        assert!(cantor.apply(&Point::two(0.5, 0.5)).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(ContractiveMap::affine1d(1.0, 0.0).is_err());
        assert!(ContractiveMap::affine1d(-1.2, 0.0).is_err());
        assert!(ContractiveMap::affine2d([[0.9, 0.5], [0.0, 0.9]], [0.0, 0.0]).is_err());
        let shift = ContractiveMap::affine1d(0.5, 2.0).unwrap();
        assert!(shift
            .with_domain(BoxDomain::interval(0.0, 1.0).unwrap())
            .is_err());
    }

    #[test]
    fn operator_norm_of_rotation_scale() {
        let m = [[0.4, -0.3], [0.3, 0.4]];
        assert!((operator_norm(&m) - 0.5).abs() < 1e-15);
        assert!((operator_norm(&[[0.5, 0.0], [0.0, 0.25]]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn verify_contraction_examples() {
        let recip = verify_contraction(&ContractiveMap::reciprocal(), 1000, 1);
        assert!(recip.pass, "{recip:?}");
        let mob = verify_contraction(&ContractiveMap::mobius(), 1000, 1);
        assert!(mob.pass, "{mob:?}");

        let wrong = ContractiveMap::affine1d(0.9, 0.0)
            .unwrap()
            .with_phi(ComparisonFunction::linear(0.5).unwrap());
        let r = verify_contraction(&wrong, 1000, 1);
        assert!(!r.pass);
        // violation is 0.4·d for a pair at distance d
        let (x, y) = r.worst_pair.clone().unwrap();
        let d = (x[0] - y[0]).abs();
        assert!((r.max_violation - 0.4 * d).abs() < 1e-9);
    }

    #[test]
    fn verify_contraction_is_deterministic() {
        let f = ContractiveMap::affine2d([[0.4, -0.3], [0.3, 0.4]], [0.1, 0.2]).unwrap();
        assert_eq!(
            verify_contraction(&f, 300, 9),
            verify_contraction(&f, 300, 9)
        );
        assert!(verify_contraction(&f, 300, 9).pass);
    }

    #[test]
    fn sequences_share_a_domain() {
        let a = ContractiveMap::affine1d(0.5, 0.0).unwrap();
        let b = ContractiveMap::reciprocal();
        assert!(MapSequence::periodic(vec![a.clone(), b]).is_err());
        let seq = MapSequence::periodic(vec![
            a.clone(),
            ContractiveMap::affine1d(0.25, 1.0).unwrap(),
        ])
        .unwrap();
        let chain = seq.chain();
        assert_eq!(chain.compose(2, 8.0).unwrap(), 1.0);
    }

    #[test]
    fn uniform_deviation_of_shifted_maps() {
        let f = ContractiveMap::affine1d(0.5, 0.1).unwrap();
        let g = ContractiveMap::affine1d(0.5, 0.0).unwrap();
        assert!((uniform_deviation(&f, &g, 11).unwrap() - 0.1).abs() < 1e-13);
    }
}
