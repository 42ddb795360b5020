//! Set-valued dynamics: Hutchinson operators, sequences of function systems
//! (SFS) and truncated countable systems (CIFS) acting on point clouds under
//! the Hausdorff metric.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{ComparisonChain, ComparisonFunction};
use crate::error::{bail, Error, Result};
use crate::maps::{BoxDomain, ContractiveMap};
use crate::metric::{self, directed_distance, hausdorff_distance, CompactSet, Point, DEDUP_TOL};
use crate::schedule::Schedule;
use crate::trajectory::{greedy_clusters, last_quarter, summability_warning, CauchyRun};
use crate::{DEFAULT_KMAX, DEFAULT_TOL};

/// Largest cloud a set operator may produce.
pub const DEFAULT_CLOUD_CAP: usize = 1_000_000;
/// Tolerance of [`check_set_lift`].
pub const SET_LIFT_TOL: f64 = 1e-10;
/// Extra terms inspected by the CIFS truncation certificate.
pub const CIFS_CERTIFICATE_TERMS: usize = 10;
/// Largest truncation order a CIFS may reach.
pub const DEFAULT_CIFS_TERM_CAP: usize = 100_000;

/// A finite list of maps on a shared domain, with the system comparison
/// function `max_r φ_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSystem {
    maps: Vec<ContractiveMap>,
    phi: ComparisonFunction,
}

impl FunctionSystem {
    pub fn new(maps: Vec<ContractiveMap>) -> Result<Self> {
        let Some(first) = maps.first() else {
            bail!(InvalidInput, "function system needs at least one map");
        };
        if let Some(m) = maps.iter().find(|m| m.domain() != first.domain()) {
            bail!(
                InvalidInput,
                "maps of a function system must share one domain: {:?} vs {:?}",
                first.domain(),
                m.domain()
            );
        }
        let phi = ComparisonFunction::max(maps.iter().map(|m| m.phi().clone()).collect())?;
        Ok(Self { maps, phi })
    }

    /// `{x/3, x/3 + 2/3}` on `[0, 1]`.
    pub fn cantor() -> Self {
        let unit = BoxDomain::interval(0.0, 1.0).expect("unit interval");
        let map = |b: f64| {
            ContractiveMap::affine1d(1.0 / 3.0, b)
                .and_then(|m| m.with_domain(unit))
                .expect("cantor map")
        };
        Self::new(vec![map(0.0), map(2.0 / 3.0)]).expect("cantor system")
    }

    pub fn maps(&self) -> &[ContractiveMap] {
        &self.maps
    }

    /// The system comparison function, the pointwise max of the members'.
    pub fn phi(&self) -> &ComparisonFunction {
        &self.phi
    }

    pub fn domain(&self) -> &BoxDomain {
        self.maps[0].domain()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }
}

/// Cloud-size control applied after every set-operator application.
#[derive(Clone, Copy, Debug)]
pub struct CloudOptions {
    /// Snap points to a grid of this pitch before deduplicating.
    pub decimation: Option<f64>,
    pub cap: usize,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self {
            decimation: None,
            cap: DEFAULT_CLOUD_CAP,
        }
    }
}

impl CloudOptions {
    pub fn decimated(pitch: f64) -> Self {
        Self {
            decimation: Some(pitch),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.decimation {
            if !(p > 0.0 && p.is_finite()) {
                bail!(InvalidInput, "decimation pitch must be positive, got {p}");
            }
        }
        Ok(())
    }
}

fn snap(p: &Point, pitch: f64) -> Point {
    let s = |c: f64| (c / pitch).round() * pitch;
    match p.dim() {
        1 => Point::raw1(s(p.x())),
        _ => Point::raw2(s(p.x()), s(p.y())),
    }
}

/// Sorts, optionally decimates and deduplicates a raw image cloud.
fn tidy(points: Vec<Point>, resolution: f64, opts: &CloudOptions) -> Result<CompactSet> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    let (points, resolution) = match opts.decimation {
        Some(pitch) => (points.iter().map(|p| snap(p, pitch)).collect(), pitch),
        None => (points, resolution),
    };
    Ok(CompactSet::from_sorted_unique(
        metric::sort_dedup(points, DEDUP_TOL),
        resolution,
    ))
}

/// `F(A) = ∪_r f_r(A)` without decimation.
pub fn hutchinson(system: &FunctionSystem, a: &CompactSet) -> Result<CompactSet> {
    hutchinson_with(system, a, &CloudOptions::default())
}

/// `F(A) = ∪_r f_r(A)`, deduplicated at [`DEDUP_TOL`] and optionally snapped
/// to the decimation grid (Hausdorff error at most `pitch·√d/2`).
pub fn hutchinson_with(
    system: &FunctionSystem,
    a: &CompactSet,
    opts: &CloudOptions,
) -> Result<CompactSet> {
    opts.validate()?;
    image_union(system.maps(), a, opts)
}

fn image_union(maps: &[ContractiveMap], a: &CompactSet, opts: &CloudOptions) -> Result<CompactSet> {
    let raw = maps.len().saturating_mul(a.len());
    if raw > opts.cap {
        return Err(Error::Resource {
            what: "point cloud",
            size: raw,
            cap: opts.cap,
        });
    }
    for m in maps {
        if m.dim() != a.dim() {
            bail!(
                InvalidInput,
                "set of dimension {} fed to a map of dimension {}",
                a.dim(),
                m.dim()
            );
        }
        if let Some(p) = a.points().iter().find(|p| !m.domain().contains(p)) {
            bail!(
                Domain,
                "{:?} lies outside the system domain {:?}",
                p,
                m.domain()
            );
        }
    }
    let points: Vec<Point> = a
        .points()
        .par_iter()
        .flat_map_iter(|p| maps.iter().map(move |m| m.image_unchecked(p)))
        .collect();
    tidy(points, a.resolution(), opts)
}

/// An indexed family `i ↦ F_i` of function systems on a shared domain.
#[derive(Clone, Debug)]
pub struct SfsSequence {
    systems: Schedule<FunctionSystem>,
}

impl SfsSequence {
    pub fn new(systems: Schedule<FunctionSystem>) -> Result<Self> {
        {
            let mut stored = systems.stored();
            if let Some(first) = stored.next() {
                if stored.any(|s| s.domain() != first.domain()) {
                    bail!(InvalidInput, "systems of an SFS must share one domain");
                }
            }
        }
        Ok(Self { systems })
    }

    pub fn stationary(system: FunctionSystem) -> Self {
        Self {
            systems: Schedule::constant(system),
        }
    }

    pub fn periodic(systems: Vec<FunctionSystem>) -> Result<Self> {
        Self::new(Schedule::periodic(systems))
    }

    pub fn get(&self, i: usize) -> FunctionSystem {
        self.systems.get(i).into_owned()
    }

    pub fn schedule(&self) -> &Schedule<FunctionSystem> {
        &self.systems
    }

    /// The chain of system comparison functions φ_i.
    pub fn chain(&self) -> ComparisonChain {
        ComparisonChain::new(self.systems.map(|s| s.phi().clone()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SetTrajectoryOptions {
    pub tol: f64,
    pub kmax: usize,
    pub cloud: CloudOptions,
    pub summability_depth: usize,
}

impl Default for SetTrajectoryOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            kmax: DEFAULT_KMAX,
            cloud: CloudOptions::default(),
            summability_depth: 256,
        }
    }
}

impl SetTrajectoryOptions {
    pub fn new(tol: f64, kmax: usize) -> Self {
        Self {
            tol,
            kmax,
            ..Self::default()
        }
    }

    pub fn decimated(mut self, pitch: f64) -> Self {
        self.cloud.decimation = Some(pitch);
        self
    }

    fn validate(&self) -> Result<()> {
        crate::trajectory::TrajectoryOptions::new(self.tol, self.kmax).validate()?;
        self.cloud.validate()
    }
}

#[derive(Clone, Debug)]
pub struct SetTrajectoryResult {
    /// `iterates[0]` is the start set.
    pub iterates: Vec<CompactSet>,
    /// `gaps[k - 1] = h(iterates[k], iterates[k - 1])`.
    pub gaps: Vec<f64>,
    pub converged: bool,
    pub limit: Option<CompactSet>,
    /// Greedy Hausdorff clusters (radius 10·tol) of the last quarter of the
    /// iterates, represented by their first member.
    pub accumulation_sets: Vec<CompactSet>,
    pub iterations_used: usize,
    pub warnings: Vec<String>,
}

fn finish_sets(
    iterates: Vec<CompactSet>,
    gaps: Vec<f64>,
    converged: bool,
    tol: f64,
    warnings: Vec<String>,
) -> SetTrajectoryResult {
    let last = iterates.last().expect("start set").clone();
    let accumulation_sets = if converged {
        vec![last.clone()]
    } else {
        let tail = last_quarter(&iterates);
        greedy_clusters(tail, 10.0 * tol, |a, b| {
            hausdorff_distance(a, b).unwrap_or(f64::INFINITY)
        })
        .into_iter()
        .map(|c| tail[c[0]].clone())
        .collect()
    };
    SetTrajectoryResult {
        iterations_used: iterates.len() - 1,
        limit: converged.then_some(last),
        accumulation_sets,
        iterates,
        gaps,
        converged,
        warnings,
    }
}

/// `Φ_k(A0) = F_k(Φ_{k−1}(A0))` until `CAUCHY_RUN` consecutive steps move
/// the set by less than tol in the Hausdorff metric.
pub fn sfs_forward(
    seq: &SfsSequence,
    a0: &CompactSet,
    opts: &SetTrajectoryOptions,
) -> Result<SetTrajectoryResult> {
    opts.validate()?;
    let mut iterates = vec![a0.clone()];
    let mut gaps = Vec::new();
    let mut cauchy = CauchyRun::new(opts.tol);
    let mut converged = false;
    for k in 1..=opts.kmax {
        let prev = iterates.last().unwrap();
        let next = image_union(seq.get(k).maps(), prev, &opts.cloud).map_err(|e| at_step(e, k))?;
        let gap = hausdorff_distance(&next, prev)?;
        iterates.push(next);
        gaps.push(gap);
        if cauchy.push(gap) {
            converged = true;
            break;
        }
    }
    Ok(finish_sets(iterates, gaps, converged, opts.tol, Vec::new()))
}

fn at_step(e: Error, k: usize) -> Error {
    match e {
        Error::Divergence { .. } => Error::Divergence { step: k },
        e => e,
    }
}

/// `F_1 ∘ … ∘ F_k(A0)` for `systems = [F_1, …, F_k]`.
pub fn compose_systems_backward(
    systems: &[FunctionSystem],
    a0: &CompactSet,
    cloud: &CloudOptions,
) -> Result<CompactSet> {
    cloud.validate()?;
    let k = systems.len();
    systems.iter().rev().try_fold(a0.clone(), |a, s| {
        image_union(s.maps(), &a, cloud).map_err(|e| at_step(e, k))
    })
}

/// `Ψ_k(A0) = F_1 ∘ … ∘ F_k(A0)`, recomputed per k, until the Hausdorff
/// Cauchy criterion holds. The limit is the non-stationary attractor.
pub fn sfs_backward(
    seq: &SfsSequence,
    a0: &CompactSet,
    opts: &SetTrajectoryOptions,
) -> Result<SetTrajectoryResult> {
    opts.validate()?;
    let warnings: Vec<String> = summability_warning(&seq.chain(), opts.summability_depth)
        .into_iter()
        .collect();
    let mut systems = Vec::new();
    let mut iterates = vec![a0.clone()];
    let mut gaps = Vec::new();
    let mut cauchy = CauchyRun::new(opts.tol);
    let mut converged = false;
    for k in 1..=opts.kmax {
        systems.push(seq.get(k));
        let psi = compose_systems_backward(&systems, a0, &opts.cloud)?;
        let gap = hausdorff_distance(&psi, iterates.last().unwrap())?;
        iterates.push(psi);
        gaps.push(gap);
        if cauchy.push(gap) {
            converged = true;
            break;
        }
    }
    Ok(finish_sets(iterates, gaps, converged, opts.tol, warnings))
}

/// `h(F(A), A)`: how far `A` is from being a fixed point of `F`.
pub fn fixed_point_residual(
    system: &FunctionSystem,
    a: &CompactSet,
    cloud: &CloudOptions,
) -> Result<f64> {
    hausdorff_distance(&hutchinson_with(system, a, cloud)?, a)
}

/// How a CIFS picks its truncation order `N(ε)`.
#[derive(Clone)]
pub enum Truncation {
    /// Smallest N whose next [`CIFS_CERTIFICATE_TERMS`] terms move the union
    /// by less than ε.
    Certificate,
    /// An explicit rule `ε ↦ N(ε)`.
    Rule(Arc<dyn Fn(f64) -> usize + Send + Sync>),
}

impl std::fmt::Debug for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truncation::Certificate => f.write_str("Certificate"),
            Truncation::Rule(_) => f.write_str("Rule(..)"),
        }
    }
}

/// A countable family of maps `f_1, f_2, …` whose operator is the closure of
/// `∪_i f_i(A)`, evaluated through a finite truncation.
#[derive(Clone, Debug)]
pub struct CifsSystem {
    maps: Schedule<ContractiveMap>,
    truncation: Truncation,
    term_cap: usize,
}

#[derive(Clone, Debug)]
pub struct CifsResult {
    pub set: CompactSet,
    /// Truncation order N(ε).
    pub terms: usize,
    /// `h(U_N, U_N ∪ f_{N+1}(A) ∪ … ∪ f_{N+10}(A))`.
    pub certificate_gap: f64,
    pub certified: bool,
}

impl CifsSystem {
    pub fn new(maps: Schedule<ContractiveMap>) -> Self {
        Self {
            maps,
            truncation: Truncation::Certificate,
            term_cap: DEFAULT_CIFS_TERM_CAP,
        }
    }

    pub fn generated(f: impl Fn(usize) -> ContractiveMap + Send + Sync + 'static) -> Self {
        Self::new(Schedule::generated(f))
    }

    pub fn with_rule(mut self, rule: impl Fn(f64) -> usize + Send + Sync + 'static) -> Self {
        self.truncation = Truncation::Rule(Arc::new(rule));
        self
    }

    pub fn with_term_cap(mut self, cap: usize) -> Self {
        self.term_cap = cap;
        self
    }

    pub fn map(&self, i: usize) -> ContractiveMap {
        self.maps.get(i).into_owned()
    }

    /// The function system `{f_1, …, f_n}`.
    pub fn truncated_system(&self, n: usize) -> Result<FunctionSystem> {
        FunctionSystem::new(self.maps.take(n.max(1)))
    }
}

/// `∪_{i≤N(ε)} f_i(A)` with the ten-extra-terms certificate.
pub fn cifs_operator(cifs: &CifsSystem, a: &CompactSet, eps: f64) -> Result<CifsResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        bail!(InvalidInput, "eps must be positive, got {eps}");
    }
    let cloud = CloudOptions::default();
    let image = |i: usize| image_union(&[cifs.map(i)], a, &cloud);
    let union = |sets: &[CompactSet]| -> Result<CompactSet> {
        let pts: Vec<Point> = sets
            .iter()
            .flat_map(|s| s.points().iter().copied())
            .collect();
        tidy(pts, a.resolution(), &cloud)
    };
    let certificate = |u: &CompactSet, n: usize| -> Result<f64> {
        let extra: Vec<CompactSet> = (n + 1..=n + CIFS_CERTIFICATE_TERMS)
            .map(image)
            .collect::<Result<_>>()?;
        directed_distance(&union(&extra)?, u)
    };
    let too_many = |n: usize| Error::Resource {
        what: "CIFS truncation order",
        size: n,
        cap: cifs.term_cap,
    };

    match &cifs.truncation {
        Truncation::Rule(rule) => {
            let n = rule(eps).max(1);
            if n > cifs.term_cap {
                return Err(too_many(n));
            }
            let images: Vec<CompactSet> = (1..=n).map(image).collect::<Result<_>>()?;
            let set = union(&images)?;
            let gap = certificate(&set, n)?;
            Ok(CifsResult {
                set,
                terms: n,
                certificate_gap: gap,
                certified: gap < eps,
            })
        }
        Truncation::Certificate => {
            let mut images = vec![image(1)?];
            loop {
                let n = images.len();
                let set = union(&images)?;
                let gap = certificate(&set, n)?;
                if gap < eps {
                    return Ok(CifsResult {
                        set,
                        terms: n,
                        certificate_gap: gap,
                        certified: true,
                    });
                }
                if n + 1 > cifs.term_cap {
                    return Err(too_many(n + 1));
                }
                images.push(image(n + 1)?);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetLiftReport {
    pub trials: usize,
    /// Largest `h(F(A), F(B)) − φ(h(A, B))` seen.
    pub max_violation: f64,
    pub violations: usize,
    pub pass: bool,
}

fn random_set(domain: &BoxDomain, rng: &mut ChaCha8Rng) -> CompactSet {
    let n = rng.gen_range(1..=100);
    let pts = (0..n).map(|_| domain.random_point(rng)).collect();
    CompactSet::new(pts).expect("random points are finite and share a dimension")
}

/// Checks `h(F(A), F(B)) ≤ φ(h(A, B))` on `trials` seeded random pairs of
/// sets (at most 100 points each) drawn from the system domain. `phi`
/// defaults to the system comparison function.
pub fn check_set_lift(
    system: &FunctionSystem,
    phi: Option<&ComparisonFunction>,
    trials: usize,
    seed: u64,
) -> Result<SetLiftReport> {
    let phi = phi.unwrap_or(system.phi());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = trials.max(1);
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let a = random_set(system.domain(), &mut rng);
        let b = random_set(system.domain(), &mut rng);
        let lhs = hausdorff_distance(&hutchinson(system, &a)?, &hutchinson(system, &b)?)?;
        let v = lhs - phi.apply(hausdorff_distance(&a, &b)?);
        if v > SET_LIFT_TOL {
            violations += 1;
        }
        max_violation = max_violation.max(v);
    }
    Ok(SetLiftReport {
        trials,
        max_violation,
        violations,
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(a: f64, b: f64) -> ContractiveMap {
        ContractiveMap::affine1d(a, b).unwrap()
    }

    fn set1(xs: &[f64]) -> CompactSet {
        CompactSet::new(xs.iter().map(|&x| Point::one(x)).collect()).unwrap()
    }

    fn xs(s: &CompactSet) -> Vec<f64> {
        s.points().iter().map(|p| p.x()).collect()
    }

    #[test]
    fn cantor_step_on_endpoints() {
        let f = FunctionSystem::cantor();
        let img = hutchinson(&f, &set1(&[0.0, 1.0])).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in xs(&img).iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(img.len(), 4);
    }

    #[test]
    fn three_cantor_steps_match_enumeration() {
        let f = FunctionSystem::cantor();
        let mut a = set1(&[0.0, 1.0]);
        for _ in 0..3 {
            a = hutchinson(&f, &a).unwrap();
        }
        // all 2^3 words of the two maps applied to both endpoints
        let mut oracle = Vec::new();
        for word in 0..8u32 {
            for x0 in [0.0f64, 1.0] {
                let mut x = x0;
                for bit in 0..3 {
                    x = x / 3.0 + if word >> bit & 1 == 1 { 2.0 / 3.0 } else { 0.0 };
                }
                oracle.push(x);
            }
        }
        oracle.sort_by(f64::total_cmp);
        assert_eq!(a.len(), 16);
        for (p, q) in xs(&a).iter().zip(&oracle) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn single_map_system_is_the_image() {
        let f = affine(0.5, 1.0);
        let sys = FunctionSystem::new(vec![f.clone()]).unwrap();
        let a = set1(&[0.0, 3.0, -2.0]);
        let img = hutchinson(&sys, &a).unwrap();
        let mut direct: Vec<f64> = a.points().iter().map(|p| f.apply(p).unwrap().x()).collect();
        direct.sort_by(f64::total_cmp);
        assert_eq!(xs(&img), direct);
    }

    #[test]
    fn hutchinson_errors() {
        let f = FunctionSystem::cantor();
        assert!(matches!(
            hutchinson(&f, &set1(&[2.0])),
            Err(Error::Domain(_))
        ));
        let opts = CloudOptions {
            decimation: None,
            cap: 3,
        };
        assert!(matches!(
            hutchinson_with(&f, &set1(&[0.0, 1.0]), &opts),
            Err(Error::Resource { .. })
        ));
        assert!(FunctionSystem::new(vec![]).is_err());
        assert!(FunctionSystem::new(vec![affine(0.5, 0.0), ContractiveMap::reciprocal()]).is_err());
    }

    #[test]
    fn decimation_snaps_to_grid() {
        let f = FunctionSystem::cantor();
        let img = hutchinson_with(&f, &set1(&[0.1, 0.11]), &CloudOptions::decimated(0.1)).unwrap();
        assert_eq!(xs(&img), vec![0.0, 0.7000000000000001]);
        assert_eq!(img.resolution(), 0.1);
    }

    #[test]
    fn forward_cantor_contracts_by_a_third() {
        let seq = SfsSequence::stationary(FunctionSystem::cantor());
        let a0 = CompactSet::sample_interval(0.0, 1.0, 0.1).unwrap();
        let r = sfs_forward(&seq, &a0, &SetTrajectoryOptions::new(1e-9, 7)).unwrap();
        for w in r.gaps.windows(2) {
            assert!((w[1] / w[0] - 1.0 / 3.0).abs() < 1e-9, "{:?}", r.gaps);
        }
    }

    #[test]
    fn forward_singleton_is_point_iteration() {
        let seq = SfsSequence::stationary(FunctionSystem::new(vec![affine(0.5, 1.0)]).unwrap());
        let r = sfs_forward(&seq, &set1(&[0.0]), &SetTrajectoryOptions::new(1e-9, 200)).unwrap();
        assert!(r.converged);
        let lim = r.limit.unwrap();
        assert_eq!(lim.len(), 1);
        assert!((lim.points()[0].x() - 2.0).abs() < 1e-9);
    }

    fn alternating() -> SfsSequence {
        SfsSequence::periodic(vec![
            FunctionSystem::new(vec![affine(0.5, 0.0)]).unwrap(),
            FunctionSystem::new(vec![affine(0.5, 3.0)]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn alternating_sfs_forward_and_backward() {
        let opts = SetTrajectoryOptions::new(1e-9, 200);
        let f = sfs_forward(&alternating(), &set1(&[0.0]), &opts).unwrap();
        assert!(!f.converged);
        let mut acc: Vec<f64> = f.accumulation_sets.iter().map(|s| xs(s)[0]).collect();
        acc.sort_by(f64::total_cmp);
        assert_eq!(acc.len(), 2);
        assert!((acc[0] - 2.0).abs() < 1e-6 && (acc[1] - 4.0).abs() < 1e-6);

        let b = sfs_backward(&alternating(), &set1(&[0.0]), &opts).unwrap();
        assert!(b.converged);
        assert!((xs(b.limit.as_ref().unwrap())[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_scale_backward_limit_exists() {
        let halves = FunctionSystem::new(vec![
            affine(0.5, 0.0)
                .with_domain(BoxDomain::interval(0.0, 1.0).unwrap())
                .unwrap(),
            affine(0.5, 0.5)
                .with_domain(BoxDomain::interval(0.0, 1.0).unwrap())
                .unwrap(),
        ])
        .unwrap();
        let cantor = FunctionSystem::cantor();
        let schedule =
            Schedule::new(vec![cantor; 5], crate::schedule::Tail::Repeat(vec![halves])).unwrap();
        let seq = SfsSequence::new(schedule).unwrap();
        let pitch = 0.5f64.powi(12);
        let opts = SetTrajectoryOptions::new(1e-9, 40).decimated(pitch);
        let r = sfs_backward(&seq, &set1(&[0.0]), &opts).unwrap();
        assert!(r.converged, "{:?}", r.gaps);
        // the halves fill [0, 1], so the limit is the union of the 32 level-5
        // Cantor intervals
        let mut oracle = Vec::new();
        for word in 0..32u32 {
            let left: f64 = (0..5)
                .map(|d| {
                    if word >> d & 1 == 1 {
                        2.0 * 3f64.powi(-(d + 1))
                    } else {
                        0.0
                    }
                })
                .sum();
            for s in 0..=100 {
                oracle.push(Point::one(left + s as f64 / 100.0 * 3f64.powi(-5)));
            }
        }
        let oracle = CompactSet::new(oracle).unwrap();
        let h = hausdorff_distance(r.limit.as_ref().unwrap(), &oracle).unwrap();
        assert!(h < 3f64.powi(-5) / 100.0 + pitch, "{h}");
    }

    #[test]
    fn backward_limit_is_independent_of_the_start_set() {
        let seq = SfsSequence::stationary(FunctionSystem::cantor());
        let opts = SetTrajectoryOptions::new(1e-9, 60).decimated(3f64.powi(-10));
        let from_point = sfs_backward(&seq, &set1(&[0.0]), &opts).unwrap();
        let from_interval = sfs_backward(
            &seq,
            &CompactSet::sample_interval(0.0, 1.0, 0.05).unwrap(),
            &opts,
        )
        .unwrap();
        let h = hausdorff_distance(
            from_point.limit.as_ref().unwrap(),
            from_interval.limit.as_ref().unwrap(),
        )
        .unwrap();
        // both limits live on the decimation grid within one cell of the attractor
        assert!(h <= 3f64.powi(-10) + 1e-8, "{h}");
    }

    #[test]
    fn attractor_residual_is_below_pitch() {
        let pitch = 3f64.powi(-9);
        let seq = SfsSequence::stationary(FunctionSystem::cantor());
        let opts = SetTrajectoryOptions::new(1e-9, 60).decimated(pitch);
        let r = sfs_forward(&seq, &set1(&[0.0]), &opts).unwrap();
        assert!(r.converged);
        let res = fixed_point_residual(
            &FunctionSystem::cantor(),
            r.limit.as_ref().unwrap(),
            &CloudOptions::default(),
        )
        .unwrap();
        assert!(res < pitch + 1e-9, "{res}");
    }

    #[test]
    fn monotone_lift() {
        let f = FunctionSystem::cantor();
        let a = set1(&[0.1, 0.5]);
        let b = set1(&[0.0, 0.1, 0.3, 0.5, 0.9]);
        let fa = hutchinson(&f, &a).unwrap();
        let fb = hutchinson(&f, &b).unwrap();
        assert!(fa.is_subset_of(&fb, DEDUP_TOL).unwrap());
    }

    #[test]
    fn set_lift_examples() {
        let r = check_set_lift(&FunctionSystem::cantor(), None, 200, 3).unwrap();
        assert!(r.pass, "{r:?}");
        let recip = FunctionSystem::new(vec![ContractiveMap::reciprocal()]).unwrap();
        assert!(check_set_lift(&recip, None, 200, 3).unwrap().pass);
        let wrong = ComparisonFunction::linear(0.1).unwrap();
        let r = check_set_lift(&FunctionSystem::cantor(), Some(&wrong), 50, 3).unwrap();
        assert!(!r.pass);
        // A = {0}, B = {1}: h(F(A), F(B)) = 1/3 > 0.1
        let fa = hutchinson(&FunctionSystem::cantor(), &set1(&[0.0])).unwrap();
        let fb = hutchinson(&FunctionSystem::cantor(), &set1(&[1.0])).unwrap();
        assert!((hausdorff_distance(&fa, &fb).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    fn geometric_cifs() -> CifsSystem {
        // f_i(x) = x / 2^{i+1}
        CifsSystem::generated(|i| affine(0.5f64.powi(i as i32 + 1), 0.0))
    }

    #[test]
    fn cifs_geometric_truncation() {
        let r = cifs_operator(&geometric_cifs(), &set1(&[1.0]), 1e-3).unwrap();
        // oracle: the next ten points sit at 2^-(N+2) … 2^-(N+11); the farthest
        // from the union is 2^-(N+11), at distance 2^-(N+1) − 2^-(N+11)
        let oracle = (1..)
            .find(|&n: &i32| 0.5f64.powi(n + 1) - 0.5f64.powi(n + 11) < 1e-3)
            .unwrap();
        assert_eq!(r.terms, oracle as usize);
        assert_eq!(r.terms, 9);
        assert!(r.certified);
        assert_eq!(r.set.len(), 9);
    }

    #[test]
    fn cifs_coarse_eps_keeps_one_term() {
        let r = cifs_operator(&geometric_cifs(), &set1(&[1.0]), 1.0).unwrap();
        assert_eq!(r.terms, 1);
        assert_eq!(xs(&r.set), vec![0.25]);
    }

    #[test]
    fn cifs_with_one_distinct_map_is_its_image() {
        let f = affine(0.5, 0.25);
        let g = f.clone();
        let cifs = CifsSystem::generated(move |_| g.clone());
        let a = set1(&[0.0, 1.0]);
        let r = cifs_operator(&cifs, &a, 1e-6).unwrap();
        let single = hutchinson(&FunctionSystem::new(vec![f]).unwrap(), &a).unwrap();
        assert_eq!(r.set, single);
        assert_eq!(r.terms, 1);
    }

    #[test]
    fn cifs_caps_and_rules() {
        let capped = geometric_cifs().with_term_cap(5);
        assert!(matches!(
            cifs_operator(&capped, &set1(&[1.0]), 1e-6),
            Err(Error::Resource { .. })
        ));
        let ruled = geometric_cifs().with_rule(|eps| (-eps.log2()).ceil() as usize);
        let r = cifs_operator(&ruled, &set1(&[1.0]), 1e-3).unwrap();
        assert_eq!(r.terms, 10);
        assert!(r.certified);
        let lift = check_set_lift(
            &geometric_cifs().truncated_system(12).unwrap(),
            None,
            100,
            5,
        )
        .unwrap();
        assert!(lift.pass);
    }
}
