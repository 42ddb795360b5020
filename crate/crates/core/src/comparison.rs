//! Comparison functions and chains of them.
//!
//! A comparison function φ: [0, ∞) → [0, ∞) is non-decreasing with
//! φ^p(t) → 0 for every t; it replaces the Lipschitz constant in a
//! φ-contraction `d(f(x), f(y)) ≤ φ(d(x, y))`. A [`ComparisonChain`] is an
//! indexed family φ_1, φ_2, … whose compositions φ_1∘…∘φ_k control how fast
//! trajectories of non-stationary map sequences contract.

use serde::{Deserialize, Serialize};

use crate::config::PhiSpec;
use crate::error::{bail, Result};
use crate::schedule::{Schedule, Tail};

/// Anything that can be evaluated as a candidate gauge on [0, ∞).
pub trait Gauge {
    fn gauge(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Gauge for F {
    fn gauge(&self, t: f64) -> f64 {
        self(t)
    }
}

/// A comparison function from one of the supported parametric families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiSpec", into = "PhiSpec")]
pub enum ComparisonFunction {
    /// `t ↦ r·t`, `r ∈ [0, 1)`: the Banach case.
    Linear { rate: f64 },
    /// `t ↦ t / (t + a)`, `a ≥ 1`.
    RatioShift { shift: f64 },
    /// `t ↦ α(t)·t` with the non-increasing factor `α(t) = 1 / (1 + c·t^p)`,
    /// `c > 0`, `p ∈ (0, 1]`.
    Rakotch { c: f64, p: f64 },
    /// Pointwise maximum of the members.
    Max(Vec<ComparisonFunction>),
}

impl ComparisonFunction {
    pub fn linear(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            bail!(
                InvalidParameter,
                "linear rate must lie in [0, 1), got {rate}"
            );
        }
        Ok(Self::Linear { rate })
    }

    /// `t / (t + a)`. For `a < 1` the map exceeds the identity near 0, so it
    /// is not a comparison function and is rejected.
    pub fn ratio_shift(shift: f64) -> Result<Self> {
        if !(shift >= 1.0 && shift.is_finite()) {
            bail!(
                InvalidParameter,
                "ratio-shift parameter must be finite and >= 1, got {shift}"
            );
        }
        Ok(Self::RatioShift { shift })
    }

    pub fn rakotch(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            bail!(InvalidParameter, "rakotch scale must be positive, got {c}");
        }
        if !(p > 0.0 && p <= 1.0) {
            bail!(
                InvalidParameter,
                "rakotch exponent must lie in (0, 1], got {p}"
            );
        }
        Ok(Self::Rakotch { c, p })
    }

    /// Pointwise maximum; collapses to the single distinct member if all agree.
    pub fn max(members: Vec<ComparisonFunction>) -> Result<Self> {
        let mut distinct: Vec<ComparisonFunction> = Vec::new();
        for m in members {
            match m {
                Self::Max(inner) => {
                    for i in inner {
                        if !distinct.contains(&i) {
                            distinct.push(i);
                        }
                    }
                }
                m if !distinct.contains(&m) => distinct.push(m),
                _ => {}
            }
        }
        match distinct.len() {
            0 => bail!(InvalidParameter, "max of no comparison functions"),
            1 => Ok(distinct.pop().unwrap()),
            _ => {
                // linear members are totally ordered
                if distinct.iter().all(|m| matches!(m, Self::Linear { .. })) {
                    return Ok(distinct
                        .into_iter()
                        .max_by(|a, b| a.apply(1.0).total_cmp(&b.apply(1.0)))
                        .unwrap());
                }
                Ok(Self::Max(distinct))
            }
        }
    }

    /// φ(t) for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            bail!(
                InvalidInput,
                "comparison functions are evaluated at finite t >= 0, got {t}"
            );
        }
        Ok(self.apply(t))
    }

    pub(crate) fn apply(&self, t: f64) -> f64 {
        match self {
            Self::Linear { rate } => rate * t,
            Self::RatioShift { shift } => t / (t + shift),
            Self::Rakotch { c, p } => t / (1.0 + c * t.powf(*p)),
            Self::Max(ms) => ms.iter().map(|m| m.apply(t)).fold(0.0, f64::max),
        }
    }

    /// The Möbius matrix `[a, b, c, d]` of `t ↦ (a·t + b) / (c·t + d)` when
    /// φ is a linear-fractional map.
    pub(crate) fn mobius(&self) -> Option<Mobius> {
        match *self {
            Self::Linear { rate } => Some(Mobius([rate, 0.0, 0.0, 1.0])),
            Self::RatioShift { shift } => Some(Mobius([1.0, 0.0, 1.0, shift])),
            Self::Rakotch { c, p: 1.0 } => Some(Mobius([1.0, 0.0, c, 1.0])),
            _ => None,
        }
    }
}

impl Gauge for ComparisonFunction {
    fn gauge(&self, t: f64) -> f64 {
        self.apply(t)
    }
}

/// A linear-fractional map kept up to a positive scalar multiple.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Mobius([f64; 4]);

impl Mobius {
    const IDENTITY: Mobius = Mobius([1.0, 0.0, 0.0, 1.0]);
    // powers of two, so rescaling never rounds
    const BIG: f64 = f64::from_bits((1023 + 500) << 52);
    const SMALL: f64 = f64::from_bits((1023 - 500) << 52);

    /// `self ∘ other`.
    fn then_inner(self, other: Mobius) -> Mobius {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = other.0;
        let mut m = Mobius([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h]);
        let big = m.0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if big > Self::BIG {
            m.0.iter_mut().for_each(|v| *v *= Self::SMALL);
        } else if big > 0.0 && big < Self::SMALL {
            m.0.iter_mut().for_each(|v| *v *= Self::BIG);
        }
        m
    }

    fn apply(&self, t: f64) -> f64 {
        let [a, b, c, d] = self.0;
        let num = a * t + b;
        if num == 0.0 {
            return 0.0;
        }
        num / (c * t + d)
    }
}

/// An indexed family `i ↦ φ_i` of comparison functions.
#[derive(Clone, Debug)]
pub struct ComparisonChain(Schedule<ComparisonFunction>);

/// Outcome of [`ComparisonChain::decays`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decay {
    pub decays: bool,
    /// Smallest k with φ_1∘…∘φ_k(t) < tol.
    pub witness: Option<usize>,
    /// φ_1∘…∘φ_k(t) at the witness, or at kmax when there is none.
    pub value: f64,
}

/// Outcome of [`ComparisonChain::series_sum`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesSum {
    pub sum: f64,
    pub converged: bool,
    pub last_increment: f64,
}

/// Final increments that must all fall below [`SERIES_INCREMENT_TOL`].
pub const SERIES_TAIL: usize = 10;
pub const SERIES_INCREMENT_TOL: f64 = 1e-12;

impl ComparisonChain {
    pub fn new(schedule: Schedule<ComparisonFunction>) -> Self {
        Self(schedule)
    }

    pub fn constant(phi: ComparisonFunction) -> Self {
        Self(Schedule::constant(phi))
    }

    pub fn periodic(phis: Vec<ComparisonFunction>) -> Self {
        Self(Schedule::periodic(phis))
    }

    pub fn generated(f: impl Fn(usize) -> ComparisonFunction + Send + Sync + 'static) -> Self {
        Self(Schedule::generated(f))
    }

    pub fn schedule(&self) -> &Schedule<ComparisonFunction> {
        &self.0
    }

    /// φ_i, 1-based.
    pub fn get(&self, i: usize) -> ComparisonFunction {
        self.0.get(i).into_owned()
    }

    /// `φ_1∘φ_2∘…∘φ_k(t)`; the empty composition (`k = 0`) is the identity.
    pub fn compose(&self, k: usize, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            bail!(
                InvalidInput,
                "chain compositions need finite t >= 0, got {t}"
            );
        }
        let phis = self.0.take(k);
        Ok(compose_slice(&phis, t))
    }

    /// `[t, φ_1(t), φ_1∘φ_2(t), …]` up to `k = kmax`, each entry equal to
    /// [`compose`](Self::compose) at that k.
    pub fn compositions(&self, kmax: usize, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            bail!(
                InvalidInput,
                "chain compositions need finite t >= 0, got {t}"
            );
        }
        let phis = self.0.take(kmax);
        let mut out = Vec::with_capacity(kmax + 1);
        out.push(t);
        let mats: Option<Vec<Mobius>> = phis.iter().map(|p| p.mobius()).collect();
        match mats {
            // the new map enters innermost: P_k = P_{k-1} ∘ M_k
            Some(mats) => {
                let mut acc = Mobius::IDENTITY;
                for (i, m) in mats.into_iter().enumerate() {
                    acc = if i == 0 { m } else { acc.then_inner(m) };
                    out.push(acc.apply(t));
                }
            }
            None => {
                for k in 1..=kmax {
                    out.push(compose_slice(&phis[..k], t));
                }
            }
        }
        Ok(out)
    }

    /// Smallest `k ≤ kmax` with `φ_1∘…∘φ_k(t) < tol`.
    pub fn decays(&self, t: f64, tol: f64, kmax: usize) -> Result<Decay> {
        let values = self.compositions(kmax, t)?;
        let witness = (1..=kmax).find(|&k| values[k] < tol);
        Ok(Decay {
            decays: witness.is_some(),
            witness,
            value: values[witness.unwrap_or(kmax)],
        })
    }

    /// Partial sum `Σ_{k=1}^{kmax} φ_1∘…∘φ_k(t)`. Converged when each of the
    /// last [`SERIES_TAIL`] increments is below [`SERIES_INCREMENT_TOL`].
    pub fn series_sum(&self, t: f64, kmax: usize) -> Result<SeriesSum> {
        let values = self.compositions(kmax, t)?;
        let terms = &values[1..];
        let tail = &terms[terms.len().saturating_sub(SERIES_TAIL)..];
        Ok(SeriesSum {
            sum: terms.iter().sum(),
            converged: !tail.is_empty() && tail.iter().all(|&v| v < SERIES_INCREMENT_TOL),
            last_increment: terms.last().copied().unwrap_or(0.0),
        })
    }

    /// Chain with `φ_i ↦ f(φ_i)`.
    pub fn map(
        &self,
        f: impl Fn(&ComparisonFunction) -> ComparisonFunction + Send + Sync + 'static,
    ) -> Self {
        Self(self.0.map(f))
    }
}

impl From<Schedule<ComparisonFunction>> for ComparisonChain {
    fn from(s: Schedule<ComparisonFunction>) -> Self {
        Self(s)
    }
}

/// Evaluates `phis[0] ∘ … ∘ phis[k-1]` at t. Runs of Möbius-type members are
/// multiplied out left to right and applied once.
fn compose_slice(phis: &[ComparisonFunction], t: f64) -> f64 {
    let mut v = t;
    let mut end = phis.len();
    while end > 0 {
        if phis[end - 1].mobius().is_none() {
            v = phis[end - 1].apply(v);
            end -= 1;
            continue;
        }
        let mut start = end - 1;
        while start > 0 && phis[start - 1].mobius().is_some() {
            start -= 1;
        }
        let mut acc = phis[start].mobius().unwrap();
        for phi in &phis[start + 1..end] {
            acc = acc.then_inner(phi.mobius().unwrap());
        }
        v = acc.apply(v);
        end = start;
    }
    v
}

/// Knobs for [`verify_comparison`].
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub grid_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub decay_iterations: usize,
    pub decay_factor: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            grid_lo: 1e-6,
            grid_hi: 1e3,
            decay_iterations: 64,
            decay_factor: 1e-6,
        }
    }
}

/// One property evaluated on the test grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub first_violation: Option<f64>,
}

impl Check {
    fn first(grid: &[f64], bad: impl Fn(usize) -> bool) -> Self {
        let first_violation = (0..grid.len()).find(|&i| bad(i)).map(|i| grid[i]);
        Self {
            pass: first_violation.is_none(),
            first_violation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub zero_at_origin: Check,
    pub non_decreasing: Check,
    pub below_identity: Check,
    pub iterate_decay: Check,
    pub pass: bool,
}

/// `{0}` followed by `n` log-spaced points in `[lo, hi]`.
pub fn test_grid(opts: &VerifyOptions) -> Vec<f64> {
    let n = opts.grid_points.max(2);
    let (a, b) = (opts.grid_lo.ln(), opts.grid_hi.ln());
    std::iter::once(0.0)
        .chain((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()))
        .collect()
}

pub fn verify_comparison<G: Gauge + ?Sized>(phi: &G) -> ComparisonReport {
    verify_comparison_with(phi, &VerifyOptions::default())
}

/// Checks `φ(0) = 0`, monotonicity, `φ(t) < t` and `φ^p(t) < factor·t` on the
/// test grid, reporting the first violating t of each.
pub fn verify_comparison_with<G: Gauge + ?Sized>(
    phi: &G,
    opts: &VerifyOptions,
) -> ComparisonReport {
    let grid = test_grid(opts);
    let vals: Vec<f64> = grid.iter().map(|&t| phi.gauge(t)).collect();
    let zero_at_origin = Check::first(&grid[..1], |_| vals[0] != 0.0);
    let non_decreasing = Check::first(&grid, |i| {
        !vals[i].is_finite() || (i > 0 && vals[i] < vals[i - 1] * (1.0 - 1e-15))
    });
    let below_identity = Check::first(&grid, |i| grid[i] > 0.0 && !(vals[i] < grid[i]));
    let iterate_decay = Check::first(&grid, |i| {
        let t = grid[i];
        if t == 0.0 {
            return false;
        }
        let mut v = t;
        for _ in 0..opts.decay_iterations {
            v = phi.gauge(v);
        }
        !(v < opts.decay_factor * t)
    });
    ComparisonReport {
        pass: zero_at_origin.pass
            && non_decreasing.pass
            && below_identity.pass
            && iterate_decay.pass,
        zero_at_origin,
        non_decreasing,
        below_identity,
        iterate_decay,
    }
}

impl From<ComparisonFunction> for ComparisonChain {
    fn from(phi: ComparisonFunction) -> Self {
        Self::constant(phi)
    }
}

impl ComparisonChain {
    /// Prefix list followed by a repeating list.
    pub fn with_tail(
        prefix: Vec<ComparisonFunction>,
        repeat: Vec<ComparisonFunction>,
    ) -> Result<Self> {
        Ok(Self(Schedule::new(prefix, Tail::Repeat(repeat))?))
    }
}
