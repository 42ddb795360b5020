//! Serializable descriptions of comparison functions, maps, systems and
//! schedules, shared by every JSON front end.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comparison::{ComparisonChain, ComparisonFunction};
use crate::error::{bail, Error, Result};
use crate::fif::{
    restrict_range, FifOperatorStage, FifSequence, InterpolationData, DEFAULT_MIN_INTERVALS,
};
use crate::maps::{BoxDomain, ContractiveMap, MapKind, MapSequence};
use crate::schedule::{Schedule, Tail};
use crate::sfs::{CifsSystem, FunctionSystem, SfsSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    RatioShift,
    Rakotch,
    Max,
}

/// `{"family": "rakotch", "params": [c, p]}`; `max` takes `members` instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<PhiSpec>,
}

fn arity(family: &str, params: &[f64], allowed: &[usize]) -> Result<()> {
    if !allowed.contains(&params.len()) {
        bail!(
            InvalidParameter,
            "{family} takes {allowed:?} params, got {}",
            params.len()
        );
    }
    Ok(())
}

impl TryFrom<PhiSpec> for ComparisonFunction {
    type Error = Error;

    fn try_from(s: PhiSpec) -> Result<Self> {
        if s.family != Family::Max && !s.members.is_empty() {
            bail!(InvalidParameter, "only the max family takes members");
        }
        match s.family {
            Family::Linear => {
                arity("linear", &s.params, &[1])?;
                Self::linear(s.params[0])
            }
            Family::RatioShift => {
                arity("ratio_shift", &s.params, &[1])?;
                Self::ratio_shift(s.params[0])
            }
            Family::Rakotch => {
                arity("rakotch", &s.params, &[1, 2])?;
                Self::rakotch(s.params[0], s.params.get(1).copied().unwrap_or(1.0))
            }
            Family::Max => {
                arity("max", &s.params, &[0])?;
                Self::max(
                    s.members
                        .into_iter()
                        .map(Self::try_from)
                        .collect::<Result<_>>()?,
                )
            }
        }
    }
}

impl From<ComparisonFunction> for PhiSpec {
    fn from(phi: ComparisonFunction) -> Self {
        let (family, params, members) = match phi {
            ComparisonFunction::Linear { rate } => (Family::Linear, vec![rate], vec![]),
            ComparisonFunction::RatioShift { shift } => (Family::RatioShift, vec![shift], vec![]),
            ComparisonFunction::Rakotch { c, p } => (Family::Rakotch, vec![c, p], vec![]),
            ComparisonFunction::Max(ms) => (
                Family::Max,
                vec![],
                ms.into_iter().map(Into::into).collect(),
            ),
        };
        Self {
            family,
            params,
            members,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec<T> {
    pub repeat: Vec<T>,
}

/// `{"prefix": [...], "tail": {"repeat": [...]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de>"))]
pub struct ScheduleSpec<T> {
    #[serde(default)]
    pub prefix: Vec<T>,
    pub tail: TailSpec<T>,
}

impl<T> ScheduleSpec<T> {
    pub fn build<U: Clone>(&self, f: impl Fn(&T) -> Result<U>) -> Result<Schedule<U>> {
        let prefix = self.prefix.iter().map(&f).collect::<Result<_>>()?;
        let repeat = self.tail.repeat.iter().map(&f).collect::<Result<_>>()?;
        Schedule::new(prefix, Tail::Repeat(repeat))
    }
}

pub type ChainSpec = ScheduleSpec<ComparisonFunction>;

impl ChainSpec {
    pub fn chain(&self) -> Result<ComparisonChain> {
        Ok(ComparisonChain::new(self.build(|phi| Ok(phi.clone()))?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKindSpec {
    Affine1d,
    Affine2d,
    Reciprocal,
    Mobius,
}

/// Box bounds; `null` stands for an unbounded side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<BoxDomain> {
        let lo: Vec<f64> = self
            .lo
            .iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect();
        let hi: Vec<f64> = self.hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        BoxDomain::new(&lo, &hi)
    }
}

/// `affine1d` params `[a, b]`; `affine2d` params `[m00, m01, m10, m11, v0, v1]`;
/// `reciprocal` and `mobius` take none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: MapKindSpec,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<ComparisonFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

impl MapSpec {
    pub fn affine1d(a: f64, b: f64) -> Self {
        Self {
            kind: MapKindSpec::Affine1d,
            params: vec![a, b],
            phi: None,
            domain: None,
        }
    }

    pub fn build(&self) -> Result<ContractiveMap> {
        let p = &self.params;
        let map = match self.kind {
            MapKindSpec::Affine1d => {
                arity("affine1d", p, &[2])?;
                ContractiveMap::affine1d(p[0], p[1])?
            }
            MapKindSpec::Affine2d => {
                arity("affine2d", p, &[6])?;
                ContractiveMap::affine2d([[p[0], p[1]], [p[2], p[3]]], [p[4], p[5]])?
            }
            MapKindSpec::Reciprocal => {
                arity("reciprocal", p, &[0])?;
                ContractiveMap::reciprocal()
            }
            MapKindSpec::Mobius => {
                arity("mobius", p, &[0])?;
                ContractiveMap::mobius()
            }
        };
        let map = match &self.phi {
            Some(phi) => map.with_phi(phi.clone()),
            None => map,
        };
        match &self.domain {
            Some(d) => map.with_domain(d.build()?),
            None => Ok(map),
        }
    }
}

impl From<&ContractiveMap> for MapSpec {
    fn from(m: &ContractiveMap) -> Self {
        let (kind, params) = match *m.kind() {
            MapKind::Affine1D { a, b } => (MapKindSpec::Affine1d, vec![a, b]),
            MapKind::Affine2D { m, v } => (
                MapKindSpec::Affine2d,
                vec![m[0][0], m[0][1], m[1][0], m[1][1], v[0], v[1]],
            ),
            MapKind::Reciprocal => (MapKindSpec::Reciprocal, vec![]),
            MapKind::Mobius => (MapKindSpec::Mobius, vec![]),
        };
        let side = |v: &[f64]| v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        Self {
            kind,
            params,
            phi: Some(m.phi().clone()),
            domain: Some(DomainSpec {
                lo: side(m.domain().lo()),
                hi: side(m.domain().hi()),
            }),
        }
    }
}

pub type MapSequenceSpec = ScheduleSpec<MapSpec>;

impl MapSequenceSpec {
    pub fn sequence(&self) -> Result<MapSequence> {
        MapSequence::new(self.build(MapSpec::build)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub maps: Vec<MapSpec>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<FunctionSystem> {
        FunctionSystem::new(
            self.maps
                .iter()
                .map(MapSpec::build)
                .collect::<Result<_>>()?,
        )
    }
}

pub type SfsSpec = ScheduleSpec<SystemSpec>;

impl SfsSpec {
    pub fn sequence(&self) -> Result<SfsSequence> {
        SfsSequence::new(self.build(SystemSpec::build)?)
    }
}

/// The j-th tail map (j ≥ 1) is `x ↦ a0·a_ratio^(j−1)·x + b0·b_ratio^(j−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricAffine {
    pub a0: f64,
    pub a_ratio: f64,
    #[serde(default)]
    pub b0: f64,
    #[serde(default = "one")]
    pub b_ratio: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CifsTailSpec {
    Repeat(Vec<MapSpec>),
    Geometric(GeometricAffine),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CifsSpec {
    #[serde(default)]
    pub prefix: Vec<MapSpec>,
    pub tail: CifsTailSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term_cap: Option<usize>,
}

impl CifsSpec {
    pub fn build(&self) -> Result<CifsSystem> {
        let prefix: Vec<ContractiveMap> = self
            .prefix
            .iter()
            .map(MapSpec::build)
            .collect::<Result<_>>()?;
        let tail = match &self.tail {
            CifsTailSpec::Repeat(r) => {
                Tail::Repeat(r.iter().map(MapSpec::build).collect::<Result<_>>()?)
            }
            CifsTailSpec::Geometric(g) => {
                if !(g.a0.abs() < 1.0
                    && g.a_ratio.abs() <= 1.0
                    && g.b0.is_finite()
                    && g.b_ratio.is_finite())
                {
                    bail!(
                        InvalidParameter,
                        "geometric tail needs |a0| < 1, |a_ratio| <= 1 and finite b0, b_ratio"
                    );
                }
                if let Some(m) = prefix.first() {
                    if *m.domain() != BoxDomain::whole(1) {
                        bail!(
                            InvalidInput,
                            "a geometric tail lives on the whole line; the prefix maps must too"
                        );
                    }
                }
                let (g, skip) = (g.clone(), prefix.len());
                Tail::Generated(Arc::new(move |i: usize| {
                    let j = (i - skip - 1) as i32;
                    ContractiveMap::affine1d(g.a0 * g.a_ratio.powi(j), g.b0 * g.b_ratio.powi(j))
                        .expect("validated geometric tail")
                }))
            }
        };
        let maps = Schedule::new(prefix, tail)?;
        // shared domain, as for any function system
        if let Some(first) = maps.stored().next() {
            if maps.stored().any(|m| m.domain() != first.domain()) {
                bail!(InvalidInput, "maps of a CIFS must share one domain");
            }
        }
        let cifs = CifsSystem::new(maps);
        Ok(match self.term_cap {
            Some(cap) => cifs.with_term_cap(cap),
            None => cifs,
        })
    }
}

/// A stage's vertical maps: a bare number `s` means `y ↦ s·y` on every
/// segment, a list gives one map per segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VerticalSpec {
    Scale(f64),
    Maps(Vec<MapSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FifSpec {
    /// Inline `[x, y]` nodes; front ends may load them from a file instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_intervals: Option<usize>,
    pub stages: ScheduleSpec<VerticalSpec>,
}

impl FifSpec {
    /// Builds the data and stage sequence. Without an explicit range the
    /// default one is clipped to the domains of the vertical maps.
    pub fn build(&self, nodes: Vec<(f64, f64)>) -> Result<(Arc<InterpolationData>, FifSequence)> {
        let range = self.range.map(|[a, b]| (a, b));
        let data = InterpolationData::with_min_intervals(
            nodes,
            range,
            self.min_intervals.unwrap_or(DEFAULT_MIN_INTERVALS),
        )?;
        let n = data.segments();
        let verticals = self.stages.build(|v| match v {
            VerticalSpec::Scale(s) => Ok(vec![ContractiveMap::affine1d(*s, 0.0)?; n]),
            VerticalSpec::Maps(ms) => ms.iter().map(MapSpec::build).collect(),
        })?;
        let data = if range.is_none() {
            let (mut a, mut b) = data.range();
            for m in verticals.stored().flatten() {
                a = a.max(m.domain().lo()[0]);
                b = b.min(m.domain().hi()[0]);
            }
            restrict_range(&data, (a, b))?
        } else {
            data
        };
        let data = Arc::new(data);
        let d = data.clone();
        let schedule = ScheduleSpec {
            prefix: verticals.prefix().to_vec(),
            tail: TailSpec {
                repeat: verticals
                    .stored()
                    .skip(verticals.prefix().len())
                    .cloned()
                    .collect(),
            },
        }
        .build(|maps| FifOperatorStage::new(d.clone(), maps.clone()))?;
        Ok((data, FifSequence::new(schedule)?))
    }
}
