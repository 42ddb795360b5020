//! Numerical engine for non-stationary fixed-point iteration and fractal
//! construction.
//!
//! The crate is organised bottom-up:
//!
//! * [`metric`]: points, finite point clouds standing in for compact sets,
//!   and (directed) Hausdorff distances.
//! * [`comparison`]: comparison functions φ, heterogeneous chains
//!   φ_1∘…∘φ_k and the decay/summability diagnostics that gate convergence.
//! * [`maps`] and [`trajectory`]: φ-contractive point maps, forward and
//!   backward trajectories of map sequences, asymptotic similarity.
//! * [`sfs`]: Hutchinson operators, sequences of function systems, truncated
//!   countable systems and the set-lift contraction check.
//! * [`fif`]: non-stationary fractal interpolation on a uniform grid.
//!
//! [`suite`] bundles the built-in verification checks used by the CLI.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comparison;
pub mod config;
pub mod error;
pub mod fif;
pub mod io;
pub mod maps;
pub mod metric;
pub mod schedule;
pub mod sfs;
pub mod suite;
pub mod trajectory;

pub use comparison::{ComparisonChain, ComparisonFunction, Gauge};
pub use error::{Error, Result};
pub use fif::{FifOperatorStage, FifSequence, GridFunction, InterpolationData};
pub use maps::{BoxDomain, ContractiveMap, MapKind, MapSequence};
pub use metric::{CompactSet, Point};
pub use schedule::{Schedule, Tail};
pub use sfs::{CifsSystem, FunctionSystem, SfsSequence};
pub use trajectory::{Direction, TrajectoryOptions, TrajectoryResult};

/// Default convergence tolerance for trajectories.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default iteration budget for trajectories.
pub const DEFAULT_KMAX: usize = 10_000;
/// Number of consecutive sub-tolerance steps required to declare convergence.
pub const CAUCHY_RUN: usize = 5;
