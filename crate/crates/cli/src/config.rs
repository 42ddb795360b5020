//! The run configuration file (JSON, `"schema": 1`).

use std::path::Path;

use nsfrac::config::{CifsSpec, FifSpec, MapSequenceSpec, SfsSpec};
use nsfrac::{CompactSet, Direction, Point};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Trajectory,
    Sfs,
    Cifs,
    Fif,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub mode: Mode,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub kmax: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Pitch used to sample interval and box start sets.
    #[serde(default)]
    pub grid_pitch: Option<f64>,
    /// Snap set iterates to this grid.
    #[serde(default)]
    pub decimation: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub trajectory: Option<TrajectoryRun>,
    #[serde(default)]
    pub sfs: Option<SfsRun>,
    #[serde(default)]
    pub cifs: Option<CifsRun>,
    #[serde(default)]
    pub fif: Option<FifSpec>,
}

/// File names, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub csv: Option<String>,
    pub pgm: Option<String>,
    pub report: String,
    /// `[width, height]`; 1D sets always render 16 rows high.
    pub pgm_size: [usize; 2],
    /// `[[lo_x, lo_y], [hi_x, hi_y]]` (only the first entries matter in 1D);
    /// defaults to the bounding box of the set.
    pub pgm_bounds: Option<[[f64; 2]; 2]>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            csv: None,
            pgm: None,
            report: "report.json".into(),
            pgm_size: [512, 512],
            pgm_bounds: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRun {
    pub maps: MapSequenceSpec,
    pub x0: Vec<f64>,
    #[serde(default = "forward")]
    pub direction: Direction,
}

fn forward() -> Direction {
    Direction::Forward
}

fn backward() -> Direction {
    Direction::Backward
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfsRun {
    pub systems: SfsSpec,
    pub start: StartSet,
    #[serde(default = "backward")]
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CifsRun {
    pub system: CifsSpec,
    pub start: StartSet,
    /// Truncation accuracy for the countable union.
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSet {
    Points(Vec<Vec<f64>>),
    Interval([f64; 2]),
    Box([[f64; 2]; 2]),
}

impl StartSet {
    pub fn build(&self, pitch: f64) -> nsfrac::Result<CompactSet> {
        match self {
            StartSet::Points(rows) => CompactSet::new(
                rows.iter()
                    .map(|r| Point::new(r))
                    .collect::<nsfrac::Result<_>>()?,
            ),
            StartSet::Interval([lo, hi]) => CompactSet::sample_interval(*lo, *hi, pitch),
            StartSet::Box([lo, hi]) => CompactSet::sample_box(*lo, *hi, pitch),
        }
    }
}

/// A configuration problem, tied to the field that caused it.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." || p == "?" => "<root>".to_string(),
            p => p,
        };
        ConfigError::new(field, e.into_inner())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn positive(field: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(ConfigError::new(
            field,
            format!("must be positive, got {v}"),
        )),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::new(
                "schema",
                format!(
                    "unsupported schema version {}, expected {SCHEMA}",
                    self.schema
                ),
            ));
        }
        positive("tol", self.tol)?;
        positive("grid_pitch", self.grid_pitch)?;
        positive("decimation", self.decimation)?;
        if self.kmax == Some(0) {
            return Err(ConfigError::new("kmax", "must be at least 1"));
        }
        let [w, h] = self.outputs.pgm_size;
        if w == 0 || h == 0 {
            return Err(ConfigError::new(
                "outputs.pgm_size",
                "width and height must be at least 1",
            ));
        }
        let present = match self.mode {
            Mode::Trajectory => self.trajectory.is_some(),
            Mode::Sfs => self.sfs.is_some(),
            Mode::Cifs => self.cifs.is_some(),
            Mode::Fif => self.fif.is_some(),
            Mode::Verify => true,
        };
        if !present {
            let name = serde_json::to_value(self.mode).unwrap();
            return Err(ConfigError::new(
                name.as_str().unwrap(),
                "missing section for the selected mode",
            ));
        }
        if let Some(c) = &self.cifs {
            positive("cifs.eps", Some(c.eps))?;
        }
        Ok(())
    }
}
