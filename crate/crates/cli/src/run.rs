//! Executes a [`RunConfig`] and writes its artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nsfrac::config::MapSpec;
use nsfrac::fif::{fif_backward, FifOptions};
use nsfrac::io::{fmt_decimal, read_rows, write_compact_set, write_xy};
use nsfrac::sfs::{
    cifs_operator, sfs_backward, sfs_forward, SetTrajectoryOptions, SetTrajectoryResult,
};
use nsfrac::suite::run_suite;
use nsfrac::trajectory::{
    backward_trajectory, forward_trajectory, TrajectoryOptions, TrajectoryResult,
};
use nsfrac::{
    CompactSet, Direction, Error, GridFunction, Point, SfsSequence, DEFAULT_KMAX, DEFAULT_TOL,
};
use serde_json::{json, Value};

use crate::config::{ConfigError, Mode, RunConfig, SCHEMA};
use crate::render::render_pgm;

pub const DEFAULT_GRID_PITCH: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Invalid = 2,
    NotConverged = 3,
    ResourceCap = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Command-line overrides and the locations a run needs.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Directory that relative input paths in the config are resolved against.
    pub config_dir: PathBuf,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub kmax: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

struct Failure {
    status: ExitStatus,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self {
            status: ExitStatus::Invalid,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Divergence { .. } => ExitStatus::NotConverged,
            Error::Resource { .. } => ExitStatus::ResourceCap,
            _ => ExitStatus::Invalid,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

/// Attributes a library error to a config section.
fn at(field: &'static str) -> impl Fn(Error) -> Failure {
    move |e| match e {
        Error::Divergence { .. } | Error::Resource { .. } => e.into(),
        e => ConfigError::new(field, e).into(),
    }
}

/// Files produced by a run, written together at the end.
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    converged: bool,
    summary: String,
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Outcome {
    match execute(cfg, opts).and_then(|a| write_all(a, &opts.out)) {
        Ok(o) => o,
        Err(f) => Outcome {
            status: f.status,
            summary: f.message,
            artifacts: Vec::new(),
        },
    }
}

fn write_all(a: Artifacts, out: &Path) -> Result<Outcome, Failure> {
    let io = |e: std::io::Error| Failure {
        status: ExitStatus::Invalid,
        message: format!("cannot write to {}: {e}", out.display()),
    };
    std::fs::create_dir_all(out).map_err(io)?;
    let mut written = Vec::new();
    for (name, bytes) in a.files {
        let path = out.join(name);
        std::fs::write(&path, bytes).map_err(io)?;
        written.push(path);
    }
    Ok(Outcome {
        status: if a.converged {
            ExitStatus::Success
        } else {
            ExitStatus::NotConverged
        },
        summary: a.summary,
        artifacts: written,
    })
}

struct Knobs {
    tol: f64,
    kmax: usize,
    seed: u64,
    pitch: f64,
}

fn knobs(cfg: &RunConfig, opts: &RunOptions) -> Result<Knobs, ConfigError> {
    let tol = opts.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ConfigError::new(
            "tol",
            format!("must be positive, got {tol}"),
        ));
    }
    let kmax = opts.kmax.or(cfg.kmax).unwrap_or(DEFAULT_KMAX);
    if kmax == 0 {
        return Err(ConfigError::new("kmax", "must be at least 1"));
    }
    Ok(Knobs {
        tol,
        kmax,
        seed: opts.seed.or(cfg.seed).unwrap_or(0),
        pitch: cfg.grid_pitch.unwrap_or(DEFAULT_GRID_PITCH),
    })
}

fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<Artifacts, Failure> {
    cfg.validate()?;
    let k = knobs(cfg, opts)?;
    match cfg.mode {
        Mode::Trajectory => trajectory(cfg, &k),
        Mode::Sfs => sfs(cfg, &k),
        Mode::Cifs => cifs(cfg, &k),
        Mode::Fif => fif(cfg, &k, &opts.config_dir),
        Mode::Verify => {
            let report = run_suite(k.seed);
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.ok)
                .map(|c| c.name)
                .collect();
            let summary = if failed.is_empty() {
                format!("verify: all {} checks as expected", report.checks.len())
            } else {
                format!("verify: unexpected outcome in {}", failed.join(", "))
            };
            Ok(Artifacts {
                files: vec![(cfg.outputs.report.clone(), report.to_json().into_bytes())],
                converged: report.all_ok,
                summary,
            })
        }
    }
}

fn report_bytes(v: Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn trajectory(cfg: &RunConfig, k: &Knobs) -> Result<Artifacts, Failure> {
    let spec = cfg.trajectory.as_ref().expect("validated");
    let seq = spec.maps.sequence().map_err(at("trajectory.maps"))?;
    let x0 = Point::new(&spec.x0).map_err(at("trajectory.x0"))?;
    let topts = TrajectoryOptions::new(k.tol, k.kmax);
    let r: TrajectoryResult = match spec.direction {
        Direction::Forward => forward_trajectory(&seq, x0, &topts),
        Direction::Backward => backward_trajectory(&seq, x0, &topts),
    }?;
    let mut csv = String::from("# k,coords,gap\n");
    for (i, p) in r.iterates.iter().enumerate() {
        let coords: Vec<String> = p.coords().iter().map(|&c| fmt_decimal(c)).collect();
        let gap = if i == 0 {
            String::new()
        } else {
            fmt_decimal(r.gaps[i - 1])
        };
        writeln!(csv, "{i},{},{gap}", coords.join(",")).unwrap();
    }
    let report = json!({
        "schema": SCHEMA,
        "mode": "trajectory",
        "direction": spec.direction,
        "converged": r.converged,
        "iterations_used": r.iterations_used,
        "limit": r.limit,
        "accumulation_points": r.accumulation_points,
        "last_gap": r.gaps.last(),
        "warnings": r.warnings,
    });
    let summary = match &r.limit {
        Some(p) => format!(
            "trajectory converged to {:?} after {} steps",
            p.coords(),
            r.iterations_used
        ),
        None => format!(
            "trajectory did not converge in {} steps; accumulation points {:?}",
            r.iterations_used,
            r.accumulation_points
                .iter()
                .map(|p| p.coords().to_vec())
                .collect::<Vec<_>>()
        ),
    };
    let csv_name = cfg
        .outputs
        .csv
        .clone()
        .unwrap_or_else(|| "trajectory.csv".into());
    Ok(Artifacts {
        files: vec![
            (csv_name, csv.into_bytes()),
            (cfg.outputs.report.clone(), report_bytes(report)),
        ],
        converged: r.converged,
        summary,
    })
}

fn set_options(cfg: &RunConfig, k: &Knobs) -> SetTrajectoryOptions {
    let opts = SetTrajectoryOptions::new(k.tol, k.kmax);
    match cfg.decimation {
        Some(p) => opts.decimated(p),
        None => opts,
    }
}

fn attractor_files(cfg: &RunConfig, set: &CompactSet) -> Result<Vec<(String, Vec<u8>)>, Failure> {
    let mut csv = Vec::new();
    write_compact_set(set, &mut csv)?;
    let bounds = match cfg.outputs.pgm_bounds {
        Some([lo, hi]) => (lo, hi),
        None => set.bounding_box(),
    };
    let [w, h] = cfg.outputs.pgm_size;
    Ok(vec![
        (
            cfg.outputs
                .csv
                .clone()
                .unwrap_or_else(|| "attractor.csv".into()),
            csv,
        ),
        (
            cfg.outputs
                .pgm
                .clone()
                .unwrap_or_else(|| "attractor.pgm".into()),
            render_pgm(set, w, h, bounds),
        ),
    ])
}

fn set_report(mode: &str, direction: Direction, r: &SetTrajectoryResult, extra: Value) -> Value {
    let set = r
        .limit
        .as_ref()
        .unwrap_or_else(|| r.iterates.last().unwrap());
    let mut v = json!({
        "schema": SCHEMA,
        "mode": mode,
        "direction": direction,
        "converged": r.converged,
        "iterations_used": r.iterations_used,
        "points": set.len(),
        "last_gap": r.gaps.last(),
        "accumulation_sets": r.accumulation_sets.len(),
        "warnings": r.warnings,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn run_sets(
    seq: &SfsSequence,
    start: &CompactSet,
    direction: Direction,
    opts: &SetTrajectoryOptions,
) -> Result<SetTrajectoryResult, Failure> {
    Ok(match direction {
        Direction::Forward => sfs_forward(seq, start, opts),
        Direction::Backward => sfs_backward(seq, start, opts),
    }?)
}

fn set_summary(mode: &str, r: &SetTrajectoryResult) -> String {
    let set = r
        .limit
        .as_ref()
        .unwrap_or_else(|| r.iterates.last().unwrap());
    if r.converged {
        format!(
            "{mode}: attractor with {} points after {} steps",
            set.len(),
            r.iterations_used
        )
    } else {
        format!(
            "{mode}: no convergence in {} steps (last gap {:?})",
            r.iterations_used,
            r.gaps.last()
        )
    }
}

fn sfs(cfg: &RunConfig, k: &Knobs) -> Result<Artifacts, Failure> {
    let spec = cfg.sfs.as_ref().expect("validated");
    let seq = spec.systems.sequence().map_err(at("sfs.systems"))?;
    let start = spec.start.build(k.pitch).map_err(at("sfs.start"))?;
    let r = run_sets(&seq, &start, spec.direction, &set_options(cfg, k))?;
    let set = r
        .limit
        .as_ref()
        .unwrap_or_else(|| r.iterates.last().unwrap());
    let mut files = attractor_files(cfg, set)?;
    files.push((
        cfg.outputs.report.clone(),
        report_bytes(set_report("sfs", spec.direction, &r, json!({}))),
    ));
    Ok(Artifacts {
        files,
        converged: r.converged,
        summary: set_summary("sfs", &r),
    })
}

fn cifs(cfg: &RunConfig, k: &Knobs) -> Result<Artifacts, Failure> {
    let spec = cfg.cifs.as_ref().expect("validated");
    let system = spec.system.build().map_err(at("cifs.system"))?;
    let start = spec.start.build(k.pitch).map_err(at("cifs.start"))?;
    let step = cifs_operator(&system, &start, spec.eps)?;
    let truncated = system.truncated_system(step.terms)?;
    let maps: Vec<MapSpec> = truncated.maps().iter().map(MapSpec::from).collect();
    let r = run_sets(
        &SfsSequence::stationary(truncated),
        &start,
        Direction::Backward,
        &set_options(cfg, k),
    )?;
    let set = r
        .limit
        .as_ref()
        .unwrap_or_else(|| r.iterates.last().unwrap());
    let mut files = attractor_files(cfg, set)?;
    let extra = json!({
        "terms": step.terms,
        "certificate_gap": step.certificate_gap,
        "certified": step.certified,
        "truncated_maps": maps,
    });
    files.push((
        cfg.outputs.report.clone(),
        report_bytes(set_report("cifs", Direction::Backward, &r, extra)),
    ));
    Ok(Artifacts {
        files,
        converged: r.converged,
        summary: format!(
            "{} (truncated at {} maps)",
            set_summary("cifs", &r),
            step.terms
        ),
    })
}

fn fif(cfg: &RunConfig, k: &Knobs, config_dir: &Path) -> Result<Artifacts, Failure> {
    let spec = cfg.fif.as_ref().expect("validated");
    let nodes: Vec<(f64, f64)> = match (&spec.nodes, &spec.data_csv) {
        (Some(n), None) => n.iter().map(|&[x, y]| (x, y)).collect(),
        (None, Some(path)) => {
            let path = config_dir.join(path);
            let file = std::fs::File::open(&path).map_err(|e| {
                ConfigError::new("fif.data_csv", format!("{}: {e}", path.display()))
            })?;
            let rows = read_rows(file).map_err(at("fif.data_csv"))?;
            if let Some(r) = rows.iter().find(|r| r.len() != 2) {
                return Err(ConfigError::new(
                    "fif.data_csv",
                    format!("expected x,y rows, got {} columns", r.len()),
                )
                .into());
            }
            rows.iter().map(|r| (r[0], r[1])).collect()
        }
        _ => {
            return Err(
                ConfigError::new("fif", "give exactly one of `nodes` and `data_csv`").into(),
            )
        }
    };
    let (data, seq) = spec.build(nodes).map_err(at("fif"))?;
    let r = fif_backward(
        &seq,
        &GridFunction::piecewise_linear(data.clone()),
        &FifOptions::new(k.tol, k.kmax),
    )?;
    let mut csv = Vec::new();
    write_xy(r.limit.samples(), "x,f", &mut csv)?;
    let report = json!({
        "schema": SCHEMA,
        "mode": "fif",
        "converged": r.converged,
        "iterations_used": r.iterations_used,
        "last_gap": r.last_gap(),
        "grid_intervals": data.grid().intervals(),
        "range": [data.range().0, data.range().1],
        "warnings": r.warnings,
    });
    let summary = if r.converged {
        format!(
            "fif: converged after {} stages on {} intervals",
            r.iterations_used,
            data.grid().intervals()
        )
    } else {
        format!(
            "fif: no convergence in {} stages (last gap {:e})",
            r.iterations_used,
            r.last_gap()
        )
    };
    Ok(Artifacts {
        files: vec![
            (
                cfg.outputs.csv.clone().unwrap_or_else(|| "fif.csv".into()),
                csv,
            ),
            (cfg.outputs.report.clone(), report_bytes(report)),
        ],
        converged: r.converged,
        summary,
    })
}
