//! Named parameter studies, run point by point on a work pool and persisted
//! as CSV rows plus a JSON provenance document.

mod fit;
mod studies;

pub use fit::linear_fit;
pub use studies::{plan_point, points, Point, PointPlan};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::C64;
use crate::dynamics::{ModelKind, SolverConfig};
use crate::fidelity::{evaluate_gate, FidelityError, GateEvaluation};
use crate::model::units::to_ns;
use crate::model::{CouplingApprox, GateSchedule, ModelError, SqueezeVariant, SystemParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    DetuningSweep,
    CouplingSweep,
    SqueezingSweep,
    RemoteGate,
    BenchmarkPoint,
    T1t2Point,
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::DetuningSweep => "detuning_sweep",
            Study::CouplingSweep => "coupling_sweep",
            Study::SqueezingSweep => "squeezing_sweep",
            Study::RemoteGate => "remote_gate",
            Study::BenchmarkPoint => "benchmark_point",
            Study::T1t2Point => "t1t2_point",
        }
    }

    /// Meaning of the `axis` column.
    pub fn axis_label(&self) -> &'static str {
        match self {
            Study::DetuningSweep => "delta_over_kappa",
            Study::CouplingSweep => "g_over_kappa",
            Study::SqueezingSweep => "squeezing_db",
            Study::RemoteGate => "delta_bar_mhz_over_2pi",
            Study::BenchmarkPoint | Study::T1t2Point => "delta_mhz_over_2pi",
        }
    }
}

/// Simulation level used for the non-squeezing studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelLevel {
    Lab,
    /// Oscillator frame rotating at ω_m; the 2ω_m terms are dropped when the
    /// schedule uses the RWA coupling.
    #[default]
    Rotating,
    PolaronEffective,
}

impl ModelLevel {
    pub fn kind(&self, approx: CouplingApprox) -> ModelKind {
        match self {
            ModelLevel::Lab => ModelKind::Lab,
            ModelLevel::Rotating => ModelKind::Rotating { rwa: approx == CouplingApprox::Rwa },
            ModelLevel::PolaronEffective => ModelKind::PolaronEffective,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezingOptions {
    pub variants: Vec<SqueezeVariant>,
    /// Microscopic squeezed-bath runs are made up to this power.
    pub microscopic_max_db: f64,
    /// Squeezing angles φ₀ ∈ [0, π) scanned per microscopic point.
    pub phi0_count: usize,
}

impl Default for SqueezingOptions {
    fn default() -> Self {
        Self {
            variants: vec![SqueezeVariant::RotatingAngle, SqueezeVariant::FixedAngleFiltered],
            microscopic_max_db: 8.0,
            phi0_count: 8,
        }
    }
}

/// Fully resolved study description; all quantities in rad/s and seconds.
///
/// Axis and series meaning per study:
/// * detuning sweep: δ/κ along the axis, one series per g/κ;
/// * coupling sweep: g/κ along the axis, one series per δ/κ;
/// * squeezing sweep: power in dB along the axis;
/// * remote gate: δ̄ along the axis, one series per κ (empty: `params.kappa`);
/// * single points: both empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub study: Study,
    pub axis: Vec<f64>,
    pub series: Vec<f64>,
    pub params: SystemParams,
    pub solver: SolverConfig,
    pub model: ModelLevel,
    pub coupling_approx: CouplingApprox,
    pub theta: f64,
    /// Coherent amplitude of every oscillator at the start of the gate.
    pub alpha0: C64,
    /// Commensurate duration nearest this value instead of θ/4|J̄|.
    pub target_t_g: Option<f64>,
    pub rescale_g2: bool,
    pub squeezing: SqueezingOptions,
    /// Remote points with `|ν₋| < pole_exclusion · g_ab√(1+ζ²)` are excluded.
    pub pole_exclusion: f64,
    /// Write measured wall times; without them the CSV is byte-reproducible.
    pub record_timing: bool,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(study: Study, params: SystemParams) -> Self {
        Self {
            study,
            axis: Vec::new(),
            series: Vec::new(),
            params,
            solver: SolverConfig::default(),
            model: ModelLevel::default(),
            coupling_approx: CouplingApprox::Rwa,
            theta: std::f64::consts::PI,
            alpha0: C64::from(0.0),
            target_t_g: None,
            rescale_g2: false,
            squeezing: SqueezingOptions::default(),
            pole_exclusion: 0.25,
            record_timing: true,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        self.solver.validate().map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;
        let monotone = |v: &[f64]| {
            v.iter().all(|x| x.is_finite())
                && (v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0]))
        };
        if !monotone(&self.axis) {
            return bad("axis values must be finite and strictly monotone".into());
        }
        if !monotone(&self.series) {
            return bad("series values must be finite and strictly monotone".into());
        }
        if !(self.theta > 0.0 && self.theta <= 2.0 * std::f64::consts::PI) {
            return bad(format!("theta = {} is outside (0, 2π]", self.theta));
        }
        let sweep = !matches!(self.study, Study::BenchmarkPoint | Study::T1t2Point);
        if sweep && self.study != Study::RemoteGate && self.axis.is_empty() {
            return bad(format!("{} needs axis values", self.study.name()));
        }
        if !sweep && !(self.axis.is_empty() && self.series.is_empty()) {
            return bad(format!("{} takes no axis or series", self.study.name()));
        }
        let remote = self.params.two_oscillator.is_some();
        match self.study {
            Study::DetuningSweep | Study::CouplingSweep => {
                if self.series.is_empty() {
                    return bad(format!("{} needs series values", self.study.name()));
                }
                if !(self.params.kappa > 0.0) {
                    return bad("ratio axes need kappa > 0".into());
                }
                if self.axis.iter().chain(&self.series).any(|x| *x <= 0.0) {
                    return bad("ratio axes must be positive".into());
                }
            }
            Study::SqueezingSweep => {
                if self.squeezing.variants.is_empty() {
                    return bad("squeezing sweep needs at least one variant".into());
                }
                if self.squeezing.phi0_count < 8 {
                    return bad(format!("phi0_count = {} must be at least 8", self.squeezing.phi0_count));
                }
                if self.axis.iter().any(|x| *x < 0.0) {
                    return bad("squeezing powers must be >= 0 dB".into());
                }
                if !self.series.is_empty() {
                    return bad("squeezing sweep takes no series".into());
                }
                if remote {
                    return bad("squeezing is single-oscillator only".into());
                }
            }
            Study::RemoteGate => {
                if !remote {
                    return bad("remote_gate needs two-oscillator parameters".into());
                }
                if self.model == ModelLevel::PolaronEffective {
                    return bad("remote_gate has no effective polaron model".into());
                }
                if self.series.iter().any(|k| *k < 0.0) {
                    return bad("kappa series must be >= 0".into());
                }
                if !(self.pole_exclusion >= 0.0) {
                    return bad("pole_exclusion must be >= 0".into());
                }
            }
            Study::T1t2Point => {
                if self.params.qubit_noise.is_none() {
                    return bad("t1t2_point needs T1 and T2".into());
                }
                if self.model == ModelLevel::PolaronEffective {
                    return bad("qubit T1/T2 noise needs the lab or rotating model".into());
                }
            }
            Study::BenchmarkPoint => {}
        }
        if remote && self.study != Study::RemoteGate {
            return bad(format!("{} is a single-oscillator study", self.study.name()));
        }
        Ok(())
    }
}

/// One CSV row. Failed points keep their axis and series and leave the
/// numeric columns empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    pub series: String,
    pub t_g_ns: Option<f64>,
    pub n: Option<u64>,
    pub theta_achieved: Option<f64>,
    #[serde(rename = "F_avg")]
    pub f_avg: Option<f64>,
    pub infidelity: Option<f64>,
    pub cutoff: Option<usize>,
    pub variant: String,
    pub model_level: String,
    pub wall_ms: Option<f64>,
    /// `ok`, `excluded: …` or `error: …`.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }

    pub fn is_excluded(&self) -> bool {
        self.status.starts_with("excluded")
    }
}

/// Everything needed to rerun one row in isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub axis: f64,
    pub series: String,
    pub model: ModelKind,
    pub params: SystemParams,
    pub schedule: Option<GateSchedule>,
    pub phi0_scanned: Vec<f64>,
    pub phi0_best: Option<f64>,
    pub cutoff_history: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library: String,
    pub version: String,
    pub axis_label: String,
    pub spec: SweepSpec,
    pub points: Vec<PointRecord>,
    /// Named fit results and checks, in key order.
    pub summary: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.is_error()).count()
    }

    pub fn excluded(&self) -> usize {
        self.rows.iter().filter(|r| r.is_excluded()).count()
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn provenance_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.provenance)?)
    }

    /// Writes `<study>.csv` and `<study>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ExperimentError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let name = self.provenance.spec.study.name();
        let csv_path = dir.join(format!("{name}.csv"));
        let json_path = dir.join(format!("{name}.json"));
        fs::write(&csv_path, self.csv_string()?).map_err(io(&csv_path))?;
        fs::write(&json_path, self.provenance_json()? + "\n").map_err(io(&json_path))?;
        Ok((csv_path, json_path))
    }
}

fn error_row(point: &Point, status: String) -> SweepRow {
    SweepRow {
        axis: point.axis,
        series: point.series.clone(),
        t_g_ns: None,
        n: None,
        theta_achieved: None,
        f_avg: None,
        infidelity: None,
        cutoff: None,
        variant: point.variant.clone(),
        model_level: point.kind.label().into(),
        wall_ms: None,
        status,
    }
}

fn record(point: &Point, schedule: Option<GateSchedule>) -> PointRecord {
    PointRecord {
        axis: point.axis,
        series: point.series.clone(),
        model: point.kind,
        params: point.params.clone(),
        schedule,
        phi0_scanned: point.phi0_scan.clone(),
        phi0_best: None,
        cutoff_history: Vec::new(),
    }
}

/// Plans and simulates one point; never fails, errors become rows.
pub fn run_point(spec: &SweepSpec, point: &Point) -> (SweepRow, PointRecord) {
    let start = Instant::now();
    if let Some(reason) = &point.excluded {
        return (error_row(point, format!("excluded: {reason}")), record(point, None));
    }
    let schedule = match plan_point(spec, point) {
        Ok(s) => s,
        Err(e) => return (error_row(point, format!("error: {e}")), record(point, None)),
    };
    let run = |params: &SystemParams| -> std::result::Result<GateEvaluation, FidelityError> {
        evaluate_gate(params, &schedule, point.kind, &spec.solver, spec.alpha0)
    };
    let mut rec = record(point, Some(schedule.clone()));
    let outcome = if point.phi0_scan.is_empty() {
        run(&point.params)
    } else {
        // keep the angle with the lowest infidelity; ties go to the first
        let mut best: Option<(f64, GateEvaluation)> = None;
        let mut failure = None;
        for &phi0 in &point.phi0_scan {
            let mut p = point.params.clone();
            if let Some(s) = p.squeezing.as_mut() {
                s.phi0 = phi0;
            }
            match run(&p) {
                Ok(ev) => {
                    if best.as_ref().map_or(true, |(_, b)| ev.report.infidelity() < b.report.infidelity()) {
                        best = Some((phi0, ev));
                    }
                }
                Err(e) => failure = Some(e),
            }
        }
        match (best, failure) {
            (Some((phi0, ev)), _) => {
                rec.phi0_best = Some(phi0);
                Ok(ev)
            }
            (None, Some(e)) => Err(e),
            (None, None) => unreachable!("phi0 scan is non-empty"),
        }
    };
    let wall_ms = spec.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    match outcome {
        Ok(ev) => {
            rec.cutoff_history = ev.cutoff_history.clone();
            let row = SweepRow {
                axis: point.axis,
                series: point.series.clone(),
                t_g_ns: Some(to_ns(schedule.t_g)),
                n: Some(schedule.n),
                theta_achieved: Some(schedule.theta_achieved),
                f_avg: Some(ev.report.f_avg),
                infidelity: Some(ev.report.infidelity()),
                cutoff: Some(ev.cutoff),
                variant: point.variant.clone(),
                model_level: point.kind.label().into(),
                wall_ms,
                status: "ok".into(),
            };
            (row, rec)
        }
        Err(e) => {
            let mut row = error_row(point, format!("error: {e}"));
            row.t_g_ns = Some(to_ns(schedule.t_g));
            row.n = Some(schedule.n);
            row.theta_achieved = Some(schedule.theta_achieved);
            row.wall_ms = wall_ms;
            (row, rec)
        }
    }
}

/// Runs every point of the study on a pool of `jobs` threads (default: all
/// cores) and returns the rows in point order.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let pts = points(spec)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let results: Vec<(SweepRow, PointRecord)> = pool.install(|| pts.par_iter().map(|p| run_point(spec, p)).collect());
    let (rows, records): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = studies::summarize(spec, &pts, &rows);
    Ok(SweepResult {
        rows,
        provenance: Provenance {
            library: "longigate".into(),
            version: crate::VERSION.into(),
            axis_label: spec.study.axis_label().into(),
            spec: spec.clone(),
            points: records,
            summary,
        },
    })
}
