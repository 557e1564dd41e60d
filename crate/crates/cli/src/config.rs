//! Strict JSON run configuration with unit-suffixed keys, converted to SI
//! angular units once, here.

use std::f64::consts::PI;
use std::path::PathBuf;

use longigate::algebra::C64;
use longigate::dynamics::{CutoffEscalation, Propagation, SolverConfig};
use longigate::experiments::{ModelLevel, SqueezingOptions, Study, SweepSpec};
use longigate::model::units::{ghz, mhz, ns, us};
use longigate::model::{CouplingApprox, QubitNoise, SqueezeVariant, SystemParams};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub study: Study,
    pub system: SystemConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub model: ModelLevel,
    #[serde(default)]
    pub coupling_approx: CouplingApprox,
    #[serde(default = "default_theta")]
    pub theta_rad: f64,
    #[serde(default)]
    pub alpha0: Complex,
    pub target_t_g_ns: Option<f64>,
    #[serde(default)]
    pub rescale_g2: bool,
    #[serde(default)]
    pub squeezing: SqueezingSection,
    #[serde(default = "yes")]
    pub record_wall_time: bool,
    pub output_dir: Option<PathBuf>,
}

fn default_theta() -> f64 {
    PI
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Single-oscillator frequency; the remote configuration uses the mean of
    /// its two oscillators instead.
    pub omega_r_ghz_over_2pi: Option<f64>,
    /// `ω_r − ω_m`, or `δ̄` for the remote configuration.
    pub delta_mhz_over_2pi: f64,
    pub g_mhz_over_2pi: Option<f64>,
    pub g1_mhz_over_2pi: Option<f64>,
    pub g2_mhz_over_2pi: Option<f64>,
    #[serde(default)]
    pub kappa_mhz_over_2pi: f64,
    #[serde(default = "qubit1")]
    pub omega_a1_ghz_over_2pi: f64,
    #[serde(default = "qubit2")]
    pub omega_a2_ghz_over_2pi: f64,
    pub two_oscillator: Option<TwoOscillatorConfig>,
    pub qubit_noise: Option<QubitNoiseConfig>,
}

fn qubit1() -> f64 {
    5.0
}

fn qubit2() -> f64 {
    5.3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoOscillatorConfig {
    pub omega_a_ghz_over_2pi: f64,
    pub omega_b_ghz_over_2pi: f64,
    pub g_ab_mhz_over_2pi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitNoiseConfig {
    pub t1_us: f64,
    pub t2_us: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step_ns: Option<f64>,
    pub fock_cutoff: usize,
    pub cutoff_escalation: EscalationSection,
    pub propagation: Propagation,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_step_ns: None,
            fock_cutoff: d.fock_cutoff,
            cutoff_escalation: EscalationSection::default(),
            propagation: d.propagation,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EscalationSection {
    pub enabled: bool,
    pub fidelity_delta_threshold: f64,
    pub step: usize,
    pub max_cutoff: usize,
}

impl Default for EscalationSection {
    fn default() -> Self {
        let d = CutoffEscalation::default();
        Self { enabled: d.enabled, fidelity_delta_threshold: d.fidelity_delta_threshold, step: d.step, max_cutoff: d.max_cutoff }
    }
}

/// Axis and series keys; which ones a study accepts is checked in
/// [`RunConfig::into_spec`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub delta_over_kappa: Option<Vec<f64>>,
    pub g_over_kappa: Option<Vec<f64>>,
    pub squeezing_db: Option<Vec<f64>>,
    pub delta_bar_mhz_over_2pi: Option<Vec<f64>>,
    pub kappa_mhz_over_2pi: Option<Vec<f64>>,
    pub pole_exclusion_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqueezingSection {
    pub variants: Vec<SqueezeVariant>,
    pub microscopic_max_db: f64,
    pub phi0_count: usize,
}

impl Default for SqueezingSection {
    fn default() -> Self {
        let d = SqueezingOptions::default();
        Self { variants: d.variants, microscopic_max_db: d.microscopic_max_db, phi0_count: d.phi0_count }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Complex {
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Sets `path` (dot separated) in `root` to `raw`, parsed as JSON when it
/// parses and kept as a string otherwise.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<(), CliError> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Override(format!("malformed key `{path}`")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Override(format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("keys is non-empty")
}

pub fn parse(value: Value) -> Result<RunConfig, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema { path, message: e.into_inner().to_string() }
    })
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), message: message.into() }
}

impl RunConfig {
    fn params(&self) -> Result<SystemParams, CliError> {
        let s = &self.system;
        let (g1, g2) = match (s.g_mhz_over_2pi, s.g1_mhz_over_2pi, s.g2_mhz_over_2pi) {
            (Some(g), None, None) => (g, g),
            (None, Some(a), Some(b)) => (a, b),
            _ => return Err(schema("system.g_mhz_over_2pi", "give either g_mhz_over_2pi or both g1_ and g2_mhz_over_2pi")),
        };
        let delta = mhz(s.delta_mhz_over_2pi);
        let mut p = match (&s.two_oscillator, s.omega_r_ghz_over_2pi) {
            (Some(t), None) => SystemParams::remote(
                ghz(t.omega_a_ghz_over_2pi),
                ghz(t.omega_b_ghz_over_2pi),
                mhz(t.g_ab_mhz_over_2pi),
                delta,
                mhz(g1),
            ),
            (None, Some(w)) => SystemParams::with_detuning(ghz(w), delta, mhz(g1), 0.0),
            (Some(_), Some(_)) => {
                return Err(schema("system.omega_r_ghz_over_2pi", "not used with two_oscillator (the mean oscillator frequency is used)"))
            }
            (None, None) => return Err(schema("system.omega_r_ghz_over_2pi", "missing field")),
        };
        p.g1 = mhz(g1);
        p.g2 = mhz(g2);
        p.kappa = mhz(s.kappa_mhz_over_2pi);
        p.omega_a1 = ghz(s.omega_a1_ghz_over_2pi);
        p.omega_a2 = ghz(s.omega_a2_ghz_over_2pi);
        p.qubit_noise = s.qubit_noise.as_ref().map(|q| QubitNoise { t1: us(q.t1_us), t2: us(q.t2_us) });
        p.validate().map_err(|e| CliError::Physics(e.to_string()))?;
        Ok(p)
    }

    fn solver(&self) -> SolverConfig {
        let s = &self.solver;
        let e = &s.cutoff_escalation;
        SolverConfig {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_step: s.max_step_ns.map(ns),
            fock_cutoff: s.fock_cutoff,
            cutoff_escalation: CutoffEscalation {
                enabled: e.enabled,
                fidelity_delta_threshold: e.fidelity_delta_threshold,
                step: e.step,
                max_cutoff: e.max_cutoff,
            },
            propagation: s.propagation,
        }
    }

    /// Resolved study description in rad/s and seconds.
    pub fn into_spec(self) -> Result<SweepSpec, CliError> {
        let params = self.params()?;
        let mut spec = SweepSpec::new(self.study, params);
        let sw = &self.sweep;
        let allowed: &[&str] = match self.study {
            Study::DetuningSweep | Study::CouplingSweep => &["delta_over_kappa", "g_over_kappa"],
            Study::SqueezingSweep => &["squeezing_db"],
            Study::RemoteGate => &["delta_bar_mhz_over_2pi", "kappa_mhz_over_2pi", "pole_exclusion_fraction"],
            Study::BenchmarkPoint | Study::T1t2Point => &[],
        };
        let present = [
            ("delta_over_kappa", sw.delta_over_kappa.is_some()),
            ("g_over_kappa", sw.g_over_kappa.is_some()),
            ("squeezing_db", sw.squeezing_db.is_some()),
            ("delta_bar_mhz_over_2pi", sw.delta_bar_mhz_over_2pi.is_some()),
            ("kappa_mhz_over_2pi", sw.kappa_mhz_over_2pi.is_some()),
            ("pole_exclusion_fraction", sw.pole_exclusion_fraction.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(schema(&format!("sweep.{key}"), format!("not used by {}", self.study.name())));
            }
        }
        let list = |v: &Option<Vec<f64>>| v.clone().unwrap_or_default();
        match self.study {
            Study::DetuningSweep => {
                spec.axis = list(&sw.delta_over_kappa);
                spec.series = list(&sw.g_over_kappa);
            }
            Study::CouplingSweep => {
                spec.axis = list(&sw.g_over_kappa);
                spec.series = list(&sw.delta_over_kappa);
            }
            Study::SqueezingSweep => spec.axis = list(&sw.squeezing_db),
            Study::RemoteGate => {
                spec.axis = list(&sw.delta_bar_mhz_over_2pi).into_iter().map(mhz).collect();
                spec.series = list(&sw.kappa_mhz_over_2pi).into_iter().map(mhz).collect();
                if let Some(f) = sw.pole_exclusion_fraction {
                    spec.pole_exclusion = f;
                }
            }
            Study::BenchmarkPoint | Study::T1t2Point => {}
        }
        spec.solver = self.solver();
        spec.model = self.model;
        spec.coupling_approx = self.coupling_approx;
        spec.theta = self.theta_rad;
        spec.alpha0 = C64::new(self.alpha0.re, self.alpha0.im);
        spec.target_t_g = self.target_t_g_ns.map(ns);
        spec.rescale_g2 = self.rescale_g2;
        spec.squeezing = SqueezingOptions {
            variants: self.squeezing.variants,
            microscopic_max_db: self.squeezing.microscopic_max_db,
            phi0_count: self.squeezing.phi0_count,
        };
        spec.record_timing = self.record_wall_time;
        spec.output = self.output_dir;
        spec.validate().map_err(|e| CliError::Spec(e.to_string()))?;
        Ok(spec)
    }
}
