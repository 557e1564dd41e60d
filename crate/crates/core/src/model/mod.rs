//! Physical model: parameters, Hamiltonians in several frames, effective
//! σzσz couplings and commensurate gate schedules.

mod coupling;
mod hamiltonian;
mod schedule;
pub mod units;

pub use coupling::{
    effective_coupling, effective_coupling_remote, effective_coupling_rwa, effective_coupling_with,
    normal_mode_detunings, polaron_alpha, polaron_alpha_with, remote_displacement,
    CouplingApprox,
};
pub use hamiltonian::{
    lab_hamiltonian, polaron_hamiltonian, polaron_schedule, remote_hamiltonian,
    rotating_hamiltonian, single_oscillator_hamiltonian, Modulation, OperatorSchedule,
    OscillatorFrame, QubitFrame, Term,
};
pub use schedule::{
    plan_remote_schedule, plan_schedule, GateSchedule, PlanOptions, ZCorrections,
    residual_displacement, PHASE_MISMATCH_TOL, REMOTE_RESIDUAL_TOL, SOFT_CONSTRAINT_TOL,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::AlgebraError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("resonant modulation (delta = 0) is the readout regime, not the gate regime")]
    ResonantModulation,
    #[error("hybridized-mode resonance: the modulation hits a normal mode of the coupled oscillators")]
    HybridizedModeResonance,
    #[error("no commensurate schedule: n rounds to 0 (coupling too strong for this detuning)")]
    NoCommensurateSchedule,
    #[error("theta = {0} is outside (0, 2π]")]
    ThetaOutOfRange(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("two-oscillator parameters are required")]
    MissingTwoOscillator,
    #[error("time {0} is not finite")]
    NonFiniteTime(f64),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Second oscillator and the oscillator–oscillator coupling of the remote
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoOscillator {
    pub omega_a: f64,
    pub omega_b: f64,
    pub g_ab: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    pub t1: f64,
    pub t2: f64,
}

impl QubitNoise {
    /// Pure-dephasing rate `γ_φ = 1/T₂ − 1/(2T₁)`.
    pub fn pure_dephasing_rate(&self) -> f64 {
        1.0 / self.t2 - 0.5 / self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeVariant {
    /// Two-mode squeezing pumped at (ω_r+ω_m)/2; the ellipse follows the
    /// conditional displacement.
    RotatingAngle,
    /// Squeezing pumped at ω_r with a filter removing the density of modes at
    /// ω_m.
    FixedAngleFiltered,
}

impl SqueezeVariant {
    pub fn label(&self) -> &'static str {
        match self {
            SqueezeVariant::RotatingAngle => "rotating_angle",
            SqueezeVariant::FixedAngleFiltered => "fixed_angle_filtered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub r: f64,
    pub variant: SqueezeVariant,
    pub phi0: f64,
}

impl SqueezeParams {
    pub fn from_db(db: f64, variant: SqueezeVariant, phi0: f64) -> Self {
        Self { r: units::db_to_r(db), variant, phi0 }
    }

    pub fn power_db(&self) -> f64 {
        units::r_to_db(self.r)
    }

    /// `N = sinh² r`.
    pub fn n_thermal(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// `|M| = sinh r cosh r`.
    pub fn m_magnitude(&self) -> f64 {
        self.r.sinh() * self.r.cosh()
    }
}

/// All physical inputs. Frequencies and rates in rad/s, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_r: f64,
    pub omega_a1: f64,
    pub omega_a2: f64,
    pub g1: f64,
    pub g2: f64,
    pub omega_m: f64,
    pub kappa: f64,
    pub two_oscillator: Option<TwoOscillator>,
    /// Same noise figures for both qubits.
    pub qubit_noise: Option<QubitNoise>,
    pub squeezing: Option<SqueezeParams>,
}

impl SystemParams {
    /// Equal couplings, modulation placed `delta` below the oscillator.
    pub fn with_detuning(omega_r: f64, delta: f64, g: f64, kappa: f64) -> Self {
        Self {
            omega_r,
            omega_a1: units::mhz(5000.0),
            omega_a2: units::mhz(5300.0),
            g1: g,
            g2: g,
            omega_m: omega_r - delta,
            kappa,
            two_oscillator: None,
            qubit_noise: None,
            squeezing: None,
        }
    }

    /// Two-oscillator configuration: `omega_r` is set to the mean oscillator
    /// frequency so that `delta()` is the mean detuning δ̄.
    pub fn remote(omega_a: f64, omega_b: f64, g_ab: f64, delta_bar: f64, g: f64) -> Self {
        let mean = 0.5 * (omega_a + omega_b);
        let mut p = Self::with_detuning(mean, delta_bar, g, 0.0);
        p.two_oscillator = Some(TwoOscillator { omega_a, omega_b, g_ab });
        p
    }

    /// Modulation detuning `δ = ω_r − ω_m`.
    pub fn delta(&self) -> f64 {
        self.omega_r - self.omega_m
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_r", self.omega_r),
            ("omega_a1", self.omega_a1),
            ("omega_a2", self.omega_a2),
            ("omega_m", self.omega_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter { name, reason: format!("{v} must be > 0") });
            }
        }
        for (name, v) in [("g1", self.g1), ("g2", self.g2)] {
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter { name, reason: "not finite".into() });
            }
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "kappa",
                reason: format!("{} must be >= 0", self.kappa),
            });
        }
        if let Some(t) = &self.two_oscillator {
            for (name, v) in [("omega_a", t.omega_a), ("omega_b", t.omega_b)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ModelError::InvalidParameter { name, reason: format!("{v} must be > 0") });
                }
            }
            if !(t.g_ab.is_finite() && t.g_ab >= 0.0) {
                return Err(ModelError::InvalidParameter {
                    name: "g_ab",
                    reason: format!("{} must be >= 0", t.g_ab),
                });
            }
        }
        if let Some(q) = &self.qubit_noise {
            if !(q.t1 > 0.0 && q.t2 > 0.0 && q.t1.is_finite() && q.t2.is_finite()) {
                return Err(ModelError::InvalidParameter {
                    name: "qubit_noise",
                    reason: "T1 and T2 must be positive".into(),
                });
            }
            if q.t2 > 2.0 * q.t1 {
                return Err(ModelError::InvalidParameter {
                    name: "t2",
                    reason: format!(
                        "T2 = {:e} s exceeds 2*T1 = {:e} s (physicality requires T2 <= 2*T1)",
                        q.t2,
                        2.0 * q.t1
                    ),
                });
            }
        }
        if let Some(s) = &self.squeezing {
            if !(s.r.is_finite() && s.r >= 0.0) {
                return Err(ModelError::InvalidParameter {
                    name: "squeezing.r",
                    reason: format!("{} must be >= 0", s.r),
                });
            }
        }
        Ok(())
    }

    pub fn require_two_oscillator(&self) -> Result<&TwoOscillator> {
        self.two_oscillator.as_ref().ok_or(ModelError::MissingTwoOscillator)
    }

    /// g₁ = g₂ to relative precision 1e-12.
    pub fn equal_couplings(&self) -> bool {
        (self.g1 - self.g2).abs() <= 1e-12 * self.g1.abs().max(self.g2.abs())
    }
}
