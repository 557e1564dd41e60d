//! Lindblad master-equation integration.
//!
//! Generators are written in the form
//! `ρ̇ = −i[H(t), ρ] + Σ_k c_k(t)(A_k ρ B_k − ½{B_k A_k, ρ})`, which covers
//! `D[L]` (`A = L`, `B = L†`) and the squeezed-bath terms `S[x]`
//! (`A = B = x`). When every operator is diagonal in the leading qubit factors
//! the density matrix is evolved as independent oscillator blocks.

mod assemble;
mod dissipator;
mod escalate;
mod evolve;
mod generator;
mod integrator;
mod krylov;
mod propagate;

pub use assemble::{build_model, ModelKind};
pub use dissipator::{
    effective_squeezed_dephasing, photon_loss, polaron_dephasing_dissipator, polaron_dephasing_rate,
    qubit_dephasing, qubit_noise_dissipators, squeezed_bath_dissipator, Coefficient, Dissipator,
    DissipatorKind, SandwichTerm,
};
pub use escalate::{escalate_cutoff, Escalation};
pub use evolve::{
    evolve, propagate_operator, Diagnostics, Evolution, Frame, LindbladModel, Trajectory, TrajectorySample,
};
pub use integrator::{integrate, RkOptions, RkStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::model::ModelError;

/// Trace drift beyond which `evolve` fails.
pub const TRACE_ERROR_LIMIT: f64 = 1e-6;
/// Most negative eigenvalue tolerated by `evolve`.
pub const EIGENVALUE_ERROR_LIMIT: f64 = -1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("the effective polaron model requires g1 = g2; use the lab or rotating model for unequal couplings")]
    UnequalCouplings,
    #[error("squeezing parameters are required")]
    MissingSqueezing,
    #[error("qubit noise parameters are required")]
    MissingQubitNoise,
    #[error("{0}")]
    Unsupported(String),
    #[error("unphysical squeezed bath: |M|^2 = {m2} exceeds N(N+1) = {bound}")]
    UnphysicalBath { m2: f64, bound: f64 },
    #[error("negative rate {rate} at t = {t}")]
    NegativeRate { t: f64, rate: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("operator dimension {found} does not match the model space ({expected})")]
    SpaceMismatch { expected: usize, found: usize },
    #[error("trace drifted by {deviation:e} at t = {t:e} s (tolerance too loose or cutoff too small)")]
    TraceDrift { t: f64, deviation: f64 },
    #[error("density matrix lost positivity at t = {t:e} s (min eigenvalue {value:e})")]
    NegativeEigenvalue { t: f64, value: f64 },
    #[error("non-finite values at t = {t:e} s")]
    NonFinite { t: f64 },
    #[error("step size underflow at t = {t:e} s")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget of {0} exhausted")]
    MaxStepsExceeded(usize),
    #[error("cutoff {max} reached without fidelity convergence (last change {delta:e})")]
    CutoffNotConverged { max: usize, delta: f64 },
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffEscalation {
    pub enabled: bool,
    pub fidelity_delta_threshold: f64,
    pub step: usize,
    pub max_cutoff: usize,
}

impl Default for CutoffEscalation {
    fn default() -> Self {
        Self { enabled: true, fidelity_delta_threshold: 1e-7, step: 4, max_cutoff: 64 }
    }
}

/// How a generator is propagated over the gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Exact or Krylov exponentials for constant generators, one-period maps
    /// raised to a power for periodic ones, Runge–Kutta otherwise; picked by
    /// cost.
    #[default]
    Auto,
    /// Always step the master equation with the adaptive Runge–Kutta pair.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in seconds; `None` derives a quarter of the shortest
    /// modulation period.
    pub max_step: Option<f64>,
    pub fock_cutoff: usize,
    pub cutoff_escalation: CutoffEscalation,
    pub propagation: Propagation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            fock_cutoff: 12,
            cutoff_escalation: CutoffEscalation::default(),
            propagation: Propagation::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(DynamicsError::InvalidConfig(format!("{name} = {v} must lie in (0, 1e-3]")));
            }
        }
        if let Some(h) = self.max_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!("max_step = {h} must be > 0")));
            }
        }
        if self.fock_cutoff < 4 {
            return Err(DynamicsError::InvalidConfig(format!(
                "fock_cutoff = {} must be >= 4",
                self.fock_cutoff
            )));
        }
        let esc = &self.cutoff_escalation;
        if esc.enabled {
            if !(esc.fidelity_delta_threshold > 0.0) {
                return Err(DynamicsError::InvalidConfig("fidelity_delta_threshold must be > 0".into()));
            }
            if esc.step == 0 || esc.max_cutoff < self.fock_cutoff {
                return Err(DynamicsError::InvalidConfig(
                    "escalation step must be > 0 and max_cutoff >= fock_cutoff".into(),
                ));
            }
        }
        Ok(())
    }

    /// Same configuration with both tolerances scaled.
    pub fn with_tolerance_scale(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self { fock_cutoff: cutoff, ..*self }
    }
}
