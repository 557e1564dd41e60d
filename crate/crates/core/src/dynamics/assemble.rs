//! Gate-level model assembly from parameters and a schedule.

use serde::{Deserialize, Serialize};

use crate::model::{
    polaron_alpha_with, polaron_schedule, remote_hamiltonian, single_oscillator_hamiltonian, GateSchedule,
    OscillatorFrame, QubitFrame, SqueezeVariant, SystemParams,
};

use super::dissipator::{
    effective_squeezed_dephasing, photon_loss, polaron_dephasing_dissipator, qubit_noise_dissipators,
    squeezed_bath_dissipator, Dissipator,
};
use super::evolve::{Frame, LindbladModel};
use super::{DynamicsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Oscillators in the laboratory frame.
    Lab,
    /// Oscillators rotating at ω_m, optionally without the 2ω_m terms.
    Rotating { rwa: bool },
    /// `J̄ σ_zσ_z` with the modulated collective dephasing.
    PolaronEffective,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Lab => "lab",
            ModelKind::Rotating { rwa: true } => "rotating_rwa",
            ModelKind::Rotating { rwa: false } => "rotating",
            ModelKind::PolaronEffective => "polaron_effective",
        }
    }
}

/// Master equation of one gate: Hamiltonian from `kind`, photon loss or the
/// squeezed bath on every oscillator, qubit T1/T2 when present. `cutoff`
/// applies to every oscillator. Parameters are taken after the schedule's g₂
/// rescaling.
pub fn build_model(p: &SystemParams, schedule: &GateSchedule, kind: ModelKind, cutoff: usize) -> Result<LindbladModel> {
    let p = schedule.scaled_params(p);
    p.validate()?;
    let remote = p.two_oscillator.is_some();
    match kind {
        ModelKind::PolaronEffective => {
            if remote {
                return Err(DynamicsError::Unsupported("no effective polaron model for two oscillators".into()));
            }
            if p.qubit_noise.is_some() {
                return Err(DynamicsError::Unsupported(
                    "qubit T1/T2 noise is only available in the lab or rotating model".into(),
                ));
            }
            let h = polaron_schedule(schedule.j_bar, cutoff, 0.0)?;
            let space = h.space().clone();
            let mut ds = Vec::new();
            if p.kappa > 0.0 {
                let d = if p.squeezing.is_some() {
                    effective_squeezed_dephasing(&p, &space)?
                } else {
                    polaron_dephasing_dissipator(&p, &space)?
                };
                ds.push(d);
            }
            let displacements = [
                polaron_alpha_with(&p, 0, schedule.t_g, schedule.approx)?,
                polaron_alpha_with(&p, 1, schedule.t_g, schedule.approx)?,
            ];
            LindbladModel::new(h, ds, schedule.t_g, Frame::Polaron { displacements })
        }
        ModelKind::Lab | ModelKind::Rotating { .. } => {
            let (osc_frame, frame, frame_frequency) = match kind {
                ModelKind::Rotating { rwa } => {
                    (OscillatorFrame::Rotating { rwa }, Frame::Rotating { omega: p.omega_m, rwa }, p.omega_m)
                }
                _ => (OscillatorFrame::Lab, Frame::Lab, 0.0),
            };
            let h = if remote {
                remote_hamiltonian(&p, (cutoff, cutoff), osc_frame, QubitFrame::Rotating)?
            } else {
                single_oscillator_hamiltonian(&p, cutoff, osc_frame, QubitFrame::Rotating)?
            };
            let space = h.space().clone();
            let mut ds: Vec<Dissipator> = Vec::new();
            match p.squeezing {
                Some(s) => {
                    if remote {
                        return Err(DynamicsError::Unsupported("squeezed baths are single-oscillator only".into()));
                    }
                    if s.variant == SqueezeVariant::FixedAngleFiltered {
                        return Err(DynamicsError::Unsupported(
                            "the filtered fixed-angle variant exists only as an effective polaron model".into(),
                        ));
                    }
                    if p.kappa > 0.0 {
                        ds.push(squeezed_bath_dissipator(&p, &space, frame_frequency)?);
                    }
                }
                None => {
                    if p.kappa > 0.0 {
                        for osc in space.oscillator_factors() {
                            ds.push(photon_loss(p.kappa, &space, osc)?);
                        }
                    }
                }
            }
            if p.qubit_noise.is_some() {
                ds.extend(qubit_noise_dissipators(&p, &space)?);
            }
            LindbladModel::new(h, ds, schedule.t_g, frame)
        }
    }
}
