use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{Matrix, C64, ZERO};

use super::coupling::{
    effective_coupling_remote, effective_coupling_with, normal_mode_detunings, polaron_alpha_with,
    remote_displacement, CouplingApprox,
};
use super::{ModelError, Result, SystemParams};

/// Relative tolerance on `ω_m t_g = mπ`.
pub const SOFT_CONSTRAINT_TOL: f64 = 1e-6;
/// Allowed relative mismatch between the achieved and requested phase.
pub const PHASE_MISMATCH_TOL: f64 = 0.02;
/// Largest residual oscillator amplitude accepted by the two-oscillator
/// planner.
pub const REMOTE_RESIDUAL_TOL: f64 = 1e-2;

/// `U = e^{iγ} exp(−iβ₁σ_z1) exp(−iβ₂σ_z2)`, applied after the gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZCorrections {
    pub z1: f64,
    pub z2: f64,
    pub global_phase: f64,
}

impl ZCorrections {
    pub const IDENTITY: ZCorrections = ZCorrections { z1: 0.0, z2: 0.0, global_phase: 0.0 };

    /// Corrections turning `exp(−iJ̄tσ_z1σ_z2)` into `diag(1,1,1,e^{iθ'})`.
    ///
    /// The evolution puts phase `−J̄t·s₁s₂` on `|s₁s₂⟩`; with `θ' = −4J̄t` the
    /// corrections add `θ'/4·(1 − s₁ − s₂)`, so the total is `θ'` on `|11⟩`
    /// (`s₁ = s₂ = −1`) and zero elsewhere.
    pub fn for_zz_phase(zz_phase: f64) -> Self {
        let q = zz_phase / 4.0;
        ZCorrections { z1: q, z2: q, global_phase: q }
    }

    /// Diagonal of the 4×4 correction unitary in the `|q₁q₂⟩` basis.
    pub fn diagonal(&self) -> [C64; 4] {
        let mut d = [ZERO; 4];
        for (k, slot) in d.iter_mut().enumerate() {
            let s1 = if k & 2 == 0 { 1.0 } else { -1.0 };
            let s2 = if k & 1 == 0 { 1.0 } else { -1.0 };
            *slot = C64::from_polar(1.0, self.global_phase - self.z1 * s1 - self.z2 * s2);
        }
        d
    }

    pub fn unitary(&self) -> Matrix {
        Matrix::from_diag(&ndarray::Array1::from(self.diagonal().to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub approx: CouplingApprox,
    /// Scale g₂ so that the achieved phase equals θ exactly.
    pub rescale_g2: bool,
    /// Pick the commensurate duration nearest this value instead of the one
    /// nearest `θ/4|J̄|`.
    pub target_t_g: Option<f64>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { approx: CouplingApprox::Rwa, rescale_g2: false, target_t_g: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    /// Requested controlled phase.
    pub theta: f64,
    pub t_g: f64,
    /// Loop count of the closing condition `|δ|t_g = 2πn`.
    pub n: u64,
    /// Nearest integer to `ω_m t_g/π`.
    pub m: i64,
    /// `|ω_m t_g/π − m|`.
    pub soft_residual: f64,
    pub soft_constraint_met: bool,
    /// Effective coupling after any rescaling.
    pub j_bar: f64,
    /// Signed σ_zσ_z phase `−4J̄t_g`.
    pub zz_phase: f64,
    /// Achieved controlled phase θ', `zz_phase` wrapped into (0, 2π].
    pub theta_achieved: f64,
    pub z_corrections: ZCorrections,
    pub approx: CouplingApprox,
    /// Factor applied to g₂ (1 unless rescaling was requested).
    pub g2_scale: f64,
}

fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(2.0 * PI);
    if w <= 1e-15 {
        2.0 * PI
    } else {
        w
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0 && theta <= 2.0 * PI * (1.0 + 1e-15)) {
        return Err(ModelError::ThetaOutOfRange(theta));
    }
    Ok(())
}

/// Magnitude of `4J̄t_g` that realizes CP(θ). A positive coupling produces
/// CP(−4J̄t_g), so it must accumulate `2π − θ` instead.
fn required_zz_magnitude(theta: f64, j_bar: f64) -> f64 {
    if j_bar < 0.0 {
        theta
    } else {
        2.0 * PI - theta
    }
}

impl GateSchedule {
    /// Schedule of fixed duration with a given coupling; `n` is derived from
    /// `p.delta()` and may not close the loop exactly.
    pub fn with_duration(p: &SystemParams, theta: f64, t_g: f64, j_bar: f64, approx: CouplingApprox) -> Self {
        let n = (p.delta().abs() * t_g / (2.0 * PI)).round().max(0.0) as u64;
        Self::assemble(p, theta, t_g, n, j_bar, approx, 1.0)
    }

    fn assemble(
        p: &SystemParams,
        theta: f64,
        t_g: f64,
        n: u64,
        j_bar: f64,
        approx: CouplingApprox,
        g2_scale: f64,
    ) -> Self {
        let ratio = p.omega_m * t_g / PI;
        let m = ratio.round();
        let soft_residual = (ratio - m).abs();
        let zz_phase = -4.0 * j_bar * t_g;
        GateSchedule {
            theta,
            t_g,
            n,
            m: m as i64,
            soft_residual,
            soft_constraint_met: soft_residual <= SOFT_CONSTRAINT_TOL,
            j_bar,
            zz_phase,
            theta_achieved: wrap_phase(zz_phase),
            z_corrections: ZCorrections::for_zz_phase(zz_phase),
            approx,
            g2_scale,
        }
    }

    /// Relative mismatch between achieved and requested controlled phase.
    pub fn phase_mismatch(&self) -> f64 {
        let d = (self.theta_achieved - self.theta).abs();
        d.min(2.0 * PI - d) / self.theta
    }

    /// Parameters with g₂ multiplied by `g2_scale`.
    pub fn scaled_params(&self, p: &SystemParams) -> SystemParams {
        let mut q = p.clone();
        q.g2 *= self.g2_scale;
        q
    }

    /// `exp(−iJ̄t_gσ_z1σ_z2)` on the two qubits.
    pub fn ideal_unitary(&self) -> Matrix {
        let phi = self.j_bar * self.t_g;
        let d: Vec<C64> = (0..4)
            .map(|k| {
                let s = if k == 0 || k == 3 { 1.0 } else { -1.0 };
                C64::from_polar(1.0, -phi * s)
            })
            .collect();
        Matrix::from_diag(&ndarray::Array1::from(d))
    }

    /// `diag(1, 1, 1, e^{iθ'})`.
    pub fn target_unitary(&self) -> Matrix {
        let mut u = Matrix::from_diag_elem(4, C64::from(1.0));
        u[[3, 3]] = C64::from_polar(1.0, self.zz_phase);
        u
    }
}

/// Chooses a commensurate gate for one shared oscillator.
pub fn plan_schedule(p: &SystemParams, theta: f64, opts: PlanOptions) -> Result<GateSchedule> {
    p.validate()?;
    check_theta(theta)?;
    let j_bar = effective_coupling_with(p, opts.approx)?;
    let delta = p.delta().abs();
    let zz = required_zz_magnitude(theta, j_bar);
    let n = match opts.target_t_g {
        Some(t) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(ModelError::InvalidParameter { name: "target_t_g", reason: format!("{t}") });
            }
            (delta * t / (2.0 * PI)).round()
        }
        None => {
            if j_bar == 0.0 {
                return Err(ModelError::NoCommensurateSchedule);
            }
            (delta * zz / (8.0 * PI * j_bar.abs())).round()
        }
    };
    if !(n >= 1.0) {
        return Err(ModelError::NoCommensurateSchedule);
    }
    let t_g = 2.0 * PI * n / delta;
    let (j_bar, scale) = if opts.rescale_g2 && j_bar != 0.0 {
        let scale = zz / (4.0 * j_bar.abs() * t_g);
        (j_bar * scale, scale)
    } else {
        (j_bar, 1.0)
    };
    Ok(GateSchedule::assemble(p, theta, t_g, n as u64, j_bar, opts.approx, scale))
}

/// Largest residual oscillator amplitude at `t` over the four qubit
/// configurations of the two-oscillator RWA model.
fn remote_residual(p: &SystemParams, t: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let x = remote_displacement(p, s, t)?;
        worst = worst.max((x[0].norm_sqr() + x[1].norm_sqr()).sqrt());
    }
    Ok(worst)
}

/// Chooses a gate duration for the two-oscillator configuration. Both normal
/// modes must close their loops; candidates `t = 2πn₊/|ν₊|` within the phase
/// tolerance are ranked by the residual displacement, then by distance to
/// `θ/4|J̄|`. A best residual above [`REMOTE_RESIDUAL_TOL`] is an error.
pub fn plan_remote_schedule(p: &SystemParams, theta: f64, opts: PlanOptions) -> Result<GateSchedule> {
    p.validate()?;
    check_theta(theta)?;
    let j_bar = effective_coupling_remote(p)?;
    if j_bar == 0.0 {
        return Err(ModelError::NoCommensurateSchedule);
    }
    let zz = required_zz_magnitude(theta, j_bar);
    let ideal = zz / (4.0 * j_bar.abs());
    let (nu_p, nu_m) = normal_mode_detunings(p)?;
    let fast = nu_p.abs().max(nu_m.abs());
    let lo = ((1.0 - PHASE_MISMATCH_TOL) * ideal * fast / (2.0 * PI)).floor().max(1.0) as u64;
    let hi = ((1.0 + PHASE_MISMATCH_TOL) * ideal * fast / (2.0 * PI)).ceil() as u64;
    let mut best: Option<(f64, f64, f64)> = None;
    for k in lo..=hi {
        let t = 2.0 * PI * k as f64 / fast;
        let d = (wrap_phase(-4.0 * j_bar * t) - theta).abs();
        if !opts.rescale_g2 && d.min(2.0 * PI - d) > PHASE_MISMATCH_TOL * theta {
            continue;
        }
        let residual = remote_residual(p, t)?;
        let key = (residual, (t - ideal).abs());
        let better = match best {
            None => true,
            Some((r, dist, _)) => key.0 < r * (1.0 - 1e-9) || (key.0 <= r * (1.0 + 1e-9) && key.1 < dist),
        };
        if better {
            best = Some((key.0, key.1, t));
        }
    }
    let t_g = match best {
        Some((residual, _, t)) if residual <= REMOTE_RESIDUAL_TOL => t,
        _ => return Err(ModelError::NoCommensurateSchedule),
    };
    let n = (p.delta().abs() * t_g / (2.0 * PI)).round() as u64;
    let (j_bar, scale) = if opts.rescale_g2 {
        let scale = zz / (4.0 * j_bar.abs() * t_g);
        (j_bar * scale, scale)
    } else {
        (j_bar, 1.0)
    };
    Ok(GateSchedule::assemble(p, theta, t_g, n, j_bar, CouplingApprox::Rwa, scale))
}

/// `|αᵢ(t_g)|` summed over both qubits for the single-oscillator model.
pub fn residual_displacement(p: &SystemParams, schedule: &GateSchedule) -> Result<f64> {
    let a1 = polaron_alpha_with(p, 0, schedule.t_g, schedule.approx)?;
    let a2 = polaron_alpha_with(p, 1, schedule.t_g, schedule.approx)?;
    Ok(a1.norm() + a2.norm())
}
