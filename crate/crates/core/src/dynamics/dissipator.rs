use crate::algebra::{
    annihilation, dagger, embed, sigma_minus, sigma_z, HilbertSpace, Matrix, C64,
};
use crate::model::{Modulation, SqueezeVariant, SystemParams};

use super::{DynamicsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipatorKind {
    PhotonLoss,
    QubitDecay,
    QubitDephasing,
    CollectiveDephasingModulated,
    SqueezedBath,
}

/// `c(t) = Σ_p a_p f_p(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient(pub Vec<(C64, Modulation)>);

impl Coefficient {
    pub fn constant(rate: f64) -> Self {
        Coefficient(vec![(C64::from(rate), Modulation::Constant)])
    }

    pub fn value(&self, t: f64) -> C64 {
        self.0.iter().map(|(a, m)| a * m.value(t)).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|(_, m)| *m == Modulation::Constant)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Coefficient(self.0.iter().map(|(a, m)| (a * s, *m)).collect())
    }
}

/// `c(t)·(AρB − ½{BA, ρ})`.
#[derive(Debug, Clone)]
pub struct SandwichTerm {
    pub coeff: Coefficient,
    pub a: Matrix,
    pub b: Matrix,
}

#[derive(Debug, Clone)]
pub struct Dissipator {
    pub kind: DissipatorKind,
    pub terms: Vec<SandwichTerm>,
}

impl Dissipator {
    /// `rate(t)·D[L]`.
    pub fn lindblad(kind: DissipatorKind, rate: Coefficient, jump: Matrix) -> Self {
        let b = dagger(&jump);
        Dissipator { kind, terms: vec![SandwichTerm { coeff: rate, a: jump, b }] }
    }

    /// Checks `rate ≥ 0` for the `D[L]` terms (those with `B = A†`) on a grid
    /// covering `[0, t_end]`.
    pub fn check_rates(&self, t_end: f64, samples: usize) -> Result<()> {
        for term in &self.terms {
            if term.b != dagger(&term.a) {
                continue;
            }
            for k in 0..=samples {
                let t = t_end * k as f64 / samples.max(1) as f64;
                let c = term.coeff.value(t);
                if c.re < -1e-12 * c.norm().max(1.0) || c.im.abs() > 1e-12 * c.norm().max(1.0) {
                    return Err(DynamicsError::NegativeRate { t, rate: c.re });
                }
            }
        }
        Ok(())
    }
}

/// Index of the first oscillator factor.
fn oscillator_factor(space: &HilbertSpace) -> Result<usize> {
    space
        .oscillator_factors()
        .first()
        .copied()
        .ok_or_else(|| DynamicsError::Unsupported("the space has no oscillator".into()))
}

/// `κ D[a]` on oscillator factor `osc`.
pub fn photon_loss(kappa: f64, space: &HilbertSpace, osc: usize) -> Result<Dissipator> {
    let d = space.factor_dim(osc)?;
    let a = embed(&annihilation(d)?, osc, space)?.into_data();
    Ok(Dissipator::lindblad(DissipatorKind::PhotonLoss, Coefficient::constant(kappa), a))
}

/// `rate · D[σ_z]` on qubit factor `qubit`; coherence decays as `e^{−2·rate·t}`.
pub fn qubit_dephasing(rate: f64, space: &HilbertSpace, qubit: usize) -> Result<Dissipator> {
    let z = embed(&sigma_z(), qubit, space)?.into_data();
    Ok(Dissipator::lindblad(DissipatorKind::QubitDephasing, Coefficient::constant(rate), z))
}

/// Per qubit: `(1/T₁) D[σ_−]` and `(γ_φ/2) D[σ_z]`, `γ_φ = 1/T₂ − 1/(2T₁)`.
pub fn qubit_noise_dissipators(p: &SystemParams, space: &HilbertSpace) -> Result<Vec<Dissipator>> {
    p.validate()?;
    let noise = p.qubit_noise.ok_or(DynamicsError::MissingQubitNoise)?;
    let gamma_phi = noise.pure_dephasing_rate().max(0.0);
    let mut out = Vec::new();
    for q in 0..2 {
        let sm = embed(&sigma_minus(), q, space)?.into_data();
        out.push(Dissipator::lindblad(DissipatorKind::QubitDecay, Coefficient::constant(1.0 / noise.t1), sm));
        if gamma_phi > 0.0 {
            out.push(qubit_dephasing(0.5 * gamma_phi, space, q)?);
        }
    }
    Ok(out)
}

/// `Γ = 2κ(g/2δ)²`, defined for `g₁ = g₂ = g`.
pub fn polaron_dephasing_rate(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    if !p.equal_couplings() {
        return Err(DynamicsError::UnequalCouplings);
    }
    let delta = p.delta();
    if delta == 0.0 {
        return Err(crate::model::ModelError::ResonantModulation.into());
    }
    Ok(2.0 * p.kappa * (p.g1 / (2.0 * delta)).powi(2))
}

fn collective_dephasing(rate: f64, delta: f64, space: &HilbertSpace) -> Result<Dissipator> {
    let z = embed(&sigma_z(), 0, space)?.into_data() + embed(&sigma_z(), 1, space)?.into_data();
    let coeff = Coefficient(vec![
        (C64::from(rate), Modulation::Constant),
        (C64::from(-rate), Modulation::Cos { omega: delta }),
    ]);
    Ok(Dissipator::lindblad(DissipatorKind::CollectiveDephasingModulated, coeff, z))
}

/// `Γ[1 − cos δt] D[σ_z1 + σ_z2]`.
pub fn polaron_dephasing_dissipator(p: &SystemParams, space: &HilbertSpace) -> Result<Dissipator> {
    let gamma = polaron_dephasing_rate(p)?;
    collective_dephasing(gamma, p.delta(), space)
}

/// The collective dephasing with `Γ → e^{−2r}Γ`, halved again for the
/// filtered fixed-angle variant.
pub fn effective_squeezed_dephasing(p: &SystemParams, space: &HilbertSpace) -> Result<Dissipator> {
    let s = p.squeezing.ok_or(DynamicsError::MissingSqueezing)?;
    let mut gamma = polaron_dephasing_rate(p)? * (-2.0 * s.r).exp();
    if s.variant == SqueezeVariant::FixedAngleFiltered {
        gamma *= 0.5;
    }
    collective_dephasing(gamma, p.delta(), space)
}

/// Broadband squeezed reservoir
/// `κ[(N+1)D[a] + N D[a†] + M S[a†] + M* S[a]]` for the oscillator of `space`,
/// written in the frame rotating at `frame_frequency`. In the frame at ω_r,
/// `M(t) = −e^{i(χδt + 2φ₀)} sinh r cosh r` with `χ = 1` for the rotating-angle
/// variant and `χ = 0` for the fixed-angle one; other frames pick up
/// `e^{2i(ω_f − ω_r)t}`.
pub fn squeezed_bath_dissipator(
    p: &SystemParams,
    space: &HilbertSpace,
    frame_frequency: f64,
) -> Result<Dissipator> {
    p.validate()?;
    let s = p.squeezing.ok_or(DynamicsError::MissingSqueezing)?;
    let osc = oscillator_factor(space)?;
    let d = space.factor_dim(osc)?;
    let a = embed(&annihilation(d)?, osc, space)?.into_data();
    let ad = dagger(&a);
    let n = s.n_thermal();
    let m_abs = s.m_magnitude();
    if m_abs * m_abs > n * (n + 1.0) + 1e-12 {
        return Err(DynamicsError::UnphysicalBath { m2: m_abs * m_abs, bound: n * (n + 1.0) });
    }
    let chi = match s.variant {
        SqueezeVariant::RotatingAngle => 1.0,
        SqueezeVariant::FixedAngleFiltered => 0.0,
    };
    let omega = chi * p.delta() + 2.0 * (frame_frequency - p.omega_r);
    let m0 = -C64::from_polar(m_abs, 2.0 * s.phi0) * p.kappa;
    let phase = |w: f64| if w == 0.0 { Modulation::Constant } else { Modulation::Phase { omega: w } };
    let mut terms = vec![SandwichTerm { coeff: Coefficient::constant(p.kappa * (n + 1.0)), a: a.clone(), b: ad.clone() }];
    if n > 0.0 {
        terms.push(SandwichTerm { coeff: Coefficient::constant(p.kappa * n), a: ad.clone(), b: a.clone() });
    }
    if m_abs > 0.0 {
        terms.push(SandwichTerm { coeff: Coefficient(vec![(m0, phase(omega))]), a: ad.clone(), b: ad });
        terms.push(SandwichTerm { coeff: Coefficient(vec![(m0.conj(), phase(-omega))]), a: a.clone(), b: a });
    }
    Ok(Dissipator { kind: DissipatorKind::SqueezedBath, terms })
}

/// Mean of a coefficient over `[0, 2π/ω]` by quadrature.
#[cfg(test)]
fn period_average(c: &Coefficient, omega: f64) -> C64 {
    let n = 4096;
    let period = 2.0 * std::f64::consts::PI / omega;
    (0..n).map(|k| c.value(period * k as f64 / n as f64)).sum::<C64>() / n as f64
}
