use crate::algebra::{
    annihilation, embed, number, sigma_z, AlgebraError, HilbertSpace, Matrix, Operator, C64, ONE,
};

use super::{ModelError, Result, SystemParams};

/// Scalar time dependence of a Hamiltonian or dissipator term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    Constant,
    /// `cos(ω t)`
    Cos { omega: f64 },
    /// `e^{iω t}`
    Phase { omega: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> C64 {
        match *self {
            Modulation::Constant => ONE,
            Modulation::Cos { omega } => C64::from((omega * t).cos()),
            Modulation::Phase { omega } => C64::from_polar(1.0, omega * t),
        }
    }

    /// Angular frequency, zero for constant terms.
    pub fn frequency(&self) -> f64 {
        match *self {
            Modulation::Constant => 0.0,
            Modulation::Cos { omega } | Modulation::Phase { omega } => omega,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Term {
    pub modulation: Modulation,
    pub operator: Matrix,
}

/// `H(t) = Σ_k f_k(t) O_k` on a fixed Hilbert space.
#[derive(Debug, Clone)]
pub struct OperatorSchedule {
    space: HilbertSpace,
    terms: Vec<Term>,
}

impl OperatorSchedule {
    pub fn new(space: HilbertSpace) -> Self {
        Self { space, terms: Vec::new() }
    }

    pub fn push(&mut self, modulation: Modulation, operator: Matrix) -> Result<()> {
        let d = self.space.dim();
        if operator.dim() != (d, d) {
            return Err(AlgebraError::DimensionMismatch { expected: d, found: operator.nrows() }.into());
        }
        if operator.iter().all(|z| *z == C64::from(0.0)) {
            return Ok(());
        }
        self.terms.push(Term { modulation, operator });
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.modulation == Modulation::Constant)
    }

    pub fn at(&self, t: f64) -> Result<Operator> {
        if !t.is_finite() {
            return Err(ModelError::NonFiniteTime(t));
        }
        let d = self.space.dim();
        let mut m = Matrix::zeros((d, d));
        for term in &self.terms {
            m.scaled_add(term.modulation.value(t), &term.operator);
        }
        Ok(Operator::new(self.space.clone(), m)?)
    }
}

/// Reference frame for the oscillator(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillatorFrame {
    Lab,
    /// Rotating at ω_m; with `rwa` the terms oscillating at 2ω_m are dropped.
    Rotating { rwa: bool },
}

/// Reference frame for the qubits. `Rotating` removes `½ω_a σ_z`; this is
/// an exact interaction picture because every qubit operator commutes with it
/// or is phase-covariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitFrame {
    Lab,
    Rotating,
}

fn push_qubit_terms(
    h: &mut OperatorSchedule,
    p: &SystemParams,
    qubits: QubitFrame,
) -> Result<()> {
    if qubits == QubitFrame::Lab {
        let space = h.space().clone();
        let z1 = embed(&sigma_z(), 0, &space)?.into_data();
        let z2 = embed(&sigma_z(), 1, &space)?.into_data();
        h.push(Modulation::Constant, z1 * C64::from(0.5 * p.omega_a1) + z2 * C64::from(0.5 * p.omega_a2))?;
    }
    Ok(())
}

/// Pushes `g cos(ω_m t) σ_z (a + a†)` in the requested frame.
fn push_drive(
    h: &mut OperatorSchedule,
    qubit: usize,
    osc: usize,
    g: f64,
    omega_m: f64,
    frame: OscillatorFrame,
) -> Result<()> {
    let space = h.space().clone();
    let d = space.factor_dim(osc)?;
    let z = embed(&sigma_z(), qubit, &space)?.into_data();
    let a = embed(&annihilation(d)?, osc, &space)?.into_data();
    let za = z.dot(&a);
    let zad = crate::algebra::dagger(&za);
    match frame {
        OscillatorFrame::Lab => {
            h.push(Modulation::Cos { omega: omega_m }, (&za + &zad) * C64::from(g))?;
        }
        OscillatorFrame::Rotating { rwa } => {
            h.push(Modulation::Constant, (&za + &zad) * C64::from(0.5 * g))?;
            if !rwa {
                h.push(Modulation::Phase { omega: 2.0 * omega_m }, zad * C64::from(0.5 * g))?;
                h.push(Modulation::Phase { omega: -2.0 * omega_m }, za * C64::from(0.5 * g))?;
            }
        }
    }
    Ok(())
}

/// Two qubits sharing one modulated oscillator, ordering `|q₁ q₂ n⟩`.
pub fn single_oscillator_hamiltonian(
    p: &SystemParams,
    cutoff: usize,
    oscillator: OscillatorFrame,
    qubits: QubitFrame,
) -> Result<OperatorSchedule> {
    p.validate()?;
    let space = HilbertSpace::qubits_and_oscillators(2, &[cutoff])?;
    let mut h = OperatorSchedule::new(space.clone());
    let n = embed(&number(cutoff)?, 2, &space)?.into_data();
    let w = match oscillator {
        OscillatorFrame::Lab => p.omega_r,
        OscillatorFrame::Rotating { .. } => p.delta(),
    };
    h.push(Modulation::Constant, n * C64::from(w))?;
    push_qubit_terms(&mut h, p, qubits)?;
    push_drive(&mut h, 0, 2, p.g1, p.omega_m, oscillator)?;
    push_drive(&mut h, 1, 2, p.g2, p.omega_m, oscillator)?;
    Ok(h)
}

/// Laboratory-frame Hamiltonian at time `t`.
pub fn lab_hamiltonian(p: &SystemParams, cutoff: usize, t: f64) -> Result<Operator> {
    single_oscillator_hamiltonian(p, cutoff, OscillatorFrame::Lab, QubitFrame::Lab)?.at(t)
}

/// Hamiltonian in the frame rotating at ω_m (oscillator only).
pub fn rotating_hamiltonian(p: &SystemParams, cutoff: usize, t: f64, rwa: bool) -> Result<Operator> {
    single_oscillator_hamiltonian(p, cutoff, OscillatorFrame::Rotating { rwa }, QubitFrame::Lab)?.at(t)
}

/// Qubit 1 on oscillator `a`, qubit 2 on oscillator `b`, exchange-coupled;
/// ordering `|q₁ q₂ n_a n_b⟩`.
pub fn remote_hamiltonian(
    p: &SystemParams,
    cutoffs: (usize, usize),
    oscillator: OscillatorFrame,
    qubits: QubitFrame,
) -> Result<OperatorSchedule> {
    p.validate()?;
    let two = *p.require_two_oscillator()?;
    let space = HilbertSpace::qubits_and_oscillators(2, &[cutoffs.0, cutoffs.1])?;
    let mut h = OperatorSchedule::new(space.clone());
    let (wa, wb) = match oscillator {
        OscillatorFrame::Lab => (two.omega_a, two.omega_b),
        OscillatorFrame::Rotating { .. } => (two.omega_a - p.omega_m, two.omega_b - p.omega_m),
    };
    let na = embed(&number(cutoffs.0)?, 2, &space)?.into_data();
    let nb = embed(&number(cutoffs.1)?, 3, &space)?.into_data();
    let a = embed(&annihilation(cutoffs.0)?, 2, &space)?.into_data();
    let b = embed(&annihilation(cutoffs.1)?, 3, &space)?.into_data();
    let hop = crate::algebra::dagger(&a).dot(&b);
    let exchange = &hop + &crate::algebra::dagger(&hop);
    h.push(
        Modulation::Constant,
        na * C64::from(wa) + nb * C64::from(wb) + exchange * C64::from(two.g_ab),
    )?;
    push_qubit_terms(&mut h, p, qubits)?;
    push_drive(&mut h, 0, 2, p.g1, p.omega_m, oscillator)?;
    push_drive(&mut h, 1, 3, p.g2, p.omega_m, oscillator)?;
    Ok(h)
}

/// Effective model `ω a†a + J̄ σ_z1 σ_z2`, where `oscillator_frequency` is the
/// oscillator energy kept in the chosen frame (ω_r in the laboratory).
pub fn polaron_schedule(
    j_bar: f64,
    cutoff: usize,
    oscillator_frequency: f64,
) -> Result<OperatorSchedule> {
    let space = HilbertSpace::qubits_and_oscillators(2, &[cutoff])?;
    let mut h = OperatorSchedule::new(space.clone());
    let n = embed(&number(cutoff)?, 2, &space)?.into_data();
    let z1 = embed(&sigma_z(), 0, &space)?.into_data();
    let z2 = embed(&sigma_z(), 1, &space)?.into_data();
    h.push(Modulation::Constant, n * C64::from(oscillator_frequency) + z1.dot(&z2) * C64::from(j_bar))?;
    Ok(h)
}

/// Laboratory-frame polaron Hamiltonian `ω_r a†a + J̄ σ_z1 σ_z2`.
pub fn polaron_hamiltonian(p: &SystemParams, j_bar: f64, cutoff: usize) -> Result<Operator> {
    p.validate()?;
    polaron_schedule(j_bar, cutoff, p.omega_r)?.at(0.0)
}
