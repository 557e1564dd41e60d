//! Fast invariant suite behind `longigate selftest`.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use crate::algebra::{
    annihilation, coherent_state, embed, kron, outer, sigma_minus, trace, trace_distance,
    DensityState, HilbertSpace, Matrix, Vector, C64,
};
use crate::dynamics::{
    build_model, evolve, photon_loss, qubit_dephasing, Coefficient, Dissipator, DissipatorKind, Frame, LindbladModel,
    ModelKind, SolverConfig,
};
use crate::fidelity::{average_gate_fidelity, ptm_of_map, ptm_of_unitary, GateChannel};
use crate::model::units::{ghz, mhz, to_ns};
use crate::model::{
    effective_coupling_with, plan_schedule, CouplingApprox, GateSchedule, OperatorSchedule, PlanOptions,
    SystemParams,
};

/// Deliberate defects for checking that the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// Builds the dephasing channel as `γ·D[σ_z]/2` instead of `γ·D[σ_z]`.
    DephasingConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured error.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

type Check = fn(Option<Perturbation>) -> CheckResult;

fn check(name: &'static str, value: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult { name, passed: value.is_finite() && value <= tolerance, value, tolerance, detail }
}

fn failed(name: &'static str, err: impl std::fmt::Display) -> CheckResult {
    CheckResult { name, passed: false, value: f64::NAN, tolerance: 0.0, detail: err.to_string() }
}

fn tight() -> SolverConfig {
    SolverConfig { rel_tol: 1e-11, abs_tol: 1e-13, ..SolverConfig::default() }
}

/// Qubit coherence under `γD[σ_z]` decays as `e^{−2γt}`.
fn dephasing_decay(perturb: Option<Perturbation>) -> CheckResult {
    let name = "dephasing_decay";
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let space = HilbertSpace::qubits_and_oscillators(2, &[4])?;
        let (gamma, t) = (0.8, 1.5);
        let applied = if perturb == Some(Perturbation::DephasingConvention) { 0.5 * gamma } else { gamma };
        let d = qubit_dephasing(applied, &space, 0)?;
        let model = LindbladModel::new(OperatorSchedule::new(space.clone()), vec![d], t, Frame::Lab)?;
        let plus = Vector::from(vec![C64::from(0.5f64.sqrt()); 2]);
        let mut vac = Matrix::zeros((4, 4));
        vac[[0, 0]] = C64::from(1.0);
        let zero = Vector::from(vec![C64::from(1.0), C64::from(0.0)]);
        let rho = kron(&kron(&outer(&plus, &plus), &outer(&zero, &zero)), &vac);
        let ev = evolve(&model, &DensityState::new(space, rho)?, &tight(), &[])?;
        let q = model.reduce_to_qubits(ev.state.data())?;
        let coherence = 2.0 * (q[[0, 2]] + q[[1, 3]]).norm();
        Ok((coherence - (-2.0 * gamma * t).exp()).abs())
    };
    match run() {
        Ok(e) => check(name, e, 1e-8, "qubit coherence vs e^{-2γt}".into()),
        Err(e) => failed(name, e),
    }
}

/// A coherent amplitude under `κD[a]` decays as `e^{−κt/2}`.
fn photon_loss_decay(_: Option<Perturbation>) -> CheckResult {
    let name = "photon_loss_decay";
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let cutoff = 12;
        let space = HilbertSpace::qubits_and_oscillators(0, &[cutoff])?;
        let (kappa, t) = (0.6, 2.0);
        let model = LindbladModel::new(
            OperatorSchedule::new(space.clone()),
            vec![photon_loss(kappa, &space, 0)?],
            t,
            Frame::Lab,
        )?;
        let alpha = C64::new(0.3, 0.1);
        let rho = DensityState::from_pure(space, &coherent_state(cutoff, alpha)?)?;
        let ev = evolve(&model, &rho, &tight(), &[])?;
        let a = annihilation(cutoff)?;
        let got = trace(&a.dot(ev.state.data()));
        Ok((got - alpha * (-0.5 * kappa * t).exp()).norm())
    };
    match run() {
        Ok(e) => check(name, e, 1e-8, "<a>(t) vs α e^{-κt/2}".into()),
        Err(e) => failed(name, e),
    }
}

/// Upper-level population under `D[σ_−]/T₁` decays as `e^{−t/T₁}`.
fn t1_decay(_: Option<Perturbation>) -> CheckResult {
    let name = "t1_decay";
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let space = HilbertSpace::qubits_and_oscillators(2, &[4])?;
        let (rate, t) = (0.5, 1.2);
        let sm = embed(&sigma_minus(), 1, &space)?.into_data();
        let d = Dissipator::lindblad(DissipatorKind::QubitDecay, Coefficient::constant(rate), sm);
        let model = LindbladModel::new(OperatorSchedule::new(space.clone()), vec![d], t, Frame::Lab)?;
        let mut rho = Matrix::zeros((16, 16));
        rho[[0, 0]] = C64::from(1.0);
        let ev = evolve(&model, &DensityState::new(space, rho)?, &tight(), &[])?;
        let q = model.reduce_to_qubits(ev.state.data())?;
        Ok((q[[0, 0]].re - (-rate * t).exp()).abs())
    };
    match run() {
        Ok(e) => check(name, e, 1e-8, "|00> population vs e^{-t/T1}".into()),
        Err(e) => failed(name, e),
    }
}

/// Lab-frame and polaron-frame runs of one loop agree on the qubits.
fn oracle_equivalence(_: Option<Perturbation>) -> CheckResult {
    let name = "oracle_equivalence_shrunk";
    let run = || -> Result<(f64, String), Box<dyn std::error::Error>> {
        let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), mhz(5.0));
        let j = effective_coupling_with(&p, CouplingApprox::Full)?;
        let s = GateSchedule::with_duration(&p, PI, 2.0 * PI / p.delta(), j, CouplingApprox::Full);
        let plus = Vector::from(vec![C64::from(0.5f64.sqrt()); 2]);
        let q0 = kron(&outer(&plus, &plus), &outer(&plus, &plus));
        let mut reduced = Vec::new();
        for kind in [ModelKind::Lab, ModelKind::PolaronEffective] {
            let model = build_model(&p, &s, kind, 6)?;
            let mut vac = Matrix::zeros((6, 6));
            vac[[0, 0]] = C64::from(1.0);
            let rho = DensityState::new(model.space().clone(), kron(&q0, &vac))?;
            let ev = evolve(&model, &rho, &SolverConfig::default(), &[])?;
            reduced.push(model.reduce_to_qubits(ev.state.data())?);
        }
        Ok((trace_distance(&reduced[0], &reduced[1]), format!("cutoff 6, t_g = {:.4} ns", to_ns(s.t_g))))
    };
    match run() {
        Ok((e, d)) => check(name, e, 1e-4, d),
        Err(e) => failed(name, e),
    }
}

/// `F_avg = (4F_pro + 1)/5` on a depolarizing channel and the unitary
/// overlap formula `F_pro = |tr U†V|²/16`.
fn fidelity_formulas(_: Option<Perturbation>) -> CheckResult {
    let name = "fidelity_formulas";
    let p = 0.3;
    let dep = ptm_of_map(|x| {
        let id = Matrix::from_diag_elem(4, C64::from(0.25));
        x * C64::from(1.0 - p) + id * (trace(x) * p)
    });
    let target = Matrix::from_diag_elem(4, C64::from(1.0));
    let ch = GateChannel::new(dep, Default::default()).expect("valid PTM");
    let f = average_gate_fidelity(&ch, &target);
    let f_pro = 1.0 - 15.0 * p / 16.0;
    let e1 = (f.f_pro - f_pro).abs() + (f.f_avg - (4.0 * f_pro + 1.0) / 5.0).abs();
    let phi = 0.4;
    let mut v = target.clone();
    v[[3, 3]] = C64::from_polar(1.0, phi);
    let uch = GateChannel::new(ptm_of_unitary(&v), Default::default()).expect("valid PTM");
    let fu = average_gate_fidelity(&uch, &target);
    let overlap = (C64::from(3.0) + C64::from_polar(1.0, phi)).norm_sqr() / 16.0;
    let e2 = (fu.f_pro - overlap).abs();
    check(name, e1 + e2, 1e-12, "depolarizing and CP(φ) fidelities".into())
}

/// Composition of PTMs matches the PTM of the composed unitary.
fn ptm_composition(_: Option<Perturbation>) -> CheckResult {
    let name = "ptm_composition";
    let h = Matrix::from_shape_fn((4, 4), |(i, j)| C64::new((i + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
    let herm = &h + &h.t().mapv(|z| z.conj());
    let u = match crate::algebra::expm(&(herm * C64::new(0.0, -1.0))) {
        Ok(u) => u,
        Err(e) => return failed(name, e),
    };
    let mut v = Matrix::from_diag_elem(4, C64::from(1.0));
    v[[3, 3]] = C64::from(-1.0);
    let lhs = ptm_of_unitary(&u.dot(&v));
    let rhs = ptm_of_unitary(&u).dot(&ptm_of_unitary(&v));
    let e = (&lhs - &rhs).mapv(f64::abs).fold(0.0, |a: f64, b| a.max(*b));
    check(name, e, 1e-12, "R(UV) = R(U)R(V)".into())
}

/// The planner reproduces the benchmark schedule.
fn benchmark_schedule(_: Option<Perturbation>) -> CheckResult {
    let name = "benchmark_schedule";
    let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), mhz(0.05));
    match plan_schedule(&p, PI, PlanOptions::default()) {
        Ok(s) => {
            let e = (to_ns(s.t_g) - 37.2439).abs() + (s.n as f64 - 20.0).abs();
            check(name, e, 1e-3, format!("t_g = {:.4} ns, n = {}", to_ns(s.t_g), s.n))
        }
        Err(e) => failed(name, e),
    }
}

const CHECKS: [Check; 7] = [
    dephasing_decay,
    photon_loss_decay,
    t1_decay,
    oracle_equivalence,
    fidelity_formulas,
    ptm_composition,
    benchmark_schedule,
];

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
    pub wall_ms: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

pub fn run_selftest(perturb: Option<Perturbation>) -> SelftestReport {
    let start = Instant::now();
    let checks = CHECKS.iter().map(|c| c(perturb)).collect();
    SelftestReport { checks, wall_ms: start.elapsed().as_secs_f64() * 1e3 }
}
