//! Cross-model and closed-form oracles through the public API.

use std::f64::consts::PI;

use longigate::algebra::{kron, max_abs, number, outer, trace, trace_distance, DensityState, Matrix, Vector, C64};
use longigate::dynamics::{build_model, evolve, ModelKind, Propagation, SolverConfig};
use longigate::experiments::{run_sweep, ModelLevel, Study, SweepSpec};
use longigate::fidelity::evaluate_gate;
use longigate::model::units::{ghz, mhz};
use longigate::model::{effective_coupling_with, CouplingApprox, GateSchedule, SystemParams};

fn shrunk() -> (SystemParams, GateSchedule) {
    let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), mhz(5.0));
    let j = effective_coupling_with(&p, CouplingApprox::Full).unwrap();
    let s = GateSchedule::with_duration(&p, PI, 2.0 * PI / p.delta(), j, CouplingApprox::Full);
    (p, s)
}

fn plus_plus_vacuum(dim: usize) -> Matrix {
    let plus = Vector::from(vec![C64::from(0.5f64.sqrt()); 2]);
    let mut vac = Matrix::zeros((dim, dim));
    vac[[0, 0]] = C64::from(1.0);
    kron(&kron(&outer(&plus, &plus), &outer(&plus, &plus)), &vac)
}

/// Final joint state and its qubit reduction.
fn run(p: &SystemParams, s: &GateSchedule, kind: ModelKind, cutoff: usize) -> (Matrix, Matrix) {
    let model = build_model(p, s, kind, cutoff).unwrap();
    let rho = DensityState::new(model.space().clone(), plus_plus_vacuum(cutoff)).unwrap();
    let ev = evolve(&model, &rho, &SolverConfig::default(), &[]).unwrap();
    let q = model.reduce_to_qubits(ev.state.data()).unwrap();
    (ev.state.data().clone(), q)
}

#[test]
fn lab_and_unwound_rotating_frames_agree() {
    let (p, s) = shrunk();
    let (lab, q_lab) = run(&p, &s, ModelKind::Lab, 6);
    let (rot, q_rot) = run(&p, &s, ModelKind::Rotating { rwa: false }, 6);
    assert!(max_abs(&(&q_lab - &q_rot)) < 1e-6);
    // photon number is invariant under the frame rotation
    let n_op = kron(&Matrix::eye(4), &number(6).unwrap());
    let n_lab = trace(&n_op.dot(&lab)).re;
    let n_rot = trace(&n_op.dot(&rot)).re;
    assert!((n_lab - n_rot).abs() < 1e-6, "{n_lab} vs {n_rot}");
}

#[test]
fn polaron_frame_matches_lab_frame_on_shrunk_instance() {
    let (p, s) = shrunk();
    let (_, lab) = run(&p, &s, ModelKind::Lab, 6);
    let (_, pol) = run(&p, &s, ModelKind::PolaronEffective, 6);
    let td = trace_distance(&lab, &pol);
    assert!(td <= 1e-4, "trace distance {td:e}");
}

#[test]
fn rwa_rotating_frame_matches_rwa_polaron_model() {
    let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), mhz(0.05));
    let s = longigate::model::plan_schedule(&p, PI, Default::default()).unwrap();
    let (_, rot) = run(&p, &s, ModelKind::Rotating { rwa: true }, 12);
    let (_, pol) = run(&p, &s, ModelKind::PolaronEffective, 12);
    assert!(trace_distance(&rot, &pol) <= 1e-4);
}

#[test]
fn propagation_strategies_agree_on_the_gate() {
    let (p, s) = shrunk();
    let mut cfg = SolverConfig::default().with_cutoff(6);
    cfg.cutoff_escalation.enabled = false;
    let auto = evaluate_gate(&p, &s, ModelKind::Rotating { rwa: true }, &cfg, C64::from(0.0)).unwrap();
    cfg.propagation = Propagation::Direct;
    let direct = evaluate_gate(&p, &s, ModelKind::Rotating { rwa: true }, &cfg, C64::from(0.0)).unwrap();
    assert!((auto.report.f_avg - direct.report.f_avg).abs() < 1e-9);
}

#[test]
fn lossy_remote_gate_krylov_matches_direct() {
    let mut p = SystemParams::remote(ghz(6.0), ghz(6.0), mhz(100.0), mhz(600.0), mhz(60.0));
    p.kappa = mhz(0.5);
    let s = longigate::model::plan_remote_schedule(&p, PI, Default::default()).unwrap();
    let model = build_model(&p, &s, ModelKind::Rotating { rwa: true }, 6).unwrap();
    let n = model.space().dim();
    let mut x0 = Matrix::zeros((n, n));
    x0[[0, 0]] = C64::from(1.0);
    let cfg = SolverConfig::default().with_cutoff(6);
    let (auto, d) = longigate::dynamics::propagate_operator(&model, &x0, &cfg).unwrap();
    assert_eq!(d.methods, vec!["krylov".to_string()]);
    let direct_cfg = SolverConfig { propagation: Propagation::Direct, ..cfg };
    let (direct, _) = longigate::dynamics::propagate_operator(&model, &x0, &direct_cfg).unwrap();
    assert!(max_abs(&(&auto - &direct)) < 1e-7);
}

#[test]
fn rows_are_reproducible_from_their_provenance() {
    let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), mhz(0.05));
    let mut spec = SweepSpec::new(Study::BenchmarkPoint, p);
    spec.model = ModelLevel::PolaronEffective;
    let r = run_sweep(&spec, Some(1)).unwrap();
    let json = r.provenance_json().unwrap();
    let prov: longigate::experiments::Provenance = serde_json::from_str(&json).unwrap();
    let rec = &prov.points[0];
    let ev = evaluate_gate(&rec.params, rec.schedule.as_ref().unwrap(), rec.model, &prov.spec.solver, prov.spec.alpha0)
        .unwrap();
    assert_eq!(Some(ev.report.infidelity()), r.rows[0].infidelity);
}
