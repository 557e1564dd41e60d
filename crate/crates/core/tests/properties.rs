//! Property tests of the documented invariants.

use std::f64::consts::PI;

use longigate::algebra::{
    embed, hermiticity_error, kron, max_abs, partial_trace, trace, DensityState, HilbertSpace, Matrix, C64,
};
use longigate::dynamics::{build_model, evolve, ModelKind, Propagation, SolverConfig};
use longigate::experiments::{run_sweep, ModelLevel, Study, SweepSpec};
use longigate::fidelity::ptm_of_unitary;
use longigate::model::units::{ghz, mhz};
use longigate::model::{plan_schedule, PlanOptions, SystemParams};
use proptest::prelude::*;

fn hermitian(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = Matrix::from_shape_fn((n, n), |(i, j)| C64::new(v[i * n + j].0, v[i * n + j].1));
        (&a + &a.t().mapv(|z| z.conj())) * C64::from(0.5)
    })
}

/// Random density matrix `AA†/tr AA†`.
fn density(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = Matrix::from_shape_fn((n, n), |(i, j)| C64::new(v[i * n + j].0, v[i * n + j].1));
        let r = a.dot(&a.t().mapv(|z| z.conj()));
        let t = trace(&r);
        r / t
    })
}

fn unitary4() -> impl Strategy<Value = Matrix> {
    hermitian(4).prop_map(|h| longigate::algebra::expm(&(h * C64::new(0.0, -1.0))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn embedded_operators_on_different_factors_commute(x in hermitian(2), y in hermitian(3)) {
        let space = HilbertSpace::qubits_and_oscillators(2, &[3]).unwrap();
        let a = embed(&x, 0, &space).unwrap();
        let b = embed(&y, 2, &space).unwrap();
        prop_assert!(a.hermiticity_error() <= 1e-12 && b.hermiticity_error() <= 1e-12);
        let c = a.commutator(&b).unwrap();
        prop_assert!(max_abs(c.data()) <= 1e-12);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(q in density(4), o in density(3)) {
        let space = HilbertSpace::qubits_and_oscillators(2, &[3]).unwrap();
        let (r, _) = partial_trace(&kron(&q, &o), &space, &[0, 1]).unwrap();
        prop_assert!(max_abs(&(&r - &q)) <= 1e-12);
    }

    #[test]
    fn ptm_of_product_is_product_of_ptms(u in unitary4(), v in unitary4()) {
        let lhs = ptm_of_unitary(&u.dot(&v));
        let rhs = ptm_of_unitary(&u).dot(&ptm_of_unitary(&v));
        prop_assert!((&lhs - &rhs).iter().fold(0.0f64, |m, x| m.max(x.abs())) <= 1e-9);
    }

    #[test]
    fn planning_is_commensurate_and_idempotent(
        delta in 200.0f64..2000.0,
        g in 10.0f64..80.0,
        theta in 0.5f64..(2.0 * PI),
    ) {
        let p = SystemParams::with_detuning(ghz(6.0), mhz(delta), mhz(g), mhz(0.05));
        let a = plan_schedule(&p, theta, PlanOptions::default());
        let b = plan_schedule(&p, theta, PlanOptions::default());
        prop_assert_eq!(&a, &b);
        if let Ok(s) = a {
            let loops = p.delta() * s.t_g / (2.0 * PI);
            prop_assert!((loops - s.n as f64).abs() <= 1e-9 * s.n as f64);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn trajectories_stay_physical(
        kappa in 0.0f64..20.0,
        g in 20.0f64..80.0,
        delta in 300.0f64..800.0,
        seed in density(4),
    ) {
        let p = SystemParams::with_detuning(ghz(6.0), mhz(delta), mhz(g), mhz(kappa));
        let s = plan_schedule(&p, PI, PlanOptions::default()).unwrap();
        let model = build_model(&p, &s, ModelKind::Rotating { rwa: true }, 8).unwrap();
        let mut vac = Matrix::zeros((8, 8));
        vac[[0, 0]] = C64::from(1.0);
        let rho = DensityState::new(model.space().clone(), kron(&seed, &vac)).unwrap();
        let cfg = SolverConfig { propagation: Propagation::Direct, ..SolverConfig::default() };
        let samples: Vec<f64> = (1..6).map(|k| s.t_g * k as f64 / 6.0).collect();
        let ev = evolve(&model, &rho, &cfg, &samples).unwrap();
        let d = &ev.diagnostics;
        prop_assert!(d.max_trace_deviation <= 1e-8);
        prop_assert!(d.max_hermiticity_error <= 1e-8);
        prop_assert!(d.min_eigenvalue >= -1e-7);
        let out = ev.state.data();
        prop_assert!(hermiticity_error(out) <= 1e-8);
        if kappa == 0.0 {
            let purity = |m: &Matrix| trace(&m.dot(m)).re;
            prop_assert!((purity(out) - purity(rho.data())).abs() <= 1e-8);
        }
    }
}

#[test]
fn closed_system_conserves_purity() {
    let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), 0.0);
    let s = plan_schedule(&p, PI, PlanOptions::default()).unwrap();
    let model = build_model(&p, &s, ModelKind::Rotating { rwa: true }, 8).unwrap();
    let n = model.space().dim();
    let mut psi = longigate::algebra::Vector::zeros(n);
    psi[0] = C64::new(0.6, 0.0);
    psi[8 * 3 + 1] = C64::new(0.0, 0.8);
    let rho = DensityState::from_pure(model.space().clone(), &psi).unwrap();
    let cfg = SolverConfig { propagation: Propagation::Direct, ..SolverConfig::default() };
    let ev = evolve(&model, &rho, &cfg, &[s.t_g / 2.0]).unwrap();
    let out = ev.state.data();
    assert!((trace(&out.dot(out)).re - 1.0).abs() <= 1e-8);
}

#[test]
fn identical_specs_give_identical_rows() {
    let p = SystemParams::with_detuning(ghz(6.0), mhz(537.0), mhz(60.0), mhz(0.01));
    let mut spec = SweepSpec::new(Study::CouplingSweep, p);
    spec.axis = vec![1000.0, 3000.0];
    spec.series = vec![100000.0];
    spec.model = ModelLevel::PolaronEffective;
    spec.record_timing = false;
    let a = run_sweep(&spec, Some(1)).unwrap();
    let b = run_sweep(&spec, Some(2)).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.csv_string().unwrap(), b.csv_string().unwrap());
}
