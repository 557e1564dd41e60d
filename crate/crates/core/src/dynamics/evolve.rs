//! Master-equation evolution of states and arbitrary operators.

use std::io::Write;

use ndarray::s;

use crate::algebra::{
    hermitian_eigenvalues, hermiticity_error, trace, DensityState, HilbertSpace, Matrix, Operator, C64, ZERO,
};
use crate::model::OperatorSchedule;

use super::dissipator::Dissipator;
use super::generator::Generator;
use super::integrator::RkStats;
use super::propagate::{Method, Propagator};
use super::{DynamicsError, Result, SolverConfig, EIGENVALUE_ERROR_LIMIT, TRACE_ERROR_LIMIT};

/// Frame in which the model is simulated. Qubits are always in their own
/// rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    Lab,
    /// Oscillators rotating at `omega`.
    Rotating { omega: f64, rwa: bool },
    /// Polaron frame; `displacements` are `α₁(T), α₂(T)` used to undo the
    /// transformation at the final time.
    Polaron { displacements: [C64; 2] },
}

impl Frame {
    pub fn label(&self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Rotating { .. } => "rotating",
            Frame::Polaron { .. } => "polaron",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub hamiltonian: OperatorSchedule,
    pub dissipators: Vec<Dissipator>,
    /// `[0, T]`.
    pub t_span: (f64, f64),
    pub frame: Frame,
}

impl LindbladModel {
    pub fn new(hamiltonian: OperatorSchedule, dissipators: Vec<Dissipator>, t_end: f64, frame: Frame) -> Result<Self> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(crate::model::ModelError::NonFiniteTime(t_end).into());
        }
        let n = hamiltonian.space().dim();
        for d in &dissipators {
            for term in &d.terms {
                if term.a.nrows() != n || term.b.nrows() != n {
                    return Err(DynamicsError::SpaceMismatch { expected: n, found: term.a.nrows() });
                }
            }
        }
        Ok(Self { hamiltonian, dissipators, t_span: (0.0, t_end), frame })
    }

    pub fn space(&self) -> &HilbertSpace {
        self.hamiltonian.space()
    }

    pub fn t_end(&self) -> f64 {
        self.t_span.1
    }

    pub(crate) fn generator(&self) -> Generator {
        Generator::new(&self.hamiltonian, &self.dissipators)
    }

    /// Two-qubit operator obtained by tracing out every oscillator of a
    /// final-time operator, undoing the polaron transformation if needed.
    pub fn reduce_to_qubits(&self, x: &Matrix) -> Result<Matrix> {
        let (q, d) = qubit_split(self.space())?;
        let mut out = Matrix::zeros((q, q));
        for i in 0..q {
            for j in 0..q {
                let block = x.slice(s![i * d..(i + 1) * d, j * d..(j + 1) * d]);
                let mut tr = ZERO;
                for k in 0..d {
                    tr += block[[k, k]];
                }
                out[[i, j]] = tr * self.exit_overlap(i, j);
            }
        }
        Ok(out)
    }

    /// `⟨β_j|β_i⟩` with `β_k = α₁s₁ + α₂s₂`; 1 outside the polaron frame.
    fn exit_overlap(&self, i: usize, j: usize) -> C64 {
        let Frame::Polaron { displacements: [a1, a2] } = self.frame else {
            return C64::from(1.0);
        };
        let beta = |k: usize| {
            let s1 = if k & 2 == 0 { 1.0 } else { -1.0 };
            let s2 = if k & 1 == 0 { 1.0 } else { -1.0 };
            a1 * s1 + a2 * s2
        };
        let (bi, bj) = (beta(i), beta(j));
        (-0.5 * bi.norm_sqr() - 0.5 * bj.norm_sqr() + bj.conj() * bi).exp()
    }
}

fn qubit_split(space: &HilbertSpace) -> Result<(usize, usize)> {
    match space.leading_qubits_split() {
        Some((4, d)) => Ok((4, d)),
        _ => Err(DynamicsError::Unsupported("model space must start with exactly two qubits".into())),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Largest `|tr X(t) − tr X(0)|` over all checkpoints.
    pub max_trace_deviation: f64,
    /// Largest `‖ρ − ρ†‖_max` (states only).
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen at samples and at the final time (states only).
    pub min_eigenvalue: f64,
    /// Number of states checked.
    pub checkpoints: usize,
    pub block_mode: bool,
    /// Propagation strategies used, one per propagated block.
    pub methods: Vec<String>,
    pub rk: RkStats,
}

impl Diagnostics {
    fn new() -> Self {
        Self { min_eigenvalue: f64::INFINITY, ..Self::default() }
    }

    fn merge(&mut self, other: &Diagnostics) {
        self.max_trace_deviation = self.max_trace_deviation.max(other.max_trace_deviation);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.checkpoints += other.checkpoints;
        self.block_mode |= other.block_mode;
        self.methods.extend(other.methods.iter().cloned());
        self.rk.merge(&other.rk);
    }

    fn check_trace(&mut self, t: f64, x: &Matrix, trace0: C64) -> Result<()> {
        let tr = trace(x);
        if !(tr.re.is_finite() && tr.im.is_finite()) {
            return Err(DynamicsError::NonFinite { t });
        }
        let dev = (tr - trace0).norm();
        self.max_trace_deviation = self.max_trace_deviation.max(dev);
        self.checkpoints += 1;
        if dev > TRACE_ERROR_LIMIT {
            return Err(DynamicsError::TraceDrift { t, deviation: dev });
        }
        Ok(())
    }

    fn check_state(&mut self, t: f64, rho: &Matrix, eigen: bool) -> Result<()> {
        self.check_trace(t, rho, C64::from(1.0))?;
        self.max_hermiticity_error = self.max_hermiticity_error.max(hermiticity_error(rho));
        if eigen {
            let min = hermitian_eigenvalues(rho)[0];
            self.min_eigenvalue = self.min_eigenvalue.min(min);
            if min < EIGENVALUE_ERROR_LIMIT {
                return Err(DynamicsError::NegativeEigenvalue { t, value: min });
            }
        }
        Ok(())
    }
}

fn method_label(m: Method) -> String {
    match m {
        Method::ExactUnitary => "exact_unitary".into(),
        Method::SuperoperatorExp => "superoperator_exp".into(),
        Method::PeriodMap { count, .. } => format!("period_map(k={count})"),
        Method::Krylov => "krylov".into(),
        Method::Direct => "direct".into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: Matrix,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Columns `t, tr_rho, purity` then `re_<name>, im_<name>` per observable.
    pub fn write_csv<W: Write>(&self, out: W, observables: &[(String, Operator)]) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "tr_rho".into(), "purity".into()];
        for (name, _) in observables {
            header.push(format!("re_{name}"));
            header.push(format!("im_{name}"));
        }
        w.write_record(&header)?;
        for sample in &self.samples {
            let rho = &sample.state;
            let mut row = vec![
                format!("{:e}", sample.t),
                format!("{:.15e}", trace(rho).re),
                format!("{:.15e}", rho.iter().map(|z| z.norm_sqr()).sum::<f64>()),
            ];
            for (_, op) in observables {
                let v = trace(&op.data().dot(rho));
                row.push(format!("{:.15e}", v.re));
                row.push(format!("{:.15e}", v.im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: DensityState,
    pub trajectory: Trajectory,
    pub diagnostics: Diagnostics,
}

/// Evolves `rho0` over the model's time span. With `samples` (times inside
/// `[0, T]`) the full density matrix is stepped and checked after every
/// accepted step; otherwise the fastest exact strategy is used and the final
/// state is checked.
pub fn evolve(model: &LindbladModel, rho0: &DensityState, cfg: &SolverConfig, samples: &[f64]) -> Result<Evolution> {
    cfg.validate()?;
    let n = model.space().dim();
    if rho0.space() != model.space() {
        return Err(DynamicsError::SpaceMismatch { expected: n, found: rho0.space().dim() });
    }
    let t_end = model.t_end();
    let mut diag = Diagnostics::new();
    let gen = model.generator();
    let mut trajectory = Trajectory::default();

    let final_state = if samples.is_empty() {
        let x = propagate_hermitian(model, &gen, rho0.data(), cfg, &mut diag)?;
        diag.check_state(t_end, &x, true)?;
        x
    } else {
        let mut times: Vec<f64> = samples.iter().copied().filter(|t| *t >= 0.0 && *t <= t_end).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let direct = SolverConfig { propagation: super::Propagation::Direct, ..*cfg };
        let prop = Propagator::new(&gen, t_end, &direct)?;
        let mut opts = prop.rk_options();
        let mut x = rho0.data().clone();
        let mut t = 0.0;
        diag.methods.push(method_label(Method::Direct));
        for &ts in times.iter().chain(std::iter::once(&t_end)) {
            if ts > t {
                let stats = prop.integrate_direct(&mut x, t, ts, &opts, |tt, y| diag.check_state(tt, y, false))?;
                opts.initial_step = Some(stats.next_step).filter(|h| *h > 0.0);
                diag.rk.merge(&stats);
                t = ts;
            }
            if trajectory.samples.last().map_or(true, |s| s.t < ts) && times.contains(&ts) {
                diag.check_state(ts, &x, true)?;
                trajectory.samples.push(TrajectorySample { t: ts, state: x.clone() });
            }
        }
        diag.check_state(t_end, &x, true)?;
        x
    };
    if diag.min_eigenvalue == f64::INFINITY {
        diag.min_eigenvalue = 0.0;
    }
    let state = DensityState::new_unchecked(model.space().clone(), final_state);
    Ok(Evolution { state, trajectory, diagnostics: diag })
}

/// `X(T)` for an arbitrary, possibly non-Hermitian, `X(0)`.
pub fn propagate_operator(model: &LindbladModel, x0: &Matrix, cfg: &SolverConfig) -> Result<(Matrix, Diagnostics)> {
    cfg.validate()?;
    let n = model.space().dim();
    if x0.nrows() != n || x0.ncols() != n {
        return Err(DynamicsError::SpaceMismatch { expected: n, found: x0.nrows() });
    }
    let gen = model.generator();
    let mut diag = Diagnostics::new();
    let x = match block_layout(model, &gen) {
        Some((q, d)) => {
            diag.block_mode = true;
            let mut out = Matrix::zeros((n, n));
            for i in 0..q {
                for j in 0..q {
                    let xb = x0.slice(s![i * d..(i + 1) * d, j * d..(j + 1) * d]).to_owned();
                    if xb.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    let yb = propagate_block(&gen, i, j, d, &xb, model.t_end(), cfg, &mut diag)?;
                    out.slice_mut(s![i * d..(i + 1) * d, j * d..(j + 1) * d]).assign(&yb);
                }
            }
            out
        }
        None => {
            let mut p = Propagator::new(&gen, model.t_end(), cfg)?;
            diag.methods.push(method_label(p.method()));
            let x = p.apply(x0)?;
            diag.rk.merge(&p.stats);
            x
        }
    };
    diag.check_trace(model.t_end(), &x, trace(x0))?;
    if diag.min_eigenvalue == f64::INFINITY {
        diag.min_eigenvalue = 0.0;
    }
    Ok((x, diag))
}

fn block_layout(model: &LindbladModel, gen: &Generator) -> Option<(usize, usize)> {
    let (q, d) = model.space().leading_qubits_split()?;
    (q > 1 && gen.is_block_diagonal(q, d)).then_some((q, d))
}

#[allow(clippy::too_many_arguments)]
fn propagate_block(
    gen: &Generator,
    i: usize,
    j: usize,
    d: usize,
    xb: &Matrix,
    t_end: f64,
    cfg: &SolverConfig,
    diag: &mut Diagnostics,
) -> Result<Matrix> {
    let block = gen.block(i, j, d);
    let mut p = Propagator::new(&block, t_end, cfg)?;
    diag.methods.push(method_label(p.method()));
    let y = p.apply(xb)?;
    diag.rk.merge(&p.stats);
    Ok(y)
}

/// Final-time state for Hermitian input; in block mode only blocks `i ≤ j`
/// are propagated.
fn propagate_hermitian(
    model: &LindbladModel,
    gen: &Generator,
    rho0: &Matrix,
    cfg: &SolverConfig,
    diag: &mut Diagnostics,
) -> Result<Matrix> {
    let n = rho0.nrows();
    let t_end = model.t_end();
    match block_layout(model, gen) {
        Some((q, d)) => {
            diag.block_mode = true;
            let mut out = Matrix::zeros((n, n));
            for i in 0..q {
                for j in i..q {
                    let xb = rho0.slice(s![i * d..(i + 1) * d, j * d..(j + 1) * d]).to_owned();
                    if xb.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    let mut sub = Diagnostics::new();
                    let yb = propagate_block(gen, i, j, d, &xb, t_end, cfg, &mut sub)?;
                    diag.merge(&sub);
                    out.slice_mut(s![i * d..(i + 1) * d, j * d..(j + 1) * d]).assign(&yb);
                    if i != j {
                        out.slice_mut(s![j * d..(j + 1) * d, i * d..(i + 1) * d]).assign(&crate::algebra::dagger(&yb));
                    }
                }
            }
            Ok(out)
        }
        None => {
            let mut p = Propagator::new(gen, t_end, cfg)?;
            diag.methods.push(method_label(p.method()));
            let x = if p.method() == Method::Direct {
                let mut x = rho0.clone();
                let opts = p.rk_options();
                let stats = p.integrate_direct(&mut x, 0.0, t_end, &opts, |t, y| diag.check_state(t, y, false))?;
                p.stats.merge(&stats);
                x
            } else {
                p.apply(rho0)?
            };
            diag.rk.merge(&p.stats);
            Ok(x)
        }
    }
}
