//! Dense complex operators on labeled tensor-product Hilbert spaces.
//!
//! Conventions used throughout the crate:
//!
//! * `|0⟩` is the +1 eigenstate of `σ_z` (the higher-energy state under
//!   `½ω σ_z`), `|1⟩` the −1 eigenstate. `σ_−` therefore maps `|0⟩ → |1⟩`.
//! * Factors are ordered as listed in [`HilbertSpace`]; the first factor is the
//!   slowest-varying index of the flattened basis (`|q₁⟩⊗|q₂⟩⊗|n⟩`).

mod expm;
mod linalg;

pub use expm::{expm, expm_apply, expm_conjugate};
pub use linalg::{
    hermitian_eigenvalues, kron, max_abs, one_norm, partial_trace, trace, trace_distance,
};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type Matrix = Array2<C64>;
pub type Vector = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity tolerance for Hamiltonian-role operators, relative to the
/// largest entry.
pub const HAMILTONIAN_HERMITICITY_TOL: f64 = 1e-12;
/// Tolerances for a valid [`DensityState`].
pub const STATE_TRACE_TOL: f64 = 1e-8;
pub const STATE_HERMITICITY_TOL: f64 = 1e-8;
pub const STATE_MIN_EIGENVALUE: f64 = -1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("factor index {index} out of range for a space with {len} factors")]
    FactorOutOfRange { index: usize, len: usize },
    #[error("invalid dimension {0}: oscillator factors need dim >= 2")]
    InvalidDimension(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("invalid density state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Subsystem {
    Qubit,
    Oscillator { dim: usize },
}

impl Subsystem {
    pub fn dim(&self) -> usize {
        match *self {
            Subsystem::Qubit => 2,
            Subsystem::Oscillator { dim } => dim,
        }
    }
}

/// Ordered list of subsystems; immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    factors: Vec<Subsystem>,
    total_dim: usize,
}

impl HilbertSpace {
    pub fn new(factors: Vec<Subsystem>) -> Result<Self> {
        for f in &factors {
            if let Subsystem::Oscillator { dim } = *f {
                if dim < 2 {
                    return Err(AlgebraError::InvalidDimension(dim));
                }
            }
        }
        let total_dim = factors.iter().map(Subsystem::dim).product();
        Ok(Self { factors, total_dim })
    }

    /// `n_qubits` qubits followed by one oscillator per entry of `cutoffs`.
    pub fn qubits_and_oscillators(n_qubits: usize, cutoffs: &[usize]) -> Result<Self> {
        let mut factors = vec![Subsystem::Qubit; n_qubits];
        factors.extend(cutoffs.iter().map(|&dim| Subsystem::Oscillator { dim }));
        Self::new(factors)
    }

    pub fn factors(&self) -> &[Subsystem] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.total_dim
    }

    pub fn factor_dim(&self, index: usize) -> Result<usize> {
        self.factors
            .get(index)
            .map(Subsystem::dim)
            .ok_or(AlgebraError::FactorOutOfRange { index, len: self.factors.len() })
    }

    pub fn qubit_count(&self) -> usize {
        self.factors.iter().filter(|f| matches!(f, Subsystem::Qubit)).count()
    }

    /// Indices of the oscillator factors, in order.
    pub fn oscillator_factors(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, Subsystem::Oscillator { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Product of all dimensions after the leading qubit factors. Only
    /// meaningful when the qubits come first, which every model here
    /// guarantees.
    pub fn leading_qubits_split(&self) -> Option<(usize, usize)> {
        let nq = self.factors.iter().take_while(|f| matches!(f, Subsystem::Qubit)).count();
        if self.factors[nq..].iter().any(|f| matches!(f, Subsystem::Qubit)) {
            return None;
        }
        let qdim = 1usize << nq;
        Some((qdim, self.total_dim / qdim))
    }
}

/// A dense operator tied to the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    data: Matrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, data: Matrix) -> Result<Self> {
        let n = space.dim();
        if data.nrows() != n || data.ncols() != n {
            return Err(AlgebraError::DimensionMismatch { expected: n, found: data.nrows() });
        }
        Ok(Self { space, data })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self { space: space.clone(), data: identity(space.dim()) }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.dim();
        Self { space: space.clone(), data: Matrix::zeros((n, n)) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), data: dagger(&self.data) }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { space: self.space.clone(), data: &self.data * c }
    }

    pub fn plus(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { space: self.space.clone(), data: &self.data + &other.data })
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { space: self.space.clone(), data: self.data.dot(&other.data) })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_same(other)?;
        let data = self.data.dot(&other.data) - other.data.dot(&self.data);
        Ok(Self { space: self.space.clone(), data })
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.data)
    }

    /// Hamiltonian-role check: `‖A − A†‖_max ≤ 1e-12 · ‖A‖_max`.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HAMILTONIAN_HERMITICITY_TOL * max_abs(&self.data)
    }

    /// `⟨ψ|A|ψ⟩` on the flattened basis.
    pub fn expectation(&self, psi: &Vector) -> C64 {
        psi.mapv(|z| z.conj()).dot(&self.data.dot(psi))
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.space.dim(),
                found: other.space.dim(),
            });
        }
        Ok(())
    }
}

/// Hermitian, unit-trace, positive-semidefinite joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    space: HilbertSpace,
    data: Matrix,
}

impl DensityState {
    /// Validates the state against the crate-wide tolerances.
    pub fn new(space: HilbertSpace, data: Matrix) -> Result<Self> {
        let n = space.dim();
        if data.nrows() != n || data.ncols() != n {
            return Err(AlgebraError::DimensionMismatch { expected: n, found: data.nrows() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(AlgebraError::NonFinite);
        }
        let tr = trace(&data);
        if (tr - ONE).norm() > STATE_TRACE_TOL {
            return Err(AlgebraError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = hermiticity_error(&data);
        if herm > STATE_HERMITICITY_TOL {
            return Err(AlgebraError::InvalidState(format!("hermiticity error {herm:e}")));
        }
        let min = hermitian_eigenvalues(&data)[0];
        if min < STATE_MIN_EIGENVALUE {
            return Err(AlgebraError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { space, data })
    }

    /// Skips validation; for integrator output that is checked separately.
    pub(crate) fn new_unchecked(space: HilbertSpace, data: Matrix) -> Self {
        Self { space, data }
    }

    pub fn from_pure(space: HilbertSpace, psi: &Vector) -> Result<Self> {
        let n = space.dim();
        if psi.len() != n {
            return Err(AlgebraError::DimensionMismatch { expected: n, found: psi.len() });
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(AlgebraError::InvalidState("zero or non-finite state vector".into()));
        }
        let psi = psi / C64::from(norm);
        Self::new(space, outer(&psi, &psi))
    }

    /// Tensor product of states on consecutive factors.
    pub fn product(parts: &[DensityState]) -> Result<Self> {
        let mut factors = Vec::new();
        let mut data = identity(1);
        for p in parts {
            factors.extend_from_slice(p.space.factors());
            data = kron(&data, &p.data);
        }
        Self::new(HilbertSpace::new(factors)?, data)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn into_data(self) -> Matrix {
        self.data
    }

    pub fn trace(&self) -> C64 {
        trace(&self.data)
    }

    pub fn purity(&self) -> f64 {
        // tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.data)[0]
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != &self.space {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.space.dim(),
                found: op.space().dim(),
            });
        }
        Ok(trace(&op.data().dot(&self.data)))
    }

    /// Reduced state on the factors listed in `keep` (in increasing order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityState> {
        let (data, space) = partial_trace(&self.data, &self.space, keep)?;
        Ok(Self { space, data })
    }

    pub fn trace_distance(&self, other: &DensityState) -> Result<f64> {
        if self.space != other.space {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.space.dim(),
                found: other.space.dim(),
            });
        }
        Ok(trace_distance(&self.data, &other.data))
    }
}

pub fn identity(n: usize) -> Matrix {
    Matrix::from_diag_elem(n, ONE)
}

pub fn dagger(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}

pub fn outer(a: &Vector, b: &Vector) -> Matrix {
    let n = a.len();
    let m = b.len();
    Matrix::from_shape_fn((n, m), |(i, j)| a[i] * b[j].conj())
}

pub fn hermiticity_error(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Truncated bosonic lowering operator, `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(dim: usize) -> Result<Matrix> {
    if dim < 2 {
        return Err(AlgebraError::InvalidDimension(dim));
    }
    let mut a = Matrix::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::from((n as f64).sqrt());
    }
    Ok(a)
}

pub fn creation(dim: usize) -> Result<Matrix> {
    Ok(dagger(&annihilation(dim)?))
}

pub fn number(dim: usize) -> Result<Matrix> {
    if dim < 2 {
        return Err(AlgebraError::InvalidDimension(dim));
    }
    Ok(Matrix::from_diag(&Array1::from_shape_fn(dim, |n| C64::from(n as f64))))
}

pub fn sigma_x() -> Matrix {
    ndarray::array![[ZERO, ONE], [ONE, ZERO]]
}

pub fn sigma_y() -> Matrix {
    ndarray::array![[ZERO, -I], [I, ZERO]]
}

pub fn sigma_z() -> Matrix {
    ndarray::array![[ONE, ZERO], [ZERO, -ONE]]
}

/// `|1⟩⟨0|`: lowers the `+1` (excited) state to the `−1` (ground) state.
pub fn sigma_minus() -> Matrix {
    ndarray::array![[ZERO, ZERO], [ONE, ZERO]]
}

/// Fock-basis coherent state `e^{−|α|²/2} Σ αⁿ/√n! |n⟩`, renormalized on the
/// truncated space.
pub fn coherent_state(dim: usize, alpha: C64) -> Result<Vector> {
    if dim < 2 {
        return Err(AlgebraError::InvalidDimension(dim));
    }
    let mut v = Vector::zeros(dim);
    let mut c = C64::from((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..dim {
        v[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(v / C64::from(norm))
}

pub fn basis_vector(dim: usize, index: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[index] = ONE;
    v
}

/// `exp(β a† − β* a)` on the truncated space.
pub fn displacement(dim: usize, beta: C64) -> Result<Matrix> {
    let a = annihilation(dim)?;
    let gen = dagger(&a) * beta - a * beta.conj();
    expm(&gen)
}

/// `identity ⊗ … ⊗ local ⊗ … ⊗ identity` in the factor ordering of `space`.
pub fn embed(local: &Matrix, target_factor: usize, space: &HilbertSpace) -> Result<Operator> {
    let d = space.factor_dim(target_factor)?;
    if local.nrows() != d || local.ncols() != d {
        return Err(AlgebraError::DimensionMismatch { expected: d, found: local.nrows() });
    }
    let before: usize = space.factors()[..target_factor].iter().map(Subsystem::dim).product();
    let after: usize = space.factors()[target_factor + 1..].iter().map(Subsystem::dim).product();
    let data = kron(&kron(&identity(before), local), &identity(after));
    Operator::new(space.clone(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space_qqf(cutoff: usize) -> HilbertSpace {
        HilbertSpace::qubits_and_oscillators(2, &[cutoff]).unwrap()
    }

    /// Flattened index from per-factor digits, computed independently of
    /// `kron`.
    fn index_of(space: &HilbertSpace, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(space.factors())
            .fold(0, |acc, (&d, f)| acc * f.dim() + d)
    }

    #[test]
    fn space_invariants() {
        let s = space_qqf(3);
        assert_eq!(s.dim(), 12);
        assert_eq!(s.qubit_count(), 2);
        assert_eq!(s.oscillator_factors(), vec![2]);
        assert_eq!(s.leading_qubits_split(), Some((4, 3)));
        assert!(matches!(
            HilbertSpace::qubits_and_oscillators(1, &[1]),
            Err(AlgebraError::InvalidDimension(1))
        ));
    }

    #[test]
    fn embed_identity_is_identity() {
        let s = space_qqf(3);
        for f in 0..2 {
            assert_eq!(embed(&identity(2), f, &s).unwrap().data(), &identity(12));
        }
        assert_eq!(embed(&identity(3), 2, &s).unwrap().data(), &identity(12));
    }

    #[test]
    fn embed_sigma_z_diagonal_action() {
        let s = space_qqf(3);
        let z1 = embed(&sigma_z(), 1, &s).unwrap();
        let psi = basis_vector(12, index_of(&s, &[0, 1, 2]));
        assert_eq!(z1.expectation(&psi), C64::from(-1.0));
        let z0 = embed(&sigma_z(), 0, &s).unwrap();
        assert_eq!(z0.expectation(&psi), ONE);
    }

    #[test]
    fn embed_number_against_index_oracle() {
        let s = space_qqf(3);
        let n = embed(&number(3).unwrap(), 2, &s).unwrap();
        // projector on Fock |1⟩ tensored with the qubit identity, built by
        // iterating digits directly
        let mut proj = Matrix::zeros((12, 12));
        for q1 in 0..2 {
            for q2 in 0..2 {
                let k = index_of(&s, &[q1, q2, 1]);
                proj[[k, k]] = ONE;
            }
        }
        let value = trace(&n.data().dot(&proj)) / 4.0;
        assert!((value - ONE).norm() < 1e-15);
        // and every diagonal entry matches the Fock digit
        for q1 in 0..2 {
            for q2 in 0..2 {
                for f in 0..3 {
                    let k = index_of(&s, &[q1, q2, f]);
                    assert_eq!(n.data()[[k, k]], C64::from(f as f64));
                }
            }
        }
    }

    #[test]
    fn embed_errors() {
        let s = space_qqf(3);
        assert!(matches!(
            embed(&sigma_z(), 2, &s),
            Err(AlgebraError::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(matches!(embed(&sigma_z(), 3, &s), Err(AlgebraError::FactorOutOfRange { .. })));
    }

    #[test]
    fn ladder_operators() {
        let a = annihilation(2).unwrap();
        assert_eq!(a, ndarray::array![[ZERO, ONE], [ZERO, ZERO]]);
        assert!(annihilation(1).is_err());

        let d = 7;
        let a = annihilation(d).unwrap();
        let ad = creation(d).unwrap();
        let comm = a.dot(&ad) - ad.dot(&a);
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let expect = if i == j { ONE } else { ZERO };
                assert!((comm[[i, j]] - expect).norm() < 1e-14);
            }
        }
        let n = ad.dot(&a);
        for k in 0..d {
            assert!((n[[k, k]] - C64::from(k as f64)).norm() < 1e-14);
        }
    }

    #[test]
    fn sigma_minus_lowers_excited_state() {
        let down = sigma_minus().dot(&basis_vector(2, 0));
        assert_eq!(down, basis_vector(2, 1));
        assert_eq!(sigma_minus().dot(&basis_vector(2, 1)), Vector::zeros(2));
    }

    #[test]
    fn density_state_validation() {
        let s = HilbertSpace::qubits_and_oscillators(1, &[]).unwrap();
        let ok = DensityState::from_pure(s.clone(), &basis_vector(2, 0)).unwrap();
        assert!((ok.purity() - 1.0).abs() < 1e-15);
        let bad = ndarray::array![[ONE, ZERO], [ZERO, ONE]];
        assert!(DensityState::new(s.clone(), bad).is_err());
        let neg = ndarray::array![[C64::from(1.5), ZERO], [ZERO, C64::from(-0.5)]];
        assert!(DensityState::new(s, neg).is_err());
    }

    #[test]
    fn partial_trace_of_product_state() {
        let q = HilbertSpace::qubits_and_oscillators(2, &[]).unwrap();
        let plus = Vector::from(vec![ONE, ONE, ONE, -I]) / C64::from(2.0);
        let rq = DensityState::from_pure(q, &plus).unwrap();
        let osc = HilbertSpace::qubits_and_oscillators(0, &[5]).unwrap();
        let ro = DensityState::from_pure(osc, &coherent_state(5, C64::new(0.3, -0.2)).unwrap())
            .unwrap();
        let joint = DensityState::product(&[rq.clone(), ro]).unwrap();
        let back = joint.partial_trace(&[0, 1]).unwrap();
        let err = (back.data() - rq.data()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12);
    }
}
