//! Two-qubit channels as Pauli transfer matrices.
//!
//! Basis: `B_k = P_k/2` with `P_k = σ_{k/4} ⊗ σ_{k%4}` and single-qubit order
//! `I, X, Y, Z`, so `tr(B_k B_l) = δ_kl`. The PTM of a map `ε` is
//! `R_kl = tr(B_k ε(B_l))`; composition is matrix multiplication and a
//! trace-preserving map has first row `(1, 0, …, 0)`.

mod tomography;

pub use tomography::{channel_tomography, evaluate_gate, GateEvaluation, Tomography};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{dagger, hermitian_eigenvalues, kron, sigma_x, sigma_y, sigma_z, trace, Matrix, C64, ZERO};
use crate::dynamics::{DynamicsError, SolverConfig};
use crate::model::GateSchedule;

/// Largest deviation of the PTM's first row from `(1, 0, …, 0)`.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-6;
/// Most negative Choi eigenvalue accepted.
pub const CHOI_EIGENVALUE_TOL: f64 = -1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("reconstructed channel is not physical: {0}")]
    NonPhysical(String),
    #[error("expected a {expected}x{expected} matrix, found {found}x{found}")]
    Shape { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, FidelityError>;

pub type Ptm = Array2<f64>;

/// The sixteen normalized Pauli operators `B_k = P_k/2`.
pub fn pauli_basis() -> Vec<Matrix> {
    let single = [Matrix::from_diag_elem(2, C64::from(1.0)), sigma_x(), sigma_y(), sigma_z()];
    let mut out = Vec::with_capacity(16);
    for a in &single {
        for b in &single {
            out.push(kron(a, b) * C64::from(0.5));
        }
    }
    out
}

/// Labels `II, IX, …, ZZ` in basis order.
pub fn pauli_labels() -> Vec<String> {
    let names = ['I', 'X', 'Y', 'Z'];
    (0..16).map(|k| format!("{}{}", names[k / 4], names[k % 4])).collect()
}

/// PTM of a linear map given on the 4×4 operators.
pub fn ptm_of_map<F: FnMut(&Matrix) -> Matrix>(mut f: F) -> Ptm {
    let basis = pauli_basis();
    let images: Vec<Matrix> = basis.iter().map(&mut f).collect();
    Ptm::from_shape_fn((16, 16), |(k, l)| trace(&basis[k].dot(&images[l])).re)
}

/// PTM of `ρ ↦ UρU†`.
pub fn ptm_of_unitary(u: &Matrix) -> Ptm {
    let ud = dagger(u);
    ptm_of_map(|x| u.dot(x).dot(&ud))
}

/// PTM from the images `E_ij = ε(|i⟩⟨j|)` of the matrix units.
pub fn ptm_from_matrix_units(images: &[[Matrix; 4]; 4]) -> Ptm {
    ptm_of_map(|x| {
        let mut out = Matrix::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                if x[[i, j]] != ZERO {
                    out.scaled_add(x[[i, j]], &images[i][j]);
                }
            }
        }
        out
    })
}

/// `ε(X) = Σ_kl R_kl tr(B_l X) B_k`.
pub fn apply_ptm(r: &Ptm, x: &Matrix) -> Matrix {
    let basis = pauli_basis();
    let coeffs: Vec<C64> = basis.iter().map(|b| trace(&b.dot(x))).collect();
    let mut out = Matrix::zeros((4, 4));
    for k in 0..16 {
        let c: C64 = (0..16).map(|l| coeffs[l] * r[[k, l]]).sum();
        if c != ZERO {
            out.scaled_add(c, &basis[k]);
        }
    }
    out
}

/// Choi operator `Σ_ij |i⟩⟨j| ⊗ ε(|i⟩⟨j|)` (trace 4).
pub fn choi(r: &Ptm) -> Matrix {
    let mut j = Matrix::zeros((16, 16));
    for a in 0..4 {
        for b in 0..4 {
            let mut unit = Matrix::zeros((4, 4));
            unit[[a, b]] = C64::from(1.0);
            let img = apply_ptm(r, &unit);
            j.slice_mut(ndarray::s![a * 4..a * 4 + 4, b * 4..b * 4 + 4]).assign(&img);
        }
    }
    j
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetadata {
    pub schedule: Option<GateSchedule>,
    pub solver: Option<SolverConfig>,
    pub cutoff: Option<usize>,
    pub frame: String,
    pub model: String,
    /// Number of times Z corrections have been composed onto the channel.
    pub corrections_applied: u32,
}

impl Default for ChannelMetadata {
    fn default() -> Self {
        Self {
            schedule: None,
            solver: None,
            cutoff: None,
            frame: "none".into(),
            model: "none".into(),
            corrections_applied: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ChannelDocument", try_from = "ChannelDocument")]
pub struct GateChannel {
    pub ptm: Ptm,
    pub metadata: ChannelMetadata,
}

/// JSON layout: `ptm` as 16 rows of 16 numbers.
#[derive(Serialize, Deserialize)]
struct ChannelDocument {
    basis: Vec<String>,
    ptm: Vec<Vec<f64>>,
    metadata: ChannelMetadata,
}

impl From<GateChannel> for ChannelDocument {
    fn from(ch: GateChannel) -> Self {
        ChannelDocument {
            basis: pauli_labels(),
            ptm: ch.ptm.rows().into_iter().map(|r| r.to_vec()).collect(),
            metadata: ch.metadata,
        }
    }
}

impl TryFrom<ChannelDocument> for GateChannel {
    type Error = String;

    fn try_from(doc: ChannelDocument) -> std::result::Result<Self, String> {
        if doc.ptm.len() != 16 || doc.ptm.iter().any(|r| r.len() != 16) {
            return Err("ptm must be 16x16".into());
        }
        let flat: Vec<f64> = doc.ptm.into_iter().flatten().collect();
        let ptm = Ptm::from_shape_vec((16, 16), flat).map_err(|e| e.to_string())?;
        Ok(GateChannel { ptm, metadata: doc.metadata })
    }
}

impl GateChannel {
    pub fn new(ptm: Ptm, metadata: ChannelMetadata) -> Result<Self> {
        if ptm.dim() != (16, 16) {
            return Err(FidelityError::Shape { expected: 16, found: ptm.nrows() });
        }
        Ok(Self { ptm, metadata })
    }

    pub fn identity() -> Self {
        Self { ptm: Ptm::eye(16), metadata: ChannelMetadata::default() }
    }

    pub fn from_unitary(u: &Matrix) -> Result<Self> {
        if u.dim() != (4, 4) {
            return Err(FidelityError::Shape { expected: 4, found: u.nrows() });
        }
        Ok(Self { ptm: ptm_of_unitary(u), metadata: ChannelMetadata::default() })
    }

    /// `self ∘ first`: apply `first`, then `self`. Keeps `self`'s metadata.
    pub fn compose(&self, first: &GateChannel) -> GateChannel {
        GateChannel { ptm: self.ptm.dot(&first.ptm), metadata: self.metadata.clone() }
    }

    pub fn apply(&self, rho: &Matrix) -> Matrix {
        apply_ptm(&self.ptm, rho)
    }

    pub fn trace_preservation_error(&self) -> f64 {
        self.ptm
            .row(0)
            .iter()
            .enumerate()
            .map(|(l, v)| (v - if l == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        // normalized to unit trace
        hermitian_eigenvalues(&choi(&self.ptm))[0] / 4.0
    }

    /// Checks trace preservation and complete positivity.
    pub fn validate(&self) -> Result<()> {
        let tp = self.trace_preservation_error();
        if tp > TRACE_PRESERVATION_TOL {
            return Err(FidelityError::NonPhysical(format!("first PTM row deviates by {tp:e}")));
        }
        let min = self.min_choi_eigenvalue();
        if min < CHOI_EIGENVALUE_TOL {
            return Err(FidelityError::NonPhysical(format!("Choi eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Composes the schedule's Z corrections after the channel.
pub fn apply_z_corrections(ch: &GateChannel, schedule: &GateSchedule) -> GateChannel {
    let corr = ptm_of_unitary(&schedule.z_corrections.unitary());
    let mut metadata = ch.metadata.clone();
    metadata.corrections_applied += 1;
    GateChannel { ptm: corr.dot(&ch.ptm), metadata }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f_avg: f64,
    pub f_pro: f64,
}

impl FidelityReport {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.f_avg
    }
}

/// `F_pro = tr(R_Uᵀ R)/16`, `F_avg = (4F_pro + 1)/5`.
pub fn average_gate_fidelity(ch: &GateChannel, target: &Matrix) -> FidelityReport {
    let ru = ptm_of_unitary(target);
    let f_pro = (&ru * &ch.ptm).sum() / 16.0;
    FidelityReport { f_avg: (4.0 * f_pro + 1.0) / 5.0, f_pro }
}
