use nalgebra::DMatrix;

use super::{AlgebraError, HilbertSpace, Matrix, Result, Subsystem, C64, ZERO};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Matrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = s * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn trace(m: &Matrix) -> C64 {
    m.diag().sum()
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(m: &Matrix) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let h = DMatrix::from_fn(n, n, |i, j| (m[[i, j]] + m[[j, i]].conj()) * 0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `½‖a − b‖₁` for Hermitian arguments.
pub fn trace_distance(a: &Matrix, b: &Matrix) -> f64 {
    let diff = a - b;
    0.5 * hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>()
}

/// Traces out every factor not listed in `keep`. `keep` must be strictly
/// increasing.
pub fn partial_trace(
    m: &Matrix,
    space: &HilbertSpace,
    keep: &[usize],
) -> Result<(Matrix, HilbertSpace)> {
    let nf = space.factors().len();
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(AlgebraError::DimensionMismatch { expected: space.dim(), found: m.nrows() });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= nf) {
        return Err(AlgebraError::FactorOutOfRange { index: bad, len: nf });
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AlgebraError::InvalidState("partial-trace factors must be increasing".into()));
    }
    let dims: Vec<usize> = space.factors().iter().map(Subsystem::dim).collect();
    let kept: Vec<Subsystem> = keep.iter().map(|&k| space.factors()[k]).collect();
    let traced: Vec<usize> = (0..nf).filter(|f| !keep.contains(f)).collect();
    let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let trace_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // flattened index for a (kept digits, traced digits) pair
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = vec![0usize; nf];
        let mut r = kept_idx;
        for &k in keep.iter().rev() {
            digits[k] = r % dims[k];
            r /= dims[k];
        }
        let mut r = traced_idx;
        for &k in traced.iter().rev() {
            digits[k] = r % dims[k];
            r /= dims[k];
        }
        digits.iter().zip(&dims).fold(0, |acc, (&d, &n)| acc * n + d)
    };

    let map: Vec<Vec<usize>> = (0..keep_dim)
        .map(|a| (0..trace_dim).map(|t| compose(a, t)).collect())
        .collect();
    let mut out = Matrix::zeros((keep_dim, keep_dim));
    for a in 0..keep_dim {
        for b in 0..keep_dim {
            let mut s = ZERO;
            for t in 0..trace_dim {
                s += m[[map[a][t], map[b][t]]];
            }
            out[[a, b]] = s;
        }
    }
    Ok((out, HilbertSpace::new(kept)?))
}
