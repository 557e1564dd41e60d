//! Matrix exponential by scaling and squaring with a truncated Taylor series.

use super::linalg::one_norm;
use super::{identity, AlgebraError, Matrix, Operator, Result, C64};

/// Scaled argument norm bound; the Taylor tail past 20 terms is below 1e-25.
const THETA: f64 = 0.5;
const MAX_TERMS: usize = 40;

pub fn expm(a: &Matrix) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return Err(AlgebraError::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(AlgebraError::NonFinite);
    }
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > THETA { (norm / THETA).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::from(0.5f64.powi(squarings));

    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=MAX_TERMS {
        term = term.dot(&scaled) / C64::from(k as f64);
        sum += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    Ok(sum)
}

/// `e^A B e^{−A}` as raw matrices.
pub fn expm_conjugate(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let e = expm(a)?;
    let einv = expm(&a.mapv(|z| -z))?;
    Ok(e.dot(b).dot(&einv))
}

/// `e^A B e^{−A}` when `b` is given, otherwise `e^A`.
pub fn expm_apply(a: &Operator, b: Option<&Operator>) -> Result<Operator> {
    let data = match b {
        Some(b) => {
            if a.space() != b.space() {
                return Err(AlgebraError::DimensionMismatch {
                    expected: a.space().dim(),
                    found: b.space().dim(),
                });
            }
            expm_conjugate(a.data(), b.data())?
        }
        None => expm(a.data())?,
    };
    Operator::new(a.space().clone(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{
        annihilation, coherent_state, creation, dagger, displacement, max_abs, sigma_z, Vector,
        I, ONE, ZERO,
    };
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    /// exp(iH) through an eigendecomposition; independent of the series code.
    fn expm_i_hermitian(h: &Matrix) -> Matrix {
        let n = h.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| h[[i, j]]);
        let eig = m.symmetric_eigen();
        let mut out = Matrix::zeros((n, n));
        for k in 0..n {
            let phase = (I * eig.eigenvalues[k]).exp();
            for i in 0..n {
                for j in 0..n {
                    out[[i, j]] += eig.eigenvectors[(i, k)] * phase * eig.eigenvectors[(j, k)].conj();
                }
            }
        }
        out
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        max_abs(&(a - b)) / max_abs(b).max(1e-300)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(expm(&Matrix::zeros((4, 4))).unwrap(), identity(4));
    }

    #[test]
    fn exp_of_half_pi_sigma_z() {
        let e = expm(&(sigma_z() * (I * std::f64::consts::FRAC_PI_2))).unwrap();
        let expect = ndarray::array![[I, ZERO], [ZERO, -I]];
        assert!(max_abs(&(&e - &expect)) < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Matrix::zeros((2, 2));
        m[[0, 1]] = C64::new(f64::NAN, 0.0);
        assert_eq!(expm(&m), Err(AlgebraError::NonFinite));
    }

    #[test]
    fn displaced_vacuum_matches_coherent_expansion() {
        let alpha = C64::new(0.1, 0.0);
        let d = 20;
        let psi = displacement(d, alpha).unwrap().dot(&crate::algebra::basis_vector(d, 0));
        // ⟨a⟩ = α
        let a = annihilation(d).unwrap();
        let mean: C64 = psi.mapv(|z| z.conj()).dot(&a.dot(&psi));
        assert!((mean - alpha).norm() < 1e-8);
        // amplitudes αⁿ e^{−|α|²/2}/√n!
        let oracle = coherent_state(d, alpha).unwrap();
        let err = (&psi - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn large_norm_unitary_against_eigendecomposition() {
        let d = 12;
        let a = annihilation(d).unwrap();
        let h = creation(d).unwrap().dot(&a) * C64::from(37.0) + (&a + &dagger(&a)) * C64::from(4.2);
        let exact = expm_i_hermitian(&h);
        let ours = expm(&(&h * I)).unwrap();
        assert!(rel_err(&ours, &exact) < 1e-10);
    }

    #[test]
    fn conjugation_of_lowering_operator() {
        // D(β)† a D(β) = a + β  ⇔  e^{−G} a e^{G} with G = βa† − β*a
        let d = 30;
        let beta = C64::new(0.05, -0.02);
        let a = annihilation(d).unwrap();
        let gen = dagger(&a) * beta - &a * beta.conj();
        let shifted = expm_conjugate(&gen.mapv(|z| -z), &a).unwrap();
        // compare away from the truncation edge
        for i in 0..10 {
            for j in 0..10 {
                let expect = a[[i, j]] + if i == j { beta } else { ZERO };
                assert!((shifted[[i, j]] - expect).norm() < 1e-10);
            }
        }
    }

    fn small_hermitian(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
            let m = Matrix::from_shape_fn((n, n), |(i, j)| {
                C64::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1])
            });
            (&m + &dagger(&m)) * C64::from(0.5)
        })
    }

    proptest! {
        #[test]
        fn matches_eigendecomposition(h in small_hermitian(5), scale in 0.01f64..30.0) {
            let h = h * C64::from(scale);
            let ours = expm(&(&h * I)).unwrap();
            prop_assert!(rel_err(&ours, &expm_i_hermitian(&h)) < 1e-10);
        }

        #[test]
        fn inverse_property(h in small_hermitian(4)) {
            let e = expm(&h).unwrap();
            let einv = expm(&h.mapv(|z| -z)).unwrap();
            let prod = e.dot(&einv);
            prop_assert!(max_abs(&(&prod - &identity(4))) < 1e-12);
        }
    }

    #[test]
    fn deterministic_output() {
        let v = Vector::from(vec![ONE, I, -ONE]);
        let m = crate::algebra::outer(&v, &v) * C64::new(0.3, 1.7);
        assert_eq!(expm(&m).unwrap(), expm(&m).unwrap());
    }
}
