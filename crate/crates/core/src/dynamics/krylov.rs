//! Arnoldi approximation of `e^{tL} x` for a constant generator.

use crate::algebra::{expm, Matrix, C64, ZERO};

use super::generator::Generator;
use super::integrator::RkStats;
use super::{DynamicsError, Result};

const BREAKDOWN: f64 = 1e-12;
const SAFETY: f64 = 0.9;
const SLACK: f64 = 1.2;
const MAX_REJECTS: usize = 20;
pub(crate) const KRYLOV_DIM: usize = 30;

fn dot(a: &Matrix, b: &Matrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &Matrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn two_digits(x: f64) -> f64 {
    let s = 10f64.powf(x.log10().floor() - 1.0);
    (x / s).ceil() * s
}

/// Adaptive Krylov stepping with local error `≤ tol·‖x‖` per unit of `t/T`.
pub(crate) fn expv(gen: &Generator, t_end: f64, x0: &Matrix, tol: f64, stats: &mut RkStats) -> Result<Matrix> {
    let m = KRYLOV_DIM;
    let anorm = (gen.rate_scale() * t_end).max(1e-300);
    let mut scratch = gen.scratch();
    let mut apply = |x: &Matrix, out: &mut Matrix| {
        gen.apply(0.0, x, out, &mut scratch);
        out.mapv_inplace(|z| z * t_end);
    };
    let mut w = x0.clone();
    let beta0 = norm(&w);
    let tol = tol * beta0;
    let xm = 1.0 / m as f64;
    let fact = ((m as f64 + 1.0) / std::f64::consts::E).powf(m as f64 + 1.0)
        * (2.0 * std::f64::consts::PI * (m as f64 + 1.0)).sqrt();
    let mut t_new = two_digits((fact * tol / (4.0 * beta0 * anorm)).powf(xm) / anorm);
    let mut t_now = 0.0f64;
    let mut p = Matrix::zeros(x0.dim());
    while t_now < 1.0 {
        let beta = norm(&w);
        if beta == 0.0 {
            break;
        }
        let mut t_step = (1.0 - t_now).min(t_new);
        let mut basis = vec![w.mapv(|z| z / beta)];
        let mut h = Matrix::zeros((m + 2, m + 2));
        let (mut mb, mut k1) = (m, 2);
        for j in 0..m {
            apply(&basis[j], &mut p);
            stats.evaluations += 1;
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &p);
                h[[i, j]] = c;
                p.scaled_add(-c, v);
            }
            let s = norm(&p);
            if s < BREAKDOWN * beta.max(1.0) {
                k1 = 0;
                mb = j + 1;
                t_step = 1.0 - t_now;
                break;
            }
            h[[j + 1, j]] = C64::from(s);
            basis.push(p.mapv(|z| z / s));
        }
        let mut avnorm = 0.0;
        if k1 != 0 {
            h[[m + 1, m]] = C64::from(1.0);
            apply(&basis[m], &mut p);
            stats.evaluations += 1;
            avnorm = norm(&p);
        }
        let mut rejects = 0;
        let (f, err_loc) = loop {
            let mx = mb + k1;
            let sub = h.slice(ndarray::s![..mx, ..mx]).mapv(|z| z * t_step);
            let f = expm(&sub)?;
            if k1 == 0 {
                break (f, BREAKDOWN);
            }
            let phi1 = (beta * f[[m, 0]]).norm();
            let phi2 = (beta * f[[m + 1, 0]]).norm() * avnorm;
            let err = if phi1 > 10.0 * phi2 {
                phi2
            } else if phi1 > phi2 {
                phi1 * phi2 / (phi1 - phi2)
            } else {
                phi1
            };
            if err <= SLACK * t_step * tol {
                break (f, err);
            }
            rejects += 1;
            stats.rejected += 1;
            if rejects > MAX_REJECTS {
                return Err(DynamicsError::StepSizeUnderflow { t: t_now * t_end });
            }
            t_step = two_digits(SAFETY * t_step * (t_step * tol / err).powf(xm));
        };
        let mx = mb + k1.saturating_sub(1);
        w.fill(ZERO);
        for (i, v) in basis.iter().take(mx).enumerate() {
            w.scaled_add(beta * f[[i, 0]], v);
        }
        t_now += t_step;
        stats.accepted += 1;
        t_new = two_digits(SAFETY * t_step * (t_step * tol / err_loc.max(1e-300)).powf(xm));
    }
    Ok(w)
}
