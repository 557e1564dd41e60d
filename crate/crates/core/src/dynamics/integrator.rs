//! Dormand–Prince 5(4) with FSAL and elementary step-size control, on matrix
//! states.

use crate::algebra::{Matrix, ZERO};

use super::{DynamicsError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Embedded fourth-order weights.
const B_HAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Starting step; estimated from the initial derivative when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl RkOptions {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, max_step: f64::INFINITY, initial_step: None, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Step size proposed for continuing past the end point.
    pub next_step: f64,
}

impl RkStats {
    pub fn merge(&mut self, other: &RkStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
        self.next_step = other.next_step;
    }
}

fn rms_ratio(num: &Matrix, y0: &Matrix, y1: Option<&Matrix>, opts: &RkOptions) -> f64 {
    let n = num.len() as f64;
    let mut acc = 0.0;
    match y1 {
        Some(y1) => {
            for ((e, a), b) in num.iter().zip(y0.iter()).zip(y1.iter()) {
                let sc = opts.abs_tol + opts.rel_tol * a.norm().max(b.norm());
                acc += e.norm_sqr() / (sc * sc);
            }
        }
        None => {
            for (e, a) in num.iter().zip(y0.iter()) {
                let sc = opts.abs_tol + opts.rel_tol * a.norm();
                acc += e.norm_sqr() / (sc * sc);
            }
        }
    }
    (acc / n).sqrt()
}

/// Integrates `ẏ = f(t, y)` from `t0` to `t1` in place. `on_accept` sees every
/// accepted step.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    t1: f64,
    y: &mut Matrix,
    opts: &RkOptions,
    mut on_accept: O,
) -> Result<RkStats>
where
    F: FnMut(f64, &Matrix, &mut Matrix),
    O: FnMut(f64, &Matrix) -> Result<()>,
{
    let mut stats = RkStats::default();
    let span = t1 - t0;
    if span <= 0.0 {
        stats.next_step = opts.initial_step.unwrap_or(0.0);
        return Ok(stats);
    }
    let shape = y.dim();
    let mut k: Vec<Matrix> = (0..7).map(|_| Matrix::zeros(shape)).collect();
    let mut stage = Matrix::zeros(shape);
    let mut y_new = Matrix::zeros(shape);
    let mut err = Matrix::zeros(shape);

    f(t0, y, &mut k[0]);
    stats.evaluations += 1;

    let mut h = match opts.initial_step {
        Some(h) if h > 0.0 => h,
        _ => {
            // Hairer–Nørsett–Wanner starting step
            let d0 = rms_ratio(y, y, None, opts);
            let d1 = rms_ratio(&k[0], y, None, opts);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
            let h0 = h0.min(span).min(opts.max_step);
            stage.assign(y);
            stage.scaled_add(h0.into(), &k[0]);
            f(t0 + h0, &stage, &mut k[1]);
            stats.evaluations += 1;
            let mut diff = k[1].clone();
            diff -= &k[0];
            let d2 = rms_ratio(&diff, y, None, opts) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6 * span)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    };
    h = h.min(opts.max_step).min(span);

    let mut t = t0;
    let mut last_rejected = false;
    loop {
        let remaining = t1 - t;
        let final_step = h >= remaining * (1.0 - 1e-12);
        if final_step {
            h = remaining;
        }
        for s in 1..7 {
            stage.assign(y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    stage.scaled_add((h * a).into(), kj);
                }
            }
            f(t + C[s] * h, &stage, &mut k[s]);
            stats.evaluations += 1;
            if s == 6 {
                // stage 7 input equals the fifth-order solution
                y_new.assign(&stage);
            }
        }
        err.fill(ZERO);
        for (j, kj) in k.iter().enumerate() {
            let w = B[j] - B_HAT[j];
            if w != 0.0 {
                err.scaled_add((h * w).into(), kj);
            }
        }
        let e = rms_ratio(&err, y, Some(&y_new), opts);
        if !e.is_finite() {
            h *= MIN_FACTOR;
            stats.rejected += 1;
            last_rejected = true;
            if h <= 1e-14 * t.abs().max(span) {
                return Err(DynamicsError::NonFinite { t });
            }
        } else if e <= 1.0 {
            t = if final_step { t1 } else { t + h };
            std::mem::swap(y, &mut y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            on_accept(t, y)?;
            let mut factor = if e == 0.0 { MAX_FACTOR } else { SAFETY * e.powf(-0.2) };
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            let proposed = (h * factor).min(opts.max_step);
            if final_step {
                stats.next_step = proposed;
                return Ok(stats);
            }
            h = proposed;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h *= (SAFETY * e.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
        if h <= 1e-14 * t.abs().max(span) {
            return Err(DynamicsError::StepSizeUnderflow { t });
        }
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(DynamicsError::MaxStepsExceeded(opts.max_steps));
        }
    }
}
