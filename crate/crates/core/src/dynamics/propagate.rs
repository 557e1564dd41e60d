//! Propagation of a compiled generator over `[0, T]`.

use std::f64::consts::PI;

use ndarray::linalg::general_mat_mul;

use crate::algebra::{expm, identity, Matrix, C64, I, ONE, ZERO};
use crate::model::Modulation;

use super::generator::{product_cost, Generator};
use super::integrator::{integrate, RkOptions, RkStats};
use super::krylov::{expv, KRYLOV_DIM};
use super::{Propagation, Result, SolverConfig};

/// Largest superoperator dimension for which dense propagators are built.
const MAX_SUPEROPERATOR_DIM: usize = 1024;
/// Tolerance tightening for one-period maps, which are raised to high powers.
const PERIOD_MAP_TOL_FACTOR: f64 = 0.01;
const PERIOD_MAP_TOL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Method {
    /// No dissipation and constant: `e^{−iK_L T} X e^{iK_R T}`.
    ExactUnitary,
    /// Constant with dissipation: exponential of the superoperator.
    SuperoperatorExp,
    /// `Φ(τ) Φ_P^k` with `T = kP + τ`.
    PeriodMap { period: f64, count: u64 },
    /// Constant with dissipation, too large for a dense superoperator.
    Krylov,
    Direct,
}

fn estimated_steps(rate: f64, span: f64, tightening: f64) -> f64 {
    rate * span / (0.1 * tightening) + 20.0
}

/// Common period of all modulations, if they are harmonics of the slowest one.
pub(crate) fn common_period(gen: &Generator) -> Option<f64> {
    let freqs: Vec<f64> = gen.modulations().map(|m| m.frequency().abs()).filter(|w| *w > 0.0).collect();
    let base = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    if !base.is_finite() {
        return None;
    }
    let harmonic = freqs.iter().all(|w| {
        let r = w / base;
        (r - r.round()).abs() <= 1e-9 * r
    });
    harmonic.then(|| 2.0 * PI / base)
}

/// Quarter of the shortest modulation period.
pub(crate) fn auto_max_step(gen: &Generator) -> f64 {
    let w = gen.modulations().map(|m: Modulation| m.frequency().abs()).fold(0.0, f64::max);
    if w > 0.0 {
        0.5 * PI / w
    } else {
        f64::INFINITY
    }
}

pub(crate) fn choose_method(gen: &Generator, t_end: f64, cfg: &SolverConfig) -> Method {
    if cfg.propagation == Propagation::Direct || t_end <= 0.0 {
        return Method::Direct;
    }
    let n = gen.dim;
    let big_n = n * n;
    let rate = gen.rate_scale();
    let direct = estimated_steps(rate, t_end, 1.0) * 6.0 * (gen.eval_cost() + 4.0 * (n * n) as f64);
    if gen.is_constant() {
        let squarings = (rate * t_end).max(1.0).log2() + 12.0;
        if !gen.has_jumps() {
            return if 2.0 * squarings * product_cost(n) < direct { Method::ExactUnitary } else { Method::Direct };
        }
        if big_n <= MAX_SUPEROPERATOR_DIM && squarings * product_cost(big_n) < direct {
            return Method::SuperoperatorExp;
        }
        let m = KRYLOV_DIM as f64;
        let krylov = (rate * t_end * 0.5 + 1.0) * (m + 1.0) * (gen.eval_cost() + 2.0 * m * (n * n) as f64);
        return if krylov < direct { Method::Krylov } else { Method::Direct };
    }
    if let Some(period) = common_period(gen) {
        let count = (t_end / period * (1.0 + 1e-12)).floor();
        if count >= 2.0 && big_n <= MAX_SUPEROPERATOR_DIM {
            let parts = gen.superoperator_part_count() as f64;
            let map = estimated_steps(rate, period, 0.4)
                * 6.0
                * (product_cost(big_n) + parts * (big_n * big_n) as f64)
                + (2.0 * count.log2() + 2.0) * product_cost(big_n);
            if map < direct {
                return Method::PeriodMap { period, count: count as u64 };
            }
        }
    }
    Method::Direct
}

/// Precomputed propagation of one generator over `[0, T]`.
pub(crate) struct Propagator<'a> {
    gen: &'a Generator,
    t_end: f64,
    cfg: SolverConfig,
    method: Method,
    /// `(U_L, U_R)` for the exact unitary case.
    sandwich: Option<(Matrix, Matrix)>,
    /// Superoperator propagator acting on row-major `vec(X)`.
    superop: Option<Matrix>,
    pub stats: RkStats,
}

impl<'a> Propagator<'a> {
    pub fn new(gen: &'a Generator, t_end: f64, cfg: &SolverConfig) -> Result<Self> {
        Self::with_method(gen, t_end, cfg, choose_method(gen, t_end, cfg))
    }

    pub fn with_method(gen: &'a Generator, t_end: f64, cfg: &SolverConfig, method: Method) -> Result<Self> {
        let mut p = Propagator { gen, t_end, cfg: *cfg, method, sandwich: None, superop: None, stats: RkStats::default() };
        match method {
            Method::ExactUnitary => {
                let (kl, kr) = gen.effective_hamiltonians(0.0);
                let ul = expm(&(kl * (-I * t_end)))?;
                let ur = expm(&(kr * (I * t_end)))?;
                p.sandwich = Some((ul, ur));
            }
            Method::SuperoperatorExp => {
                let n2 = gen.dim * gen.dim;
                let mut s = Matrix::zeros((n2, n2));
                for (_, part) in gen.superoperator() {
                    s += &part;
                }
                p.superop = Some(expm(&(s * C64::from(t_end)))?);
            }
            Method::PeriodMap { period, count } => {
                let (phi, stats) = period_map(gen, period, count, t_end, cfg)?;
                p.superop = Some(phi);
                p.stats = stats;
            }
            Method::Krylov | Method::Direct => {}
        }
        Ok(p)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn rk_options(&self) -> RkOptions {
        let mut o = RkOptions::new(self.cfg.rel_tol, self.cfg.abs_tol);
        o.max_step = self.cfg.max_step.unwrap_or_else(|| auto_max_step(self.gen));
        o
    }

    /// `X(T)` for `X(0) = x0`.
    pub fn apply(&mut self, x0: &Matrix) -> Result<Matrix> {
        let n = self.gen.dim;
        if x0.iter().all(|z| *z == ZERO) {
            return Ok(Matrix::zeros((n, n)));
        }
        match self.method {
            Method::ExactUnitary => {
                let (ul, ur) = self.sandwich.as_ref().expect("unitary factors");
                Ok(ul.dot(x0).dot(ur))
            }
            Method::SuperoperatorExp | Method::PeriodMap { .. } => {
                let phi = self.superop.as_ref().expect("superoperator");
                let v: ndarray::Array1<C64> = x0.iter().copied().collect();
                let out = phi.dot(&v);
                Ok(out.into_shape_with_order((n, n)).expect("square reshape"))
            }
            Method::Krylov => {
                let mut stats = RkStats::default();
                let x = expv(self.gen, self.t_end, x0, self.cfg.rel_tol, &mut stats)?;
                self.stats.merge(&stats);
                Ok(x)
            }
            Method::Direct => {
                let mut x = x0.clone();
                let opts = self.rk_options();
                let stats = self.integrate_direct(&mut x, 0.0, self.t_end, &opts, |_, _| Ok(()))?;
                self.stats.merge(&stats);
                Ok(x)
            }
        }
    }

    pub fn integrate_direct<O>(&self, x: &mut Matrix, t0: f64, t1: f64, opts: &RkOptions, on_accept: O) -> Result<RkStats>
    where
        O: FnMut(f64, &Matrix) -> Result<()>,
    {
        let mut scratch = self.gen.scratch();
        let gen = self.gen;
        integrate(|t, y, out| gen.apply(t, y, out, &mut scratch), t0, t1, x, opts, on_accept)
    }
}

impl Generator {
    pub(crate) fn superoperator_part_count(&self) -> usize {
        let mut mods: Vec<Modulation> = Vec::new();
        for m in self.modulations() {
            if !mods.contains(&m) {
                mods.push(m);
            }
        }
        mods.len()
    }
}

/// Propagator `Φ(T)` of `Φ̇ = S(t)Φ` for a `P`-periodic `S`, built from one
/// period by binary powering.
fn period_map(gen: &Generator, period: f64, count: u64, t_end: f64, cfg: &SolverConfig) -> Result<(Matrix, RkStats)> {
    let parts = gen.superoperator();
    let n2 = gen.dim * gen.dim;
    let mut opts = RkOptions::new(
        (cfg.rel_tol * PERIOD_MAP_TOL_FACTOR).max(PERIOD_MAP_TOL_FLOOR),
        (cfg.abs_tol * PERIOD_MAP_TOL_FACTOR).max(PERIOD_MAP_TOL_FLOOR),
    );
    opts.max_step = cfg.max_step.unwrap_or(period / 4.0).min(period / 4.0);
    let remainder = (t_end - count as f64 * period).max(0.0);
    let mut s = Matrix::zeros((n2, n2));
    let mut rhs = |t: f64, phi: &Matrix, out: &mut Matrix| {
        s.fill(ZERO);
        for (m, part) in &parts {
            s.scaled_add(m.value(t), part);
        }
        general_mat_mul(ONE, &s, phi, ZERO, out);
    };
    let mut phi = identity(n2);
    let mut stats = RkStats::default();
    let partial = if remainder > 1e-15 * period {
        stats.merge(&integrate(&mut rhs, 0.0, remainder, &mut phi, &opts, |_, _| Ok(()))?);
        opts.initial_step = Some(stats.next_step);
        Some(phi.clone())
    } else {
        None
    };
    stats.merge(&integrate(&mut rhs, remainder.min(period), period, &mut phi, &opts, |_, _| Ok(()))?);
    let mut power = matrix_power(&phi, count);
    if let Some(partial) = partial {
        power = partial.dot(&power);
    }
    Ok((power, stats))
}

fn matrix_power(m: &Matrix, mut k: u64) -> Matrix {
    let mut result: Option<Matrix> = None;
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.dot(&base),
            });
        }
        k >>= 1;
        if k > 0 {
            base = base.dot(&base);
        }
    }
    result.unwrap_or_else(|| identity(m.nrows()))
}
