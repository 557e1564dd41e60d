use serde::{Deserialize, Serialize};

use crate::algebra::{C64, I, ZERO};

use super::{ModelError, Result, SystemParams};

/// Which effective coupling a model level is paired with. The full value keeps
/// the counter-rotating `1/(ω_r+ω_m)` contribution; the RWA value drops it,
/// matching a rotating-frame simulation with `rwa = true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingApprox {
    #[default]
    Rwa,
    Full,
}

fn checked_delta(p: &SystemParams) -> Result<f64> {
    let delta = p.delta();
    if delta.abs() <= 1e-12 * p.omega_r.abs().max(p.omega_m.abs()) {
        return Err(ModelError::ResonantModulation);
    }
    Ok(delta)
}

/// `J̄ = −(g₁g₂/2)[1/δ + 1/(ω_r+ω_m)]`.
pub fn effective_coupling(p: &SystemParams) -> Result<f64> {
    let delta = checked_delta(p)?;
    Ok(-0.5 * p.g1 * p.g2 * (1.0 / delta + 1.0 / (p.omega_r + p.omega_m)))
}

/// `J̄ = −g₁g₂/(2δ)`.
pub fn effective_coupling_rwa(p: &SystemParams) -> Result<f64> {
    let delta = checked_delta(p)?;
    Ok(-0.5 * p.g1 * p.g2 / delta)
}

pub fn effective_coupling_with(p: &SystemParams, approx: CouplingApprox) -> Result<f64> {
    match approx {
        CouplingApprox::Rwa => effective_coupling_rwa(p),
        CouplingApprox::Full => effective_coupling(p),
    }
}

/// Two-oscillator coupling `½g₁g₂g_ab/(δ̄² − g_ab²(1+ζ²))`, with
/// `g_ab²(1+ζ²) = g_ab² + ((ω_b−ω_a)/2)²` so that `g_ab = 0` is regular.
pub fn effective_coupling_remote(p: &SystemParams) -> Result<f64> {
    let two = p.require_two_oscillator()?;
    if two.g_ab == 0.0 {
        return Ok(0.0);
    }
    let delta_bar = 0.5 * (two.omega_a + two.omega_b) - p.omega_m;
    let half_split = 0.5 * (two.omega_b - two.omega_a);
    let denom = delta_bar * delta_bar - two.g_ab * two.g_ab - half_split * half_split;
    if denom.abs() < 1e-6 * delta_bar * delta_bar || delta_bar == 0.0 {
        return Err(ModelError::HybridizedModeResonance);
    }
    Ok(0.5 * p.g1 * p.g2 * two.g_ab / denom)
}

/// Normal-mode detunings `δ̄ ± g_ab√(1+ζ²)` in the frame rotating at ω_m.
pub fn normal_mode_detunings(p: &SystemParams) -> Result<(f64, f64)> {
    let two = p.require_two_oscillator()?;
    let delta_bar = 0.5 * (two.omega_a + two.omega_b) - p.omega_m;
    let half_split = 0.5 * (two.omega_b - two.omega_a);
    let omega = (two.g_ab * two.g_ab + half_split * half_split).sqrt();
    Ok((delta_bar + omega, delta_bar - omega))
}

/// Laboratory-frame displacement αᵢ(t) from the exact solution of
/// `α̇ = −iω_rα − igᵢcos(ω_m t)`, `α(0) = 0`.
pub fn polaron_alpha(p: &SystemParams, i: usize, t: f64) -> Result<C64> {
    polaron_alpha_with(p, i, t, CouplingApprox::Full)
}

/// As [`polaron_alpha`]; with `Rwa` the counter-rotating part of the drive is
/// dropped, giving `−(g/2δ)(e^{−iω_m t} − e^{−iω_r t})`.
pub fn polaron_alpha_with(p: &SystemParams, i: usize, t: f64, approx: CouplingApprox) -> Result<C64> {
    let delta = checked_delta(p)?;
    if !t.is_finite() {
        return Err(ModelError::NonFiniteTime(t));
    }
    let g = match i {
        0 => p.g1,
        1 => p.g2,
        _ => {
            return Err(ModelError::InvalidParameter { name: "qubit index", reason: format!("{i} not in 0..2") })
        }
    };
    let em = C64::from_polar(1.0, -p.omega_m * t);
    let er = C64::from_polar(1.0, -p.omega_r * t);
    let mut alpha = (em - er) / delta;
    if approx == CouplingApprox::Full {
        alpha += (em.conj() - er) / (p.omega_r + p.omega_m);
    }
    Ok(alpha * (-0.5 * g))
}

/// RWA displacements `(x_a, x_b)` of the two oscillators in the frame
/// rotating at ω_m for qubit eigenvalues `s = (s₁, s₂)`:
/// `x(t) = (e^{−iMt} − 1) M⁻¹ f` with `M = [[δ_a, g_ab], [g_ab, δ_b]]` and
/// `f = (g₁s₁/2, g₂s₂/2)`.
pub fn remote_displacement(p: &SystemParams, s: (f64, f64), t: f64) -> Result<[C64; 2]> {
    let two = p.require_two_oscillator()?;
    let da = two.omega_a - p.omega_m;
    let db = two.omega_b - p.omega_m;
    let g = two.g_ab;
    let det = da * db - g * g;
    if det.abs() < 1e-12 * (da * da + db * db) {
        return Err(ModelError::HybridizedModeResonance);
    }
    let f = [0.5 * p.g1 * s.0, 0.5 * p.g2 * s.1];
    // M⁻¹ f
    let y = [(db * f[0] - g * f[1]) / det, (-g * f[0] + da * f[1]) / det];
    // e^{−iMt} = e^{−i m t}[cos Ωt − i sin(Ωt)/Ω · K], K = M − m
    let m = 0.5 * (da + db);
    let h = 0.5 * (db - da);
    let omega = (h * h + g * g).sqrt();
    let sinc = if omega * t.abs() < 1e-12 { t } else { (omega * t).sin() / omega };
    let c = (omega * t).cos();
    let k = [[-h, g], [g, h]];
    let pre = C64::from_polar(1.0, -m * t);
    let mut out = [ZERO; 2];
    for r in 0..2 {
        let mut acc = ZERO;
        for col in 0..2 {
            let id = if r == col { 1.0 } else { 0.0 };
            let u = pre * (C64::from(c * id) - I * sinc * k[r][col]);
            acc += (u - C64::from(id)) * y[col];
        }
        out[r] = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units::{mhz, ns, to_mhz};
    use proptest::prelude::*;

    fn benchmark() -> SystemParams {
        SystemParams::with_detuning(mhz(6000.0), mhz(537.0), mhz(60.0), mhz(0.05))
    }

    /// Classical RK4 on `α̇ = −iω_rα − ig cos(ω_m t)`.
    fn integrate_alpha(p: &SystemParams, g: f64, t_end: f64, steps: usize) -> C64 {
        let f = |t: f64, a: C64| -I * p.omega_r * a - I * g * (p.omega_m * t).cos();
        let h = t_end / steps as f64;
        let mut a = ZERO;
        for k in 0..steps {
            let t = k as f64 * h;
            let k1 = f(t, a);
            let k2 = f(t + h / 2.0, a + k1 * (h / 2.0));
            let k3 = f(t + h / 2.0, a + k2 * (h / 2.0));
            let k4 = f(t + h, a + k3 * h);
            a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        a
    }

    #[test]
    fn full_coupling_benchmark_value() {
        let j = effective_coupling(&benchmark()).unwrap();
        assert!((to_mhz(j) + 3.51).abs() < 0.01, "{}", to_mhz(j));
        let j_rwa = effective_coupling_rwa(&benchmark()).unwrap();
        assert!((to_mhz(j_rwa) + 3.352).abs() < 1e-3);
    }

    #[test]
    fn resonant_modulation_rejected() {
        let p = SystemParams::with_detuning(mhz(6000.0), 0.0, mhz(60.0), 0.0);
        assert_eq!(effective_coupling(&p), Err(ModelError::ResonantModulation));
        assert_eq!(polaron_alpha(&p, 0, 1e-9), Err(ModelError::ResonantModulation));
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let mut p = benchmark();
        p.g1 = 0.0;
        assert_eq!(effective_coupling(&p).unwrap(), 0.0);
    }

    #[test]
    fn remote_coupling_example() {
        let p = SystemParams::remote(mhz(6000.0), mhz(6000.0), mhz(100.0), mhz(600.0), mhz(60.0));
        let j = effective_coupling_remote(&p).unwrap();
        // ½·60·60·100/(600² − 100²) MHz
        assert!((to_mhz(j) - 180000.0 / 350000.0).abs() < 1e-9);
        let t = std::f64::consts::PI / (4.0 * j);
        assert!((t * 1e9 - 243.0).abs() < 0.5);
    }

    #[test]
    fn remote_coupling_limits() {
        let p = SystemParams::remote(mhz(6000.0), mhz(6020.0), 0.0, mhz(600.0), mhz(60.0));
        assert_eq!(effective_coupling_remote(&p).unwrap(), 0.0);
        // δ̄ = 100 MHz with g_ab = 100 MHz, ζ = 0 sits on the pole
        let p = SystemParams::remote(mhz(6000.0), mhz(6000.0), mhz(100.0), mhz(100.0), mhz(60.0));
        assert_eq!(effective_coupling_remote(&p), Err(ModelError::HybridizedModeResonance));
        // ζ ≠ 0 moves the pole to √(g_ab² + Δ²)
        let p = SystemParams::remote(mhz(5970.0), mhz(6030.0), mhz(40.0), mhz(50.0), mhz(60.0));
        assert_eq!(effective_coupling_remote(&p), Err(ModelError::HybridizedModeResonance));
        assert!(effective_coupling(&benchmark()).is_ok());
        assert_eq!(effective_coupling_remote(&benchmark()), Err(ModelError::MissingTwoOscillator));
    }

    /// The static part of the RWA displacement reproduces the σ_zσ_z energy:
    /// second-order shift of `Σ f_k x_k` equals `−fᵀM⁻¹f`, whose cross term is
    /// `J̄ s₁s₂`.
    #[test]
    fn remote_coupling_from_static_shift() {
        let p = SystemParams::remote(mhz(5990.0), mhz(6013.0), mhz(80.0), mhz(500.0), mhz(45.0));
        let two = p.two_oscillator.unwrap();
        let da = two.omega_a - p.omega_m;
        let db = two.omega_b - p.omega_m;
        let det = da * db - two.g_ab * two.g_ab;
        // cross term of −fᵀM⁻¹f with f = (g₁/2, g₂/2): 2·(g₁/2)(g₂/2)·g_ab/det
        let cross = 0.5 * p.g1 * p.g2 * two.g_ab / det;
        let j = effective_coupling_remote(&p).unwrap();
        assert!((j - cross).abs() < 1e-12 * cross.abs());
    }

    #[test]
    fn alpha_closed_form_matches_integration() {
        let p = benchmark();
        for &t in &[ns(0.37), ns(1.9), ns(5.0)] {
            let steps = (t * p.omega_r * 200.0) as usize;
            let oracle = integrate_alpha(&p, p.g1, t, steps);
            let closed = polaron_alpha(&p, 0, t).unwrap();
            assert!((oracle - closed).norm() < 1e-9, "{t}: {oracle} vs {closed}");
        }
    }

    #[test]
    fn alpha_satisfies_ode_on_grid() {
        let p = benchmark();
        let g = p.g1;
        let (wm, wr, d, s) = (p.omega_m, p.omega_r, p.delta(), p.omega_r + p.omega_m);
        for k in 1..200 {
            let t = ns(0.05) * k as f64;
            let em = C64::from_polar(1.0, -wm * t);
            let er = C64::from_polar(1.0, -wr * t);
            // term-by-term derivative of the closed form
            let deriv = ((-I * wm * em + I * wr * er) / d + (I * wm * em.conj() + I * wr * er) / s) * (-0.5 * g);
            let alpha = polaron_alpha(&p, 0, t).unwrap();
            let rhs = -I * wr * alpha - I * g * (wm * t).cos();
            assert!((deriv - rhs).norm() <= 1e-9 * g, "{k}");
        }
    }

    #[test]
    fn alpha_vanishes_at_start_and_is_of_order_g_over_delta() {
        let p = benchmark();
        assert_eq!(polaron_alpha(&p, 0, 0.0).unwrap().norm(), 0.0);
        let period = 2.0 * std::f64::consts::PI / p.delta();
        let max = (0..4000)
            .map(|k| polaron_alpha(&p, 0, period * k as f64 / 4000.0).unwrap().norm())
            .fold(0.0, f64::max);
        let ratio = max / (p.g1 / p.delta());
        assert!((ratio - 1.0).abs() < 0.15, "{max}");
        assert!((max - 0.11).abs() < 0.01);
    }

    #[test]
    fn remote_displacement_solves_linear_ode() {
        let p = SystemParams::remote(mhz(5990.0), mhz(6013.0), mhz(80.0), mhz(500.0), mhz(45.0));
        let two = p.two_oscillator.unwrap();
        let da = two.omega_a - p.omega_m;
        let db = two.omega_b - p.omega_m;
        let s = (1.0, -1.0);
        let f = [0.5 * p.g1 * s.0, 0.5 * p.g2 * s.1];
        let rhs = |x: [C64; 2]| {
            [
                -I * (da * x[0] + two.g_ab * x[1] + f[0]),
                -I * (two.g_ab * x[0] + db * x[1] + f[1]),
            ]
        };
        let t_end = ns(7.0);
        let steps = 20000;
        let h = t_end / steps as f64;
        let mut x = [ZERO; 2];
        let add = |x: [C64; 2], k: [C64; 2], c: f64| [x[0] + k[0] * c, x[1] + k[1] * c];
        for _ in 0..steps {
            let k1 = rhs(x);
            let k2 = rhs(add(x, k1, h / 2.0));
            let k3 = rhs(add(x, k2, h / 2.0));
            let k4 = rhs(add(x, k3, h));
            for i in 0..2 {
                x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        let closed = remote_displacement(&p, s, t_end).unwrap();
        for i in 0..2 {
            assert!((x[i] - closed[i]).norm() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn coupling_negative_for_positive_detuning(g1 in 1.0f64..200.0, g2 in 1.0f64..200.0, d in 10.0f64..3000.0) {
            let mut p = SystemParams::with_detuning(mhz(6000.0), mhz(d), mhz(g1), 0.0);
            p.g2 = mhz(g2);
            prop_assert!(effective_coupling(&p).unwrap() < 0.0);
            prop_assert!(effective_coupling_rwa(&p).unwrap() < 0.0);
        }
    }
}
