//! Point lists, per-point planning and summary fits of the named studies.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::ModelKind;
use crate::model::units::{r_to_db, to_mhz};
use crate::model::{
    normal_mode_detunings, plan_remote_schedule, plan_schedule, GateSchedule, PlanOptions, SqueezeParams,
    SqueezeVariant, SystemParams,
};

use super::fit::linear_fit;
use super::{Result, SweepRow, SweepSpec, Study};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointPlan {
    SingleOscillator,
    Remote,
}

/// One simulation of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub axis: f64,
    pub series: String,
    pub variant: String,
    pub kind: ModelKind,
    pub params: SystemParams,
    pub plan: PointPlan,
    /// Squeezing angles tried, best kept; empty for a single run.
    pub phi0_scan: Vec<f64>,
    /// Reason the point is skipped.
    pub excluded: Option<String>,
}

fn set_detuning(p: &mut SystemParams, delta: f64) {
    p.omega_m = p.omega_r - delta;
}

fn set_coupling(p: &mut SystemParams, g: f64) {
    p.g1 = g;
    p.g2 = g;
}

/// Drops round-off from unit conversions, keeping 12 significant digits.
fn tidy(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn label(name: &str, v: f64) -> String {
    format!("{name}={v}")
}

/// Expands the spec into its points, series-major.
pub fn points(spec: &SweepSpec) -> Result<Vec<Point>> {
    let kind = spec.model.kind(spec.coupling_approx);
    let base = |axis: f64, series: String, params: SystemParams| Point {
        axis,
        series,
        variant: "none".into(),
        kind,
        params,
        plan: PointPlan::SingleOscillator,
        phi0_scan: Vec::new(),
        excluded: None,
    };
    let kappa = spec.params.kappa;
    let mut out = Vec::new();
    match spec.study {
        Study::DetuningSweep => {
            for &gk in &spec.series {
                for &dk in &spec.axis {
                    let mut p = spec.params.clone();
                    set_detuning(&mut p, dk * kappa);
                    set_coupling(&mut p, gk * kappa);
                    out.push(base(dk, label("g_over_kappa", gk), p));
                }
            }
        }
        Study::CouplingSweep => {
            for &dk in &spec.series {
                for &gk in &spec.axis {
                    let mut p = spec.params.clone();
                    set_detuning(&mut p, dk * kappa);
                    set_coupling(&mut p, gk * kappa);
                    out.push(base(gk, label("delta_over_kappa", dk), p));
                }
            }
        }
        Study::SqueezingSweep => {
            for &variant in &spec.squeezing.variants {
                for &db in &spec.axis {
                    let mut p = spec.params.clone();
                    p.squeezing = Some(SqueezeParams::from_db(db, variant, 0.0));
                    let mut pt = base(db, format!("{}/effective", variant.label()), p);
                    pt.kind = ModelKind::PolaronEffective;
                    pt.variant = variant.label().into();
                    out.push(pt);
                }
            }
            // only the rotating-angle reservoir has a Markovian microscopic form
            if spec.squeezing.variants.contains(&SqueezeVariant::RotatingAngle) {
                let scan: Vec<f64> =
                    (0..spec.squeezing.phi0_count).map(|k| PI * k as f64 / spec.squeezing.phi0_count as f64).collect();
                for &db in spec.axis.iter().filter(|db| **db <= spec.squeezing.microscopic_max_db) {
                    let mut p = spec.params.clone();
                    p.squeezing = Some(SqueezeParams::from_db(db, SqueezeVariant::RotatingAngle, 0.0));
                    let mut pt = base(db, "rotating_angle/microscopic".into(), p);
                    pt.kind = ModelKind::Rotating { rwa: true };
                    pt.variant = SqueezeVariant::RotatingAngle.label().into();
                    pt.phi0_scan = scan.clone();
                    out.push(pt);
                }
            }
        }
        Study::RemoteGate => {
            let kappas = if spec.series.is_empty() { vec![kappa] } else { spec.series.clone() };
            let two = spec.params.require_two_oscillator()?;
            let mean = 0.5 * (two.omega_a + two.omega_b);
            let axis = if spec.axis.is_empty() { vec![mean - spec.params.omega_m] } else { spec.axis.clone() };
            for &k in &kappas {
                for &delta_bar in &axis {
                    let mut p = spec.params.clone();
                    p.kappa = k;
                    p.omega_m = mean - delta_bar;
                    let mut pt = base(tidy(to_mhz(delta_bar)), label("kappa_mhz_over_2pi", tidy(to_mhz(k))), p);
                    pt.plan = PointPlan::Remote;
                    pt.excluded = pole_exclusion(&pt.params, spec.pole_exclusion)?;
                    out.push(pt);
                }
            }
        }
        Study::BenchmarkPoint | Study::T1t2Point => {
            let name = spec.study.name().to_string();
            let mut p = spec.params.clone();
            if spec.study == Study::BenchmarkPoint {
                p.qubit_noise = None;
            }
            out.push(base(tidy(to_mhz(spec.params.delta())), name, p));
        }
    }
    Ok(out)
}

/// Reason for skipping a remote point next to the hybridized-mode pole.
fn pole_exclusion(p: &SystemParams, fraction: f64) -> Result<Option<String>> {
    let (nu_plus, nu_minus) = normal_mode_detunings(p)?;
    let omega = 0.5 * (nu_plus - nu_minus);
    if omega > 0.0 && nu_minus.abs() <= fraction * omega {
        return Ok(Some(format!(
            "hybridized-mode resonance (delta_bar is {:.4} MHz from the normal mode at {:.4} MHz)",
            to_mhz(nu_minus.abs()),
            to_mhz(omega)
        )));
    }
    Ok(None)
}

/// Commensurate schedule of one point.
pub fn plan_point(spec: &SweepSpec, point: &Point) -> crate::model::Result<GateSchedule> {
    let opts = PlanOptions { approx: spec.coupling_approx, rescale_g2: spec.rescale_g2, target_t_g: spec.target_t_g };
    match point.plan {
        PointPlan::SingleOscillator => plan_schedule(&point.params, spec.theta, opts),
        PointPlan::Remote => plan_remote_schedule(&point.params, spec.theta, opts),
    }
}

fn series_groups<'a>(pts: &[Point], rows: &'a [SweepRow]) -> Vec<(String, Vec<(f64, &'a SweepRow)>)> {
    let mut groups: Vec<(String, Vec<(f64, &SweepRow)>)> = Vec::new();
    for (p, r) in pts.iter().zip(rows) {
        match groups.iter_mut().find(|(s, _)| *s == p.series) {
            Some((_, g)) => g.push((p.axis, r)),
            None => groups.push((p.series.clone(), vec![(p.axis, r)])),
        }
    }
    groups
}

/// Least-squares slope of `ln y` against `ln x` over rows with positive `y`.
fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|(a, b)| *a > 0.0 && *b > 0.0).map(|(a, b)| (a.ln(), b.ln())).unzip();
    linear_fit(&x, &y).map(|f| f.0)
}

fn relative_spread(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Some((max - min) / mean)
}

/// Fits and cross-series comparisons, keyed by name.
pub(super) fn summarize(spec: &SweepSpec, pts: &[Point], rows: &[SweepRow]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    out.insert("rows".into(), rows.len() as f64);
    out.insert("failed".into(), rows.iter().filter(|r| r.is_error()).count() as f64);
    out.insert("excluded".into(), rows.iter().filter(|r| r.is_excluded()).count() as f64);
    let groups = series_groups(pts, rows);
    let infid = |g: &[(f64, &SweepRow)]| -> Vec<(f64, f64)> {
        g.iter().filter_map(|(a, r)| Some((*a, r.infidelity?))).collect()
    };
    match spec.study {
        Study::DetuningSweep => {
            for (name, g) in &groups {
                if let Some(s) = log_log_slope(&infid(g)) {
                    out.insert(format!("slope_log_infidelity_vs_log_delta[{name}]"), s);
                }
            }
            // pointwise spread across the g series
            let mut worst: Option<f64> = None;
            for &a in &spec.axis {
                let v: Vec<f64> = groups
                    .iter()
                    .filter_map(|(_, g)| g.iter().find(|(x, _)| *x == a).and_then(|(_, r)| r.infidelity))
                    .collect();
                if v.len() == groups.len() {
                    if let Some(s) = relative_spread(&v) {
                        worst = Some(worst.map_or(s, |w: f64| w.max(s)));
                    }
                }
            }
            if let Some(w) = worst {
                out.insert("max_pointwise_spread_across_series".into(), w);
            }
        }
        Study::CouplingSweep => {
            for (name, g) in &groups {
                let tg: Vec<(f64, f64)> = g.iter().filter_map(|(a, r)| Some((*a, r.t_g_ns?))).collect();
                if let Some(s) = log_log_slope(&tg) {
                    out.insert(format!("exponent_t_g_vs_g[{name}]"), s);
                }
                let v: Vec<f64> = infid(g).into_iter().map(|(_, y)| y).collect();
                if let Some(s) = relative_spread(&v) {
                    out.insert(format!("infidelity_spread_across_g[{name}]"), s);
                }
            }
        }
        Study::SqueezingSweep => {
            for (name, g) in &groups {
                let (x, y): (Vec<f64>, Vec<f64>) =
                    infid(g).into_iter().filter(|(_, y)| *y > 0.0).map(|(a, y)| (a, y.log10())).unzip();
                if let Some((slope, _)) = linear_fit(&x, &y) {
                    out.insert(format!("slope_log10_infidelity_per_db[{name}]"), slope);
                }
            }
            let at_zero = |series: &str| {
                groups.iter().find(|(s, _)| s == series).and_then(|(_, g)| {
                    g.iter().find(|(a, _)| *a == 0.0).and_then(|(_, r)| r.infidelity)
                })
            };
            if let (Some(rot), Some(fil)) = (at_zero("rotating_angle/effective"), at_zero("fixed_angle_filtered/effective")) {
                out.insert("filtered_reduction_at_0db".into(), rot / fil);
            }
            // microscopic vs effective, same powers
            if let (Some((_, eff)), Some((_, mic))) = (
                groups.iter().find(|(s, _)| s == "rotating_angle/effective"),
                groups.iter().find(|(s, _)| s == "rotating_angle/microscopic"),
            ) {
                let mut worst: Option<f64> = None;
                for (a, r) in mic {
                    let e = eff.iter().find(|(x, _)| x == a).and_then(|(_, r)| r.infidelity);
                    if let (Some(m), Some(e)) = (r.infidelity, e) {
                        let ratio = (m / e).max(e / m);
                        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
                    }
                }
                if let Some(w) = worst {
                    out.insert("max_microscopic_to_effective_ratio".into(), w);
                }
            }
            out.insert("max_db".into(), spec.axis.iter().copied().fold(0.0, f64::max));
            if let Some(s) = spec.params.squeezing {
                out.insert("base_r_db".into(), r_to_db(s.r));
            }
        }
        Study::RemoteGate => {
            // a sign change of ν₋ between neighbours means the grid steps over
            // the pole; report it even when no point fell inside the margin
            let mut crossings = 0;
            for w in pts.windows(2) {
                if w[0].series != w[1].series {
                    continue;
                }
                let nu = |p: &Point| normal_mode_detunings(&p.params).map(|(_, m)| m).unwrap_or(f64::NAN);
                if nu(&w[0]) * nu(&w[1]) < 0.0 {
                    crossings += 1;
                    log::warn!("remote sweep crosses the hybridized-mode pole between {} and {}", w[0].axis, w[1].axis);
                }
            }
            out.insert("pole_crossings".into(), crossings as f64);
            if let Ok((p, m)) = normal_mode_detunings(&spec.params) {
                let omega = 0.5 * (p - m);
                out.insert("pole_delta_bar_mhz_over_2pi".into(), to_mhz(omega));
            }
        }
        Study::BenchmarkPoint | Study::T1t2Point => {}
    }
    out
}
