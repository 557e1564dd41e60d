//! Laboratory units to SI/angular conversions.

use std::f64::consts::PI;

/// ω for a frequency quoted as ω/2π in MHz.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e6
}

pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f * 1e9
}

/// Inverse of [`mhz`].
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

pub fn us(t: f64) -> f64 {
    t * 1e-6
}

pub fn to_ns(t: f64) -> f64 {
    t * 1e9
}

/// Squeezing power `10·log₁₀(e^{2r})`.
pub fn r_to_db(r: f64) -> f64 {
    10.0 * (2.0 * r).exp().log10()
}

pub fn db_to_r(db: f64) -> f64 {
    0.5 * (db / 10.0 * std::f64::consts::LN_10)
}
