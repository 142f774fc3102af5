//! Closed-form swing trajectories for a machine with no damping under a held
//! accelerating-power step `ΔPe`.
//!
//! `m` is the angular momentum in pu·s²/rad, `m = 2H / ω_base`.

use std::f64::consts::PI;

pub fn angular_momentum(h: f64, base_freq_hz: f64) -> f64 {
    2.0 * h / (2.0 * PI * base_freq_hz)
}

/// Frequency deviation in Hz after `t` seconds: `ΔPe·t / (2π·m)`.
pub fn analytic_freq_dev(m: f64, delta_pe: f64, t: f64) -> f64 {
    delta_pe * t / (2.0 * PI * m)
}

/// Per-unit speed deviation, `ΔPe·t / (2H)`.
pub fn analytic_speed_dev_pu(h: f64, delta_pe: f64, t: f64) -> f64 {
    delta_pe * t / (2.0 * h)
}

/// Rotor angle after `t` seconds, rad: `δ₀ + ΔPe·t² / (2m)`, the double
/// integral of the constant acceleration `ΔPe/m`.
pub fn analytic_angle(m: f64, delta_pe: f64, t: f64, delta0: f64) -> f64 {
    delta0 + delta_pe * t * t / (2.0 * m)
}
