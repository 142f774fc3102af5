//! Per-unit bases and machine-base to system-base conversion.
//!
//! Device parameters are entered on their own MVA rating and converted once
//! when a scenario is loaded. Voltages share the bus kV base, so only the
//! power base differs between a device and the system.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_BASE_MVA: f64 = 100.0;
pub const DEFAULT_BASE_FREQ: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemBase {
    pub mva: f64,
    pub freq_hz: f64,
}

impl Default for SystemBase {
    fn default() -> Self {
        Self {
            mva: DEFAULT_BASE_MVA,
            freq_hz: DEFAULT_BASE_FREQ,
        }
    }
}

impl SystemBase {
    /// Electrical angular speed at nominal frequency, rad/s.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.freq_hz
    }

    /// Ratio of a device rating to the system base.
    pub fn ratio(&self, device_mva: f64) -> f64 {
        device_mva / self.mva
    }

    /// Impedance on the device base expressed on the system base.
    pub fn impedance_to_system(&self, z_pu: f64, device_mva: f64) -> f64 {
        z_pu / self.ratio(device_mva)
    }

    /// Power (or current, at equal voltage base) on the device base expressed
    /// on the system base.
    pub fn power_to_system(&self, s_pu: f64, device_mva: f64) -> f64 {
        s_pu * self.ratio(device_mva)
    }

    pub fn power_to_device(&self, s_pu: f64, device_mva: f64) -> f64 {
        s_pu / self.ratio(device_mva)
    }

    /// Inertia constant H scales with stored energy over the base.
    pub fn inertia_to_system(&self, h_s: f64, device_mva: f64) -> f64 {
        h_s * self.ratio(device_mva)
    }

    pub fn pu_to_hz(&self, omega_pu: f64) -> f64 {
        omega_pu * self.freq_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        let b = SystemBase::default();
        let x_sys = b.impedance_to_system(0.22, 200.0);
        assert!((x_sys - 0.11).abs() < 1e-15);
        let s = b.power_to_system(0.8, 200.0);
        assert!((b.power_to_device(s, 200.0) - 0.8).abs() < 1e-15);
        assert!((b.inertia_to_system(4.0, 14.85) - 0.594).abs() < 1e-12);
        assert!((b.omega() - 376.99111843077515).abs() < 1e-9);
    }
}
