//! Time-domain integration: fixed-step RK4 over the device states with an
//! algebraic network solve at every stage, timed events, and decimated
//! output recording.

mod batch;
mod run;
mod system;

pub use batch::run_batch;
pub use run::{run, run_until, Simulation};
pub use system::{initialize, DeviceKindTag, System, SystemState};

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Conductance used for a bolted three-phase fault, pu.
pub const BOLTED_FAULT: f64 = 1e6;

fn bolted() -> Complex64 {
    Complex64::new(BOLTED_FAULT, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BreakerTarget {
    /// Index into the scenario's placements.
    Device(usize),
    /// Index into the network's branch list.
    Branch(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EventKind {
    ApplyFault {
        bus: usize,
        #[serde(default = "bolted")]
        admittance: Complex64,
    },
    ClearFault {
        bus: usize,
    },
    OpenBreaker {
        target: BreakerTarget,
    },
    CloseBreaker {
        target: BreakerTarget,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl Event {
    pub fn new(time: f64, kind: EventKind) -> Self {
        Self { time, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_decimation")]
    pub output_decimation: usize,
    #[serde(default = "default_tol")]
    pub network_tol: f64,
    #[serde(default = "default_mva")]
    pub base_mva: f64,
    #[serde(default = "default_freq")]
    pub base_freq: f64,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_decimation() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-10
}
fn default_mva() -> f64 {
    crate::units::DEFAULT_BASE_MVA
}
fn default_freq() -> f64 {
    crate::units::DEFAULT_BASE_FREQ
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 20.0,
            dt: default_dt(),
            output_decimation: default_decimation(),
            network_tol: default_tol(),
            base_mva: default_mva(),
            base_freq: default_freq(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.to_string()));
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return bad("dt must lie in (0, 0.01] s");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.output_decimation == 0 {
            return bad("output_decimation must be at least 1");
        }
        if !(self.network_tol > 0.0 && self.network_tol < 1e-3) {
            return bad("network_tol must lie in (0, 1e-3)");
        }
        if !(self.base_mva > 0.0 && self.base_freq > 0.0) {
            return bad("bases must be positive");
        }
        Ok(())
    }

    pub fn base(&self) -> crate::units::SystemBase {
        crate::units::SystemBase {
            mva: self.base_mva,
            freq_hz: self.base_freq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    NetworkCollapse,
    AllSourcesOffline,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Completed => "completed",
            Self::NetworkCollapse => "network_collapse",
            Self::AllSourcesOffline => "all_sources_offline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTrace {
    pub name: String,
    pub kind: DeviceKindTag,
    pub bus: usize,
    /// Injection into the network on the system base, pu.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Machine speed or PLL frequency, Hz.
    pub freq: Vec<f64>,
    /// Rotor angle (machines), PLL angle (inverters) or source angle, rad.
    pub delta: Vec<f64>,
    /// Terminal current magnitude on the system base, pu.
    pub current: Vec<f64>,
    pub online: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scenario: String,
    pub base_freq: f64,
    pub t: Vec<f64>,
    /// Indexed `[bus][sample]`.
    pub v_mag: Vec<Vec<f64>>,
    pub v_ang: Vec<Vec<f64>>,
    pub devices: Vec<DeviceTrace>,
    /// Complex power balance error at every sample, pu.
    pub balance_residual: Vec<f64>,
    pub events: Vec<EventRecord>,
    pub termination: Termination,
    pub termination_time: f64,
    /// Time of the first scheduled event, if any.
    pub first_event: Option<f64>,
    pub last_event: Option<f64>,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n_bus(&self) -> usize {
        self.v_mag.len()
    }

    /// Index of the first device placed at `bus`.
    pub fn device_at_bus(&self, bus: usize) -> Option<usize> {
        self.devices.iter().position(|d| d.bus == bus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        SimConfig::default().validate().unwrap();
        let c = SimConfig {
            dt: 0.02,
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SimConfig {
            output_decimation: 0,
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
