//! Synchronous machine dynamics shared by generators and condensers.
//!
//! The electrical model is the two-axis model with transient (`e′q`, `e′d`)
//! and subtransient (`e″q`, `e″d`) emfs. Rotor quantities use the `q + j·d`
//! complex form of the rotor frame: a network phasor `z` has
//! `z_q + j·z_d = z·e^{−jδ}`, so the d-axis leads the q-axis by 90°. With this
//! orientation an over-excited machine has negative `i_d`.
//!
//! Subtransient saliency is not modelled (`x″q = x″d`), which lets every
//! machine appear in the network as a Norton pair `(E″/(ra + jx″), 1/(ra + jx″))`.

mod analytic;
mod exciter;
mod flux;
mod model;

pub use analytic::{analytic_angle, analytic_freq_dev, analytic_speed_dev_pu, angular_momentum};
pub use exciter::{exciter_derivs, ExciterParams, ExciterST1A};
pub use flux::{flux_decomposition, FluxDecomposition};
pub use model::{
    condenser_derivs, electrical_power, equilibrium_state, initial_fault_current, machine_derivs,
    norton_equivalent, stator_current, swing_acceleration, Equilibrium, MachineDerivs,
};

use crate::error::{Error, Result};
use crate::units::SystemBase;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineMode {
    Generator,
    Condenser,
}

/// Machine parameters on the base given by `rated_mva`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineParams {
    pub rated_mva: f64,
    /// Inertia constant, s.
    pub h: f64,
    /// Damping, pu torque per pu speed deviation.
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub ra: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd_p: f64,
    pub xq_p: f64,
    pub xd_pp: f64,
    pub xq_pp: f64,
    pub xl: f64,
    pub td0_p: f64,
    pub tq0_p: f64,
    pub td0_pp: f64,
    pub tq0_pp: f64,
    pub mode: MachineMode,
}

impl MachineParams {
    /// Generic round-rotor machine used for every synchronous device in the
    /// catalog, on its own rating.
    pub fn generic(rated_mva: f64, h: f64, mode: MachineMode) -> Self {
        Self {
            rated_mva,
            h,
            d: 0.0,
            ra: 0.0,
            xd: 1.8,
            xq: 1.7,
            xd_p: 0.35,
            xq_p: 0.55,
            xd_pp: 0.22,
            xq_pp: 0.22,
            xl: 0.10,
            td0_p: 6.0,
            tq0_p: 0.75,
            td0_pp: 0.03,
            tq0_pp: 0.05,
            mode,
        }
    }

    /// Subtransient reactance used in the Norton equivalent.
    pub fn x_pp(&self) -> f64 {
        self.xd_pp
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidMachine(m.to_string()));
        let all = [
            self.rated_mva,
            self.h,
            self.d,
            self.ra,
            self.xd,
            self.xq,
            self.xd_p,
            self.xq_p,
            self.xd_pp,
            self.xq_pp,
            self.xl,
            self.td0_p,
            self.tq0_p,
            self.td0_pp,
            self.tq0_pp,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.rated_mva <= 0.0 {
            return bad("rated_mva must be positive");
        }
        if self.h <= 0.0 {
            return bad("h must be positive");
        }
        if self.d < 0.0 || self.ra < 0.0 {
            return bad("d and ra must be non-negative");
        }
        if !(self.xd >= self.xd_p
            && self.xd_p >= self.xd_pp
            && self.xd_pp > self.xl
            && self.xl >= 0.0)
        {
            return bad("d-axis reactances must satisfy xd >= xd' >= xd'' > xl >= 0");
        }
        if !(self.xq >= self.xq_p && self.xq_p >= self.xq_pp && self.xq_pp > self.xl) {
            return bad("q-axis reactances must satisfy xq >= xq' >= xq'' > xl");
        }
        if self.xd_pp != self.xq_pp {
            return bad("subtransient saliency is not supported: xd'' must equal xq''");
        }
        if [self.td0_p, self.tq0_p, self.td0_pp, self.tq0_pp]
            .iter()
            .any(|&t| t <= 0.0)
        {
            return bad("time constants must be positive");
        }
        Ok(())
    }

    /// The same machine expressed on the system base.
    pub fn on_system_base(&self, base: &SystemBase) -> Self {
        let z = |x: f64| base.impedance_to_system(x, self.rated_mva);
        Self {
            rated_mva: base.mva,
            h: base.inertia_to_system(self.h, self.rated_mva),
            d: base.power_to_system(self.d, self.rated_mva),
            ra: z(self.ra),
            xd: z(self.xd),
            xq: z(self.xq),
            xd_p: z(self.xd_p),
            xq_p: z(self.xq_p),
            xd_pp: z(self.xd_pp),
            xq_pp: z(self.xq_pp),
            xl: z(self.xl),
            ..self.clone()
        }
    }
}

/// Dynamic state of one machine.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MachineState {
    /// Rotor (q-axis) angle relative to the synchronous frame, rad.
    pub delta: f64,
    /// Rotor speed, pu.
    pub omega: f64,
    pub eq_p: f64,
    pub ed_p: f64,
    pub eq_pp: f64,
    pub ed_pp: f64,
}

impl MachineState {
    pub const LEN: usize = 6;

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.delta, self.omega, self.eq_p, self.ed_p, self.eq_pp, self.ed_pp,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            delta: x[0],
            omega: x[1],
            eq_p: x[2],
            ed_p: x[3],
            eq_pp: x[4],
            ed_pp: x[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_machine_is_valid() {
        MachineParams::generic(200.0, 4.0, MachineMode::Generator)
            .validate()
            .unwrap();
    }

    #[test]
    fn rejects_degenerate_reactances() {
        let mut p = MachineParams::generic(200.0, 4.0, MachineMode::Generator);
        p.xd_p = 0.1;
        assert!(p.validate().is_err());
        let mut p = MachineParams::generic(200.0, 4.0, MachineMode::Generator);
        p.xq_pp = 0.25;
        assert!(p.validate().is_err());
        let mut p = MachineParams::generic(200.0, 4.0, MachineMode::Generator);
        p.td0_pp = 0.0;
        assert!(p.validate().is_err());
        let mut p = MachineParams::generic(200.0, 4.0, MachineMode::Generator);
        p.h = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn system_base_conversion() {
        let p = MachineParams::generic(200.0, 4.0, MachineMode::Generator);
        let s = p.on_system_base(&SystemBase::default());
        assert_eq!(s.rated_mva, 100.0);
        assert!((s.h - 8.0).abs() < 1e-15);
        assert!((s.xd_pp - 0.11).abs() < 1e-15);
        assert_eq!(s.td0_p, p.td0_p);
        s.validate().unwrap();
    }
}
