//! Simplified solid-state (ST1A-type) static exciter: a first-order voltage
//! transducer followed by a high proportional gain and field-voltage ceilings.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExciterParams {
    #[serde(default = "default_tr")]
    pub tr: f64,
    #[serde(default = "default_ka")]
    pub ka: f64,
    #[serde(default = "default_efd_min")]
    pub efd_min: f64,
    #[serde(default = "default_efd_max")]
    pub efd_max: f64,
}

fn default_tr() -> f64 {
    0.02
}
fn default_ka() -> f64 {
    200.0
}
fn default_efd_min() -> f64 {
    -8.0
}
fn default_efd_max() -> f64 {
    8.0
}

impl Default for ExciterParams {
    fn default() -> Self {
        Self {
            tr: default_tr(),
            ka: default_ka(),
            efd_min: default_efd_min(),
            efd_max: default_efd_max(),
        }
    }
}

impl ExciterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tr > 0.0 && self.ka > 0.0 && self.efd_min < self.efd_max) {
            return Err(Error::InvalidMachine(
                "exciter requires tr > 0, ka > 0 and efd_min < efd_max".into(),
            ));
        }
        Ok(())
    }
}

/// Exciter parameters together with the reference and the measured-voltage state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExciterST1A {
    pub params: ExciterParams,
    pub vref: f64,
    pub v_meas: f64,
}

impl ExciterST1A {
    /// Exciter at rest at terminal voltage `v_mag`, producing `efd`.
    pub fn at_equilibrium(params: ExciterParams, v_mag: f64, efd: f64) -> Result<Self> {
        if efd < params.efd_min || efd > params.efd_max {
            return Err(Error::Initialization(format!(
                "required field voltage {efd:.3} pu is outside the exciter ceiling [{}, {}]",
                params.efd_min, params.efd_max
            )));
        }
        Ok(Self {
            params,
            vref: v_mag + efd / params.ka,
            v_meas: v_mag,
        })
    }

    /// Limited field voltage for the current measured voltage.
    pub fn efd(&self) -> f64 {
        self.efd_for(self.v_meas)
    }

    pub fn efd_for(&self, v_meas: f64) -> f64 {
        (self.params.ka * (self.vref - v_meas)).clamp(self.params.efd_min, self.params.efd_max)
    }
}

/// Returns `(dv_meas/dt, efd)`.
pub fn exciter_derivs(exciter: &ExciterST1A, v_terminal_mag: f64) -> (f64, f64) {
    let dv = (v_terminal_mag - exciter.v_meas) / exciter.params.tr;
    (dv, exciter.efd())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exciter(vref: f64, v_meas: f64) -> ExciterST1A {
        ExciterST1A {
            params: ExciterParams::default(),
            vref,
            v_meas,
        }
    }

    #[test]
    fn steady_when_reference_met() {
        let e = exciter(1.0, 1.0);
        let (dv, efd) = exciter_derivs(&e, 1.0);
        assert_eq!(dv, 0.0);
        assert_eq!(efd, 0.0);
    }

    #[test]
    fn voltage_dip_hits_ceiling() {
        let e = exciter(1.0, 0.95);
        // unlimited demand is 200 * 0.05 = 10 pu
        assert_abs_diff_eq!(e.params.ka * (e.vref - e.v_meas), 10.0, epsilon = 1e-9);
        assert_eq!(e.efd(), 8.0);
        let e = exciter(1.0, 1.05);
        assert_eq!(e.efd(), -8.0);
    }

    #[test]
    fn transducer_time_constant() {
        // Integrate the lag with a fine RK4 and check 63.2 % after one tr.
        let mut e = exciter(1.0, 1.0);
        let step = 0.1;
        let dt = 1e-5;
        let n = (e.params.tr / dt).round() as usize;
        for _ in 0..n {
            let f = |vm: f64| (1.0 + step - vm) / e.params.tr;
            let x = e.v_meas;
            let k1 = f(x);
            let k2 = f(x + 0.5 * dt * k1);
            let k3 = f(x + 0.5 * dt * k2);
            let k4 = f(x + dt * k3);
            e.v_meas = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let frac = (e.v_meas - 1.0) / step;
        assert_abs_diff_eq!(frac, 1.0 - (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(frac, 0.632, epsilon = 1e-3);
    }

    #[test]
    fn equilibrium_rejects_out_of_range_field() {
        assert!(ExciterST1A::at_equilibrium(ExciterParams::default(), 1.0, 9.0).is_err());
        let e = ExciterST1A::at_equilibrium(ExciterParams::default(), 1.02, 2.1).unwrap();
        assert_abs_diff_eq!(e.efd(), 2.1, epsilon = 1e-12);
    }
}
