//! Grid-following inverter: synchronous-reference-frame PLL, P-f / Q-V droop,
//! a current-limited current source and latching trip logic.
//!
//! Inverter quantities are on the inverter's own rating. The PLL angle is
//! measured from the synchronous reference frame of the phasor network, so a
//! PLL locked to a 60 Hz bus has a constant angle.
//!
//! The inner current loops collapse to a first-order lag `t_i` on the current
//! command, expressed in the PLL frame: `d` is aligned with the PLL angle and
//! carries active current, `q` carries reactive current.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Voltage magnitude used in the current-command division below this level.
pub const V_FLOOR: f64 = 0.1;
/// Below this terminal voltage the current limiter favours reactive current.
pub const REACTIVE_PRIORITY_V: f64 = 0.9;
/// Terminal voltage below which the PLL coasts instead of tracking.
pub const V_PLL_HOLD: f64 = 0.4;

const PLL_BANDWIDTH_HZ: f64 = 20.0;
const PLL_ZETA: f64 = 0.7;

fn pll_wn() -> f64 {
    2.0 * PI * PLL_BANDWIDTH_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GflParams {
    pub rated_mva: f64,
    pub p_set: f64,
    #[serde(default)]
    pub q_set: f64,
    #[serde(default = "default_m_p")]
    pub m_p: f64,
    #[serde(default = "default_m_q")]
    pub m_q: f64,
    #[serde(default = "one")]
    pub omega_n: f64,
    /// Nominal voltage for the Q-V droop; captured from the initial terminal
    /// voltage when absent.
    #[serde(default)]
    pub v_n: Option<f64>,
    /// Available active power; the droop cannot command more than this.
    #[serde(default)]
    pub p_max: Option<f64>,
    #[serde(default = "default_kp")]
    pub kp_pll: f64,
    #[serde(default = "default_ki")]
    pub ki_pll: f64,
    #[serde(default = "default_i_max")]
    pub i_max: f64,
    #[serde(default = "default_t_i")]
    pub t_i: f64,
    #[serde(default = "default_f_lo")]
    pub f_trip_lo: f64,
    #[serde(default = "default_f_hi")]
    pub f_trip_hi: f64,
    #[serde(default = "default_v_trip")]
    pub v_trip_lo: f64,
    #[serde(default = "default_t_trip")]
    pub t_trip: f64,
    /// Below this terminal voltage the PLL stops tracking and coasts at its
    /// last frequency.
    #[serde(default = "default_v_pll_hold")]
    pub v_pll_hold: f64,
}

fn one() -> f64 {
    1.0
}
fn default_m_p() -> f64 {
    20.0
}
fn default_m_q() -> f64 {
    5.0
}
fn default_kp() -> f64 {
    2.0 * PLL_ZETA * pll_wn()
}
fn default_ki() -> f64 {
    pll_wn() * pll_wn()
}
fn default_i_max() -> f64 {
    1.2
}
fn default_t_i() -> f64 {
    0.01
}
fn default_f_lo() -> f64 {
    57.0
}
fn default_f_hi() -> f64 {
    63.0
}
fn default_v_trip() -> f64 {
    0.1
}
fn default_t_trip() -> f64 {
    0.15
}
fn default_v_pll_hold() -> f64 {
    V_PLL_HOLD
}

impl GflParams {
    pub fn new(rated_mva: f64, p_set: f64, q_set: f64) -> Self {
        Self {
            rated_mva,
            p_set,
            q_set,
            m_p: default_m_p(),
            m_q: default_m_q(),
            omega_n: 1.0,
            v_n: None,
            p_max: None,
            kp_pll: default_kp(),
            ki_pll: default_ki(),
            i_max: default_i_max(),
            t_i: default_t_i(),
            f_trip_lo: default_f_lo(),
            f_trip_hi: default_f_hi(),
            v_trip_lo: default_v_trip(),
            t_trip: default_t_trip(),
            v_pll_hold: default_v_pll_hold(),
        }
    }

    pub fn validate(&self, base_freq: f64) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInverter(m.to_string()));
        if !(self.rated_mva > 0.0) {
            return bad("rated_mva must be positive");
        }
        if !(self.i_max >= 1.0) {
            return bad("i_max must be at least 1 pu");
        }
        if self.m_p < 0.0 || self.m_q < 0.0 {
            return bad("droop gains must be non-negative");
        }
        if !(self.ki_pll > 0.0 && self.kp_pll > 0.0) {
            return bad("PLL gains must be positive");
        }
        if !(0.0..1.0).contains(&self.v_pll_hold) {
            return bad("v_pll_hold must lie in [0, 1)");
        }
        if !(self.t_i > 0.0 && self.t_trip >= 0.0) {
            return bad("time constants must be positive");
        }
        if !(self.f_trip_lo < base_freq && base_freq < self.f_trip_hi) {
            return bad("trip band must bracket the nominal frequency");
        }
        if !(self.p_set.is_finite() && self.q_set.is_finite()) {
            return bad("non-finite dispatch");
        }
        if self.p_max.is_some_and(|cap| cap < self.p_set) {
            return bad("p_set exceeds p_max");
        }
        Ok(())
    }

    fn v_nominal(&self) -> f64 {
        self.v_n.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GflState {
    /// PLL angle relative to the synchronous frame, rad.
    pub theta_pll: f64,
    /// PI integrator output, rad/s.
    pub pll_integ: f64,
    /// Last evaluated PLL frequency, pu.
    pub omega_pll: f64,
    pub id_filt: f64,
    pub iq_filt: f64,
    pub online: bool,
    /// Time spent continuously outside the ride-through envelope, s.
    pub trip_timer: f64,
}

impl GflState {
    pub const LEN: usize = 4;

    pub fn continuous(&self) -> [f64; 4] {
        [self.theta_pll, self.pll_integ, self.id_filt, self.iq_filt]
    }

    pub fn set_continuous(&mut self, x: &[f64]) {
        self.theta_pll = x[0];
        self.pll_integ = x[1];
        self.id_filt = x[2];
        self.iq_filt = x[3];
    }

    /// Filtered current in the PLL frame, limited to `i_max`.
    pub fn current_dq(&self, i_max: f64) -> Complex64 {
        let i = Complex64::new(self.id_filt, self.iq_filt);
        let m = i.norm();
        if m > i_max {
            i * (i_max / m)
        } else {
            i
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllDerivs {
    /// Rate of change of the PLL angle relative to the synchronous frame, rad/s.
    pub theta: f64,
    pub integ: f64,
    pub omega_pll: f64,
}

/// Terminal voltage in the PLL frame.
pub fn to_pll_frame(theta: f64, v: Complex64) -> Complex64 {
    v * Complex64::from_polar(1.0, -theta)
}

pub fn pll_derivs(
    params: &GflParams,
    state: &GflState,
    v_terminal: Complex64,
    omega_base: f64,
) -> PllDerivs {
    if v_terminal.norm() < params.v_pll_hold {
        return PllDerivs {
            theta: state.pll_integ,
            integ: 0.0,
            omega_pll: 1.0 + state.pll_integ / omega_base,
        };
    }
    let v_q = to_pll_frame(state.theta_pll, v_terminal).im;
    let slip = params.kp_pll * v_q + state.pll_integ;
    PllDerivs {
        theta: slip,
        integ: params.ki_pll * v_q,
        omega_pll: 1.0 + slip / omega_base,
    }
}

/// Active and reactive power targets from the droop laws.
pub fn droop_targets(params: &GflParams, omega_pll: f64, v_mag: f64) -> (f64, f64) {
    let p = params.p_set + (params.omega_n - omega_pll) * params.m_p;
    let q = params.q_set + (params.v_nominal() - v_mag) * params.m_q;
    (p, q)
}

/// Current command in the PLL frame for power targets at terminal voltage
/// `v_dq` (PLL frame), limited to `i_max`.
pub fn current_command(params: &GflParams, p_star: f64, q_star: f64, v_dq: Complex64) -> Complex64 {
    let m = v_dq.norm();
    let v = if m < V_FLOOR {
        if m > 0.0 {
            v_dq * (V_FLOOR / m)
        } else {
            Complex64::new(V_FLOOR, 0.0)
        }
    } else {
        v_dq
    };
    let i = (Complex64::new(p_star, q_star) / v).conj();
    limit_current(i, params.i_max, m < REACTIVE_PRIORITY_V)
}

fn limit_current(i: Complex64, i_max: f64, reactive_priority: bool) -> Complex64 {
    if i.norm() <= i_max {
        return i;
    }
    let (id, iq) = (i.re, i.im);
    if reactive_priority {
        let iq_l = iq.clamp(-i_max, i_max);
        let room = (i_max * i_max - iq_l * iq_l).max(0.0).sqrt();
        Complex64::new(id.signum() * id.abs().min(room), iq_l)
    } else {
        let id_l = id.clamp(-i_max, i_max);
        let room = (i_max * i_max - id_l * id_l).max(0.0).sqrt();
        Complex64::new(id_l, iq.signum() * iq.abs().min(room))
    }
}

/// Derivatives of the continuous inverter states, in `GflState::continuous` order.
pub fn gfl_derivs(
    params: &GflParams,
    state: &GflState,
    v_terminal: Complex64,
    omega_base: f64,
) -> ([f64; 4], f64) {
    if !state.online {
        return ([0.0; 4], state.omega_pll);
    }
    let pll = pll_derivs(params, state, v_terminal, omega_base);
    let (p, q) = droop_targets(params, pll.omega_pll, v_terminal.norm());
    let p = params.p_max.map_or(p, |cap| p.min(cap));
    let cmd = current_command(params, p, q, to_pll_frame(state.theta_pll, v_terminal));
    let did = (cmd.re - state.id_filt) / params.t_i;
    let diq = (cmd.im - state.iq_filt) / params.t_i;
    ([pll.theta, pll.integ, did, diq], pll.omega_pll)
}

/// Current injected into the network, network frame, on the inverter base.
pub fn injected_current(params: &GflParams, state: &GflState) -> Complex64 {
    if !state.online {
        return Complex64::default();
    }
    state.current_dq(params.i_max) * Complex64::from_polar(1.0, state.theta_pll)
}

/// Advances the ride-through timer by `dt` and latches the device offline
/// once it has been outside the envelope for `t_trip`.
pub fn trip_check(
    params: &GflParams,
    state: &mut GflState,
    v_mag: f64,
    dt: f64,
    base_freq: f64,
) -> bool {
    if !state.online {
        return false;
    }
    let f = state.omega_pll * base_freq;
    let outside = f < params.f_trip_lo || f > params.f_trip_hi || v_mag < params.v_trip_lo;
    if outside {
        state.trip_timer += dt;
    } else {
        state.trip_timer = 0.0;
    }
    if outside && state.trip_timer >= params.t_trip - 1e-12 {
        state.online = false;
    }
    state.online
}

/// Locked steady state delivering `(p_set, q_set)` at terminal voltage `v`.
pub fn initial_state(params: &GflParams, v: Complex64) -> Result<(GflState, GflParams)> {
    let mut resolved = params.clone();
    if resolved.v_n.is_none() {
        resolved.v_n = Some(v.norm());
    }
    let theta = v.arg();
    let v_dq = to_pll_frame(theta, v);
    let (p, q) = droop_targets(&resolved, resolved.omega_n, v.norm());
    let unlimited = (Complex64::new(p, q) / v_dq).conj();
    if unlimited.norm() > params.i_max {
        return Err(Error::Initialization(format!(
            "inverter dispatch needs {:.3} pu current, above i_max {:.3}",
            unlimited.norm(),
            params.i_max
        )));
    }
    let state = GflState {
        theta_pll: theta,
        pll_integ: 0.0,
        omega_pll: 1.0,
        id_filt: unlimited.re,
        iq_filt: unlimited.im,
        online: true,
        trip_timer: 0.0,
    };
    Ok((state, resolved))
}
