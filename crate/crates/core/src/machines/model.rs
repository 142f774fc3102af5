use super::{MachineMode, MachineParams, MachineState};
use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineDerivs {
    pub delta: f64,
    pub omega: f64,
    pub eq_p: f64,
    pub ed_p: f64,
    pub eq_pp: f64,
    pub ed_pp: f64,
}

impl MachineDerivs {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.delta, self.omega, self.eq_p, self.ed_p, self.eq_pp, self.ed_pp,
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn rotor(delta: f64) -> Complex64 {
    Complex64::from_polar(1.0, delta)
}

/// Subtransient emf as a network-frame phasor.
fn emf_pp(state: &MachineState) -> Complex64 {
    Complex64::new(state.eq_pp, state.ed_pp) * rotor(state.delta)
}

fn z_pp(params: &MachineParams) -> Complex64 {
    Complex64::new(params.ra, params.x_pp())
}

/// Stator current leaving the machine, network frame.
pub fn stator_current(
    params: &MachineParams,
    state: &MachineState,
    v_terminal: Complex64,
) -> Complex64 {
    (emf_pp(state) - v_terminal) / z_pp(params)
}

/// Power delivered across the air gap (behind `ra + jx″`), generator
/// convention. This is the electrical power of the swing equation.
pub fn electrical_power(
    params: &MachineParams,
    state: &MachineState,
    v_terminal: Complex64,
) -> (f64, f64) {
    let s = emf_pp(state) * stator_current(params, state, v_terminal).conj();
    (s.re, s.im)
}

/// Norton source current and shunt admittance on the params' base.
pub fn norton_equivalent(params: &MachineParams, state: &MachineState) -> (Complex64, Complex64) {
    let y = z_pp(params).inv();
    (emf_pp(state) * y, y)
}

/// Rotor acceleration `dω/dt` in pu/s; `p_e` is generated (output) power.
pub fn swing_acceleration(h: f64, d: f64, p_mech: f64, p_e: f64, omega: f64) -> f64 {
    (p_mech - p_e - d * (omega - 1.0)) / (2.0 * h)
}

/// State derivatives of a machine for a given field voltage and terminal voltage.
pub fn machine_derivs(
    params: &MachineParams,
    state: &MachineState,
    efd: f64,
    v_terminal: Complex64,
    p_mech: f64,
    omega_base: f64,
) -> MachineDerivs {
    let i = stator_current(params, state, v_terminal);
    let p_e = (emf_pp(state) * i.conj()).re;
    let idq = i * rotor(-state.delta);
    let (i_q, i_d) = (idq.re, idq.im);
    let p = params;
    MachineDerivs {
        delta: omega_base * (state.omega - 1.0),
        omega: swing_acceleration(p.h, p.d, p_mech, p_e, state.omega),
        eq_p: (efd - state.eq_p + (p.xd - p.xd_p) * i_d) / p.td0_p,
        ed_p: (-state.ed_p - (p.xq - p.xq_p) * i_q) / p.tq0_p,
        eq_pp: (-state.eq_pp + (p.xd_p - p.xd_pp) * i_d + state.eq_p) / p.td0_pp,
        ed_pp: (-state.ed_pp - (p.xq_p - p.xq_pp) * i_q + state.ed_p) / p.tq0_pp,
    }
}

/// Free-running condenser: no shaft load. Positive power absorbed from the
/// network accelerates the rotor.
pub fn condenser_derivs(
    params: &MachineParams,
    state: &MachineState,
    efd: f64,
    v_terminal: Complex64,
    omega_base: f64,
) -> Result<MachineDerivs> {
    if params.mode != MachineMode::Condenser {
        return Err(Error::NotACondenser);
    }
    Ok(machine_derivs(
        params, state, efd, v_terminal, 0.0, omega_base,
    ))
}

/// Initial symmetrical current magnitude for a bolted terminal fault, from
/// the subtransient emf behind the pre-fault operating point.
pub fn initial_fault_current(params: &MachineParams, v_pre: Complex64, i_pre: Complex64) -> f64 {
    let e_pp = v_pre + Complex64::new(params.ra, params.xd_pp) * i_pre;
    e_pp.norm() / params.xd_pp
}

/// Steady operating point of a machine delivering `s_gen` at terminal voltage `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub state: MachineState,
    pub efd: f64,
    pub p_mech: f64,
    pub current: Complex64,
}

/// Back-solves the rotor angle, emfs, field voltage and mechanical power from
/// terminal conditions.
pub fn equilibrium_state(
    params: &MachineParams,
    v: Complex64,
    s_gen: Complex64,
) -> Result<Equilibrium> {
    if v.norm() <= 0.0 {
        return Err(Error::Initialization(
            "machine terminal voltage is zero".into(),
        ));
    }
    let i = (s_gen / v).conj();
    let e_q_axis = v + Complex64::new(params.ra, params.xq) * i;
    let delta = e_q_axis.arg();
    let r = rotor(-delta);
    let vdq = v * r;
    let idq = i * r;
    let (v_q, v_d) = (vdq.re, vdq.im);
    let (i_q, i_d) = (idq.re, idq.im);
    let x_pp = params.x_pp();

    let eq_pp = v_q + params.ra * i_q - x_pp * i_d;
    let ed_pp = v_d + params.ra * i_d + x_pp * i_q;
    let ed_p = -(params.xq - params.xq_p) * i_q;
    let eq_p = eq_pp - (params.xd_p - params.xd_pp) * i_d;
    let efd = eq_p - (params.xd - params.xd_p) * i_d;

    let state = MachineState {
        delta,
        omega: 1.0,
        eq_p,
        ed_p,
        eq_pp,
        ed_pp,
    };
    let p_mech = electrical_power(params, &state, v).0;
    Ok(Equilibrium {
        state,
        efd,
        p_mech,
        current: i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::SystemBase;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const WB: f64 = 2.0 * std::f64::consts::PI * 60.0;

    fn gen() -> MachineParams {
        MachineParams::generic(200.0, 4.0, MachineMode::Generator)
    }

    fn condenser(h: f64) -> MachineParams {
        MachineParams::generic(14.85, h, MachineMode::Condenser)
    }

    #[test]
    fn equilibrium_has_zero_derivatives() {
        let p = gen();
        let v = Complex64::from_polar(1.025, 0.16);
        let eq = equilibrium_state(&p, v, Complex64::new(0.8, 0.3)).unwrap();
        let d = machine_derivs(&p, &eq.state, eq.efd, v, eq.p_mech, WB);
        assert!(d.max_abs() < 1e-12, "{d:?}");
        assert!(eq.state.eq_pp > 0.0 && eq.efd > 1.0);
        // over-excited generator: demagnetising d-axis current
        let idq = eq.current * rotor(-eq.state.delta);
        assert!(idq.im < 0.0);
    }

    #[test]
    fn swing_with_zero_damping() {
        // p_mech - p_e = 0.1, h = 4
        assert_abs_diff_eq!(
            swing_acceleration(4.0, 0.0, 0.9, 0.8, 1.0),
            0.0125,
            epsilon = 1e-15
        );
        let p = gen();
        let v = Complex64::from_polar(1.0, 0.1);
        let eq = equilibrium_state(&p, v, Complex64::new(0.8, 0.2)).unwrap();
        let d = machine_derivs(&p, &eq.state, eq.efd, v, eq.p_mech + 0.1, WB);
        assert_abs_diff_eq!(d.omega, 0.0125, epsilon = 1e-12);
    }

    #[test]
    fn subtransient_q_linear_term() {
        let p = gen();
        let v = Complex64::from_polar(1.0, 0.0);
        let eq = equilibrium_state(&p, v, Complex64::new(0.5, 0.1)).unwrap();
        let mut s = eq.state;
        s.eq_pp += 0.01;
        // hold i_d at its equilibrium value by moving the terminal voltage with the emf
        let v_shift = v + Complex64::new(0.01, 0.0) * rotor(s.delta);
        let d = machine_derivs(&p, &s, eq.efd, v_shift, eq.p_mech, WB);
        assert_abs_diff_eq!(d.eq_pp, -0.01 / p.td0_pp, epsilon = 1e-10);
    }

    #[test]
    fn condenser_free_running_steady_state() {
        let p = condenser(4.0);
        let v = Complex64::from_polar(1.04, -0.05);
        let eq = equilibrium_state(&p, v, Complex64::new(0.0, 0.3)).unwrap();
        assert!(eq.p_mech.abs() < 1e-12);
        let (pe, _) = electrical_power(&p, &eq.state, v);
        assert!(pe.abs() < 1e-8);
        let d = condenser_derivs(&p, &eq.state, eq.efd, v, WB).unwrap();
        assert!(d.omega.abs() < 1e-12 && d.max_abs() < 1e-9);
    }

    #[test]
    fn condenser_fault_deceleration_scales_with_inertia() {
        // Absorbed power collapses to -0.05 pu (machine generating 0.05 pu).
        let absorbed = -0.05;
        let a4 = swing_acceleration(4.0, 0.0, 0.0, -absorbed, 1.0);
        let a6 = swing_acceleration(6.0, 0.0, 0.0, -absorbed, 1.0);
        assert_abs_diff_eq!(a4, -0.00625, epsilon = 1e-15);
        assert_abs_diff_eq!(a6, -0.05 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a6 / a4, 4.0 / 6.0, epsilon = 1e-12);

        // Same through condenser_derivs with a terminal voltage that makes the
        // machine deliver 0.05 pu across the air gap.
        let p = MachineParams {
            ra: 0.0,
            ..condenser(4.0)
        };
        let state = MachineState {
            delta: 0.0,
            omega: 1.0,
            eq_p: 1.0,
            ed_p: 0.0,
            eq_pp: 1.0,
            ed_pp: 0.0,
        };
        let x = p.x_pp();
        // P = |E||V| sin(angle)/x with |E| = |V| = 1
        let ang = (0.05 * x).asin();
        let v = Complex64::from_polar(1.0, -ang);
        let d = condenser_derivs(&p, &state, 1.0, v, WB).unwrap();
        assert_abs_diff_eq!(d.omega, -0.00625, epsilon = 1e-12);
    }

    #[test]
    fn condenser_derivs_rejects_generator() {
        let p = gen();
        let s = MachineState {
            omega: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            condenser_derivs(&p, &s, 0.0, Complex64::new(1.0, 0.0), WB),
            Err(Error::NotACondenser)
        ));
    }

    #[test]
    fn electrical_power_cases() {
        let p = MachineParams {
            ra: 0.0,
            xd_pp: 0.25,
            xq_pp: 0.25,
            ..gen()
        };
        let state = MachineState {
            delta: 0.0,
            omega: 1.0,
            eq_p: 1.0,
            ed_p: 0.0,
            eq_pp: 1.0,
            ed_pp: 0.0,
        };
        // v equal to the emf phasor
        let (pe, qe) = electrical_power(&p, &state, Complex64::new(1.0, 0.0));
        assert_eq!((pe, qe), (0.0, 0.0));
        // classical transfer formula
        for &delta in &[0.1, 0.4, 1.0] {
            let (pe, _) = electrical_power(&p, &state, Complex64::from_polar(1.0, -delta));
            assert_abs_diff_eq!(pe, (1.0 / 0.25) * f64::sin(delta), epsilon = 1e-12);
        }
        // terminal short: purely reactive infeed
        let (pe, qe) = electrical_power(&p, &state, Complex64::default());
        assert_abs_diff_eq!(pe, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(qe, 1.0 / 0.25, epsilon = 1e-12);
    }

    #[test]
    fn norton_admittance_and_zero_emf() {
        let p = MachineParams { ra: 0.0, ..gen() };
        let s = MachineState {
            omega: 1.0,
            ..Default::default()
        };
        let (i, y) = norton_equivalent(&p, &s);
        assert_eq!(i, Complex64::default());
        assert_abs_diff_eq!(y.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.im, -1.0 / 0.22, epsilon = 1e-12);
        assert_abs_diff_eq!(y.im, -4.5455, epsilon = 1e-4);
    }

    #[test]
    fn norton_round_trip_through_single_bus() {
        // Machine Norton pair feeding a fixed load admittance: the resulting
        // terminal voltage reproduces electrical_power.
        let p = gen().on_system_base(&SystemBase::default());
        let state = MachineState {
            delta: 0.3,
            omega: 1.0,
            eq_p: 1.1,
            ed_p: 0.1,
            eq_pp: 1.05,
            ed_pp: 0.2,
        };
        let (i_n, y_n) = norton_equivalent(&p, &state);
        let y_load = Complex64::new(1.2, -0.4);
        let v = i_n / (y_n + y_load);
        let i_term = i_n - y_n * v;
        let s_airgap = (v + Complex64::new(p.ra, p.x_pp()) * i_term) * i_term.conj();
        let (pe, qe) = electrical_power(&p, &state, v);
        assert_abs_diff_eq!(pe, s_airgap.re, epsilon = 1e-12);
        assert_abs_diff_eq!(qe, s_airgap.im, epsilon = 1e-12);
        assert_abs_diff_eq!(
            (v * i_term.conj()).re,
            (v * y_load.conj() * v.conj()).re,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fault_current_estimates() {
        let unit = |x: f64| MachineParams {
            ra: 0.0,
            xd_pp: x,
            xq_pp: x,
            ..condenser(4.0)
        };
        let v = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        assert_abs_diff_eq!(
            initial_fault_current(&unit(0.22), v, zero),
            1.0 / 0.22,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            initial_fault_current(&unit(0.22), v, zero),
            4.545,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            initial_fault_current(&unit(0.295), v, zero),
            3.390,
            epsilon = 1e-3
        );
        assert!(
            initial_fault_current(&unit(0.295), v, zero)
                < initial_fault_current(&unit(0.22), v, zero)
        );
        assert_eq!(initial_fault_current(&unit(0.22), zero, zero), 0.0);
    }

    proptest! {
        #[test]
        fn equilibrium_is_a_fixed_point(
            vm in 0.9f64..1.1, va in -0.6f64..0.6, p in -0.2f64..1.0, q in -0.4f64..0.6,
            h in 1.0f64..8.0
        ) {
            let params = MachineParams::generic(200.0, h, MachineMode::Generator);
            let v = Complex64::from_polar(vm, va);
            let eq = equilibrium_state(&params, v, Complex64::new(p, q)).unwrap();
            let d = machine_derivs(&params, &eq.state, eq.efd, v, eq.p_mech, WB);
            prop_assert!(d.max_abs() < 1e-9);
            let i = stator_current(&params, &eq.state, v);
            prop_assert!((i - eq.current).norm() < 1e-12);
        }
    }
}
