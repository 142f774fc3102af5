//! Runtime assembly of a scenario: device models on the system base, the
//! flat state vector, and initialization from a power flow.

use super::SimConfig;
use crate::error::{Error, Result};
use crate::gfl::{self, GflParams, GflState};
use crate::machines::{
    equilibrium_state, exciter_derivs, machine_derivs, norton_equivalent, stator_current,
    ExciterST1A, MachineMode, MachineParams, MachineState,
};
use crate::netmodel::{
    build_ybus, solve_power_flow, AdmittanceMatrix, BusRole, Dispatch, GenTarget, Load,
    NetworkModel, NetworkSolver, PowerFlowOptions,
};
use crate::scenarios::{Placement, ScenarioSpec};
use crate::units::SystemBase;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest initial loading of a machine, as a fraction of its rating.
const MACHINE_CAPABILITY: f64 = 1.2;
/// Largest initial derivative accepted as an equilibrium.
const EQUILIBRIUM_TOL: f64 = 1e-9;
const INIT_NETWORK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKindTag {
    SyncGen,
    SyncCond,
    Gfl,
    AuxSource,
}

#[derive(Debug, Clone)]
pub(crate) enum Model {
    Machine {
        /// On the system base.
        params: MachineParams,
        exciter: ExciterST1A,
        p_mech: f64,
        y: Complex64,
    },
    Gfl {
        params: GflParams,
        /// Device-to-system power base ratio.
        scale: f64,
    },
    Aux {
        e: Complex64,
        y: Complex64,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Device {
    pub name: String,
    pub kind: DeviceKindTag,
    pub bus: usize,
    pub offset: usize,
    pub model: Model,
}

impl Device {
    fn n_states(&self) -> usize {
        match self.model {
            Model::Machine { .. } => MachineState::LEN + 1,
            Model::Gfl { .. } => GflState::LEN,
            Model::Aux { .. } => 0,
        }
    }
}

/// Discrete per-device status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Discrete {
    /// Breaker closed.
    pub connected: bool,
    /// Inverter not tripped.
    pub online: bool,
    pub trip_timer: f64,
    pub omega_pll: f64,
}

/// Complete simulation state: continuous vector plus discrete status.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub x: Vec<f64>,
    pub(crate) discrete: Vec<Discrete>,
    pub branch_closed: Vec<bool>,
    pub faults: BTreeMap<usize, Complex64>,
}

/// Immutable part of an initialized scenario.
#[derive(Debug, Clone)]
pub struct System {
    pub base: SystemBase,
    pub config: SimConfig,
    pub network: NetworkModel,
    pub(crate) loads: Vec<Load>,
    pub(crate) devices: Vec<Device>,
    pub n_states: usize,
    /// Bus voltages at the initial equilibrium.
    pub v0: Vec<Complex64>,
}

pub(crate) struct Outputs {
    pub current: Complex64,
    pub freq_pu: f64,
    pub angle: f64,
    pub online: bool,
}

impl System {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn device_names(&self) -> Vec<String> {
        self.devices.iter().map(|d| d.name.clone()).collect()
    }

    /// Index of device `k`'s first continuous state in `SystemState::x`.
    /// Machines store `MachineState::to_array` order followed by the exciter.
    pub fn state_offset(&self, k: usize) -> usize {
        self.devices[k].offset
    }

    pub(crate) fn gfl_state(&self, dev: &Device, x: &[f64], disc: &Discrete) -> GflState {
        let s = &x[dev.offset..dev.offset + GflState::LEN];
        GflState {
            theta_pll: s[0],
            pll_integ: s[1],
            omega_pll: disc.omega_pll,
            id_filt: s[2],
            iq_filt: s[3],
            online: disc.online,
            trip_timer: disc.trip_timer,
        }
    }

    fn machine_state(dev: &Device, x: &[f64]) -> (MachineState, f64) {
        let s = &x[dev.offset..dev.offset + MachineState::LEN + 1];
        (
            MachineState::from_slice(&s[..MachineState::LEN]),
            s[MachineState::LEN],
        )
    }

    /// Network admittance without device admittances: topology plus faults.
    pub(crate) fn network_admittance(&self, st: &SystemState) -> Result<AdmittanceMatrix> {
        let mut net = self.network.clone();
        net.branches = net
            .branches
            .iter()
            .zip(&st.branch_closed)
            .filter(|(_, &c)| c)
            .map(|(b, _)| b.clone())
            .collect();
        let mut y = build_ybus(&net)?;
        for (&bus, &yf) in &st.faults {
            y = crate::netmodel::apply_fault(&y, bus, yf)?;
        }
        Ok(y)
    }

    /// Network admittance augmented with the Norton admittances of connected
    /// voltage-behind-reactance devices.
    pub(crate) fn augmented_admittance(&self, st: &SystemState) -> Result<AdmittanceMatrix> {
        let mut y = self.network_admittance(st)?;
        for (dev, disc) in self.devices.iter().zip(&st.discrete) {
            if !disc.connected {
                continue;
            }
            match dev.model {
                Model::Machine { y: yd, .. } | Model::Aux { y: yd, .. } => {
                    y.add(dev.bus, dev.bus, yd)
                }
                Model::Gfl { .. } => {}
            }
        }
        Ok(y)
    }

    pub(crate) fn solver(
        &self,
        st: &SystemState,
        tol: f64,
    ) -> Result<(NetworkSolver, DMatrix<Complex64>)> {
        let y_aug = self.augmented_admittance(st)?;
        let y_net = self.network_admittance(st)?.to_dense();
        Ok((NetworkSolver::new(&y_aug, &self.loads, tol), y_net))
    }

    /// Norton source currents injected at every bus.
    pub(crate) fn sources(&self, x: &[f64], st: &SystemState) -> Vec<Complex64> {
        let mut i = vec![Complex64::default(); self.network.n_bus()];
        for (dev, disc) in self.devices.iter().zip(&st.discrete) {
            if !disc.connected {
                continue;
            }
            match &dev.model {
                Model::Machine { params, .. } => {
                    let (ms, _) = Self::machine_state(dev, x);
                    i[dev.bus] += norton_equivalent(params, &ms).0;
                }
                Model::Gfl { params, scale } => {
                    if disc.online {
                        let g = self.gfl_state(dev, x, disc);
                        i[dev.bus] += gfl::injected_current(params, &g) * scale;
                    }
                }
                Model::Aux { e, y } => i[dev.bus] += e * y,
            }
        }
        i
    }

    /// State derivatives at bus voltages `v`; also refreshes each inverter's
    /// PLL frequency in `omega_out`.
    pub(crate) fn derivs(
        &self,
        x: &[f64],
        st: &SystemState,
        v: &[Complex64],
        dx: &mut [f64],
        omega_out: &mut [f64],
    ) {
        let wb = self.base.omega();
        for (k, (dev, disc)) in self.devices.iter().zip(&st.discrete).enumerate() {
            let o = dev.offset;
            match &dev.model {
                Model::Machine {
                    params,
                    exciter,
                    p_mech,
                    ..
                } => {
                    let (ms, v_meas) = Self::machine_state(dev, x);
                    let vt = if disc.connected {
                        v[dev.bus]
                    } else {
                        // open circuit: no stator current
                        Complex64::new(ms.eq_pp, ms.ed_pp) * Complex64::from_polar(1.0, ms.delta)
                    };
                    let exc = ExciterST1A { v_meas, ..*exciter };
                    let (dv, efd) = exciter_derivs(&exc, vt.norm());
                    let d = machine_derivs(params, &ms, efd, vt, *p_mech, wb);
                    dx[o..o + MachineState::LEN].copy_from_slice(&d.to_array());
                    dx[o + MachineState::LEN] = dv;
                    omega_out[k] = ms.omega;
                }
                Model::Gfl { params, .. } => {
                    let g = self.gfl_state(dev, x, disc);
                    let (d, w) = gfl::gfl_derivs(params, &g, v[dev.bus], wb);
                    dx[o..o + GflState::LEN].copy_from_slice(&d);
                    omega_out[k] = w;
                }
                Model::Aux { .. } => omega_out[k] = 1.0,
            }
        }
    }

    /// Terminal current (system base), frequency, angle and status of a device.
    pub(crate) fn outputs(
        &self,
        k: usize,
        x: &[f64],
        st: &SystemState,
        v: &[Complex64],
    ) -> Outputs {
        let dev = &self.devices[k];
        let disc = &st.discrete[k];
        match &dev.model {
            Model::Machine { params, .. } => {
                let (ms, _) = Self::machine_state(dev, x);
                let current = if disc.connected {
                    stator_current(params, &ms, v[dev.bus])
                } else {
                    Complex64::default()
                };
                Outputs {
                    current,
                    freq_pu: ms.omega,
                    angle: ms.delta,
                    online: disc.connected,
                }
            }
            Model::Gfl { params, scale } => {
                let g = self.gfl_state(dev, x, disc);
                Outputs {
                    current: gfl::injected_current(params, &g) * scale,
                    freq_pu: disc.omega_pll,
                    angle: g.theta_pll,
                    online: disc.online,
                }
            }
            Model::Aux { e, y } => {
                let current = if disc.connected {
                    (e - v[dev.bus]) * y
                } else {
                    Complex64::default()
                };
                Outputs {
                    current,
                    freq_pu: 1.0,
                    angle: e.arg(),
                    online: disc.connected,
                }
            }
        }
    }

    /// True when nothing but synchronous condensers remains to hold the system.
    pub(crate) fn all_sources_offline(&self, st: &SystemState) -> bool {
        !self
            .devices
            .iter()
            .zip(&st.discrete)
            .any(|(dev, disc)| match dev.kind {
                DeviceKindTag::SyncGen | DeviceKindTag::AuxSource => disc.connected,
                DeviceKindTag::Gfl => disc.online && disc.connected,
                DeviceKindTag::SyncCond => false,
            })
    }

    /// Advances inverter trip timers after an accepted step of length `h`.
    /// Returns true if any inverter tripped.
    pub(crate) fn update_trips(&self, st: &mut SystemState, v: &[Complex64], h: f64) -> bool {
        let mut tripped = false;
        let x = &st.x.clone();
        for (k, dev) in self.devices.iter().enumerate() {
            if let Model::Gfl { params, .. } = &dev.model {
                let disc = st.discrete[k];
                let mut g = self.gfl_state(dev, x, &disc);
                if !g.online {
                    continue;
                }
                g.omega_pll = gfl::pll_derivs(params, &g, v[dev.bus], self.base.omega()).omega_pll;
                let still =
                    gfl::trip_check(params, &mut g, v[dev.bus].norm(), h, self.base.freq_hz);
                st.discrete[k].omega_pll = g.omega_pll;
                st.discrete[k].trip_timer = g.trip_timer;
                st.discrete[k].online = still;
                tripped |= !still;
            }
        }
        tripped
    }
}

/// Builds the runtime system and its equilibrium state at t = 0.
pub fn initialize(spec: &ScenarioSpec) -> Result<(System, SystemState)> {
    spec.validate()?;
    let base = spec.config.base();
    let n_bus = spec.network.n_bus();
    let placements = &spec.placements;

    let slack_dev = placements
        .iter()
        .position(|p| matches!(p, Placement::AuxSource(_)))
        .or_else(|| {
            placements
                .iter()
                .position(|p| matches!(p, Placement::SyncGen(_)))
        })
        .ok_or_else(|| {
            Error::Initialization("no aux source or synchronous generator to act as slack".into())
        })?;
    let slack_bus = placements[slack_dev].bus();

    let v_target = |p: &Placement| match p {
        Placement::SyncGen(m) | Placement::SyncCond(m) => Some(m.v_set),
        Placement::Gfl(g) => g.v_set,
        Placement::AuxSource(a) => Some(a.v_set),
    };

    let mut net = spec.network.clone();
    for bus in &mut net.buses {
        bus.init_role = BusRole::Pq;
    }
    for p in placements {
        if v_target(p).is_some() {
            net.buses[p.bus()].init_role = BusRole::Pv;
        }
    }
    net.buses[slack_bus].init_role = BusRole::Slack;
    let ybus = build_ybus(&net)?;

    // Condensers with armature resistance absorb their copper losses; iterate
    // the dispatch until those losses are consistent.
    let mut cond_p = vec![0.0; placements.len()];
    let mut alloc = Vec::new();
    let mut pf = None;
    for _ in 0..20 {
        let mut targets = Vec::new();
        for (k, p) in placements.iter().enumerate() {
            let (pp, qq) = match p {
                Placement::SyncGen(m) => (base.power_to_system(m.p_set, m.rated_mva), 0.0),
                Placement::SyncCond(_) => (cond_p[k], 0.0),
                Placement::Gfl(g) => (
                    base.power_to_system(g.p_set, g.rated_mva),
                    if g.v_set.is_some() {
                        0.0
                    } else {
                        base.power_to_system(g.q_set, g.rated_mva)
                    },
                ),
                Placement::AuxSource(_) => (0.0, 0.0),
            };
            let pp = if k == slack_dev { 0.0 } else { pp };
            targets.push(GenTarget {
                bus: p.bus(),
                p: pp,
                q: qq,
                v: v_target(p),
            });
        }
        let sol = solve_power_flow(
            &net,
            &ybus,
            &Dispatch {
                targets: targets.clone(),
            },
            &PowerFlowOptions {
                tolerance: 1e-11,
                max_iterations: 30,
            },
        )
        .map_err(|e| Error::Initialization(format!("power flow failed: {e}")))?;
        alloc = allocate(placements, &targets, &sol, slack_dev, n_bus);
        let v = sol.voltages();
        let mut changed = false;
        for (k, p) in placements.iter().enumerate() {
            if let Placement::SyncCond(m) = p {
                if m.ra > 0.0 {
                    let ra = base.impedance_to_system(m.ra, m.rated_mva);
                    let i = (alloc[k] / v[p.bus()]).conj();
                    let want = -ra * i.norm_sqr();
                    changed |= (want - cond_p[k]).abs() > 1e-14;
                    cond_p[k] = want;
                }
            }
        }
        pf = Some(sol);
        if !changed {
            break;
        }
    }
    let pf = pf.expect("power flow ran");
    let v_pf = pf.voltages();

    let mut devices = Vec::new();
    let mut x = Vec::new();
    let mut discrete = Vec::new();
    for (k, p) in placements.iter().enumerate() {
        let bus = p.bus();
        let v = v_pf[bus];
        let s = alloc[k];
        let name = p.display_name();
        let offset = x.len();
        let disc = Discrete {
            connected: true,
            online: true,
            trip_timer: 0.0,
            omega_pll: 1.0,
        };
        let (kind, model) = match p {
            Placement::SyncGen(m) | Placement::SyncCond(m) => {
                let (mode, kind) = if matches!(p, Placement::SyncGen(_)) {
                    (MachineMode::Generator, DeviceKindTag::SyncGen)
                } else {
                    (MachineMode::Condenser, DeviceKindTag::SyncCond)
                };
                let loading = s.norm() * base.mva / m.rated_mva;
                if loading > MACHINE_CAPABILITY {
                    return Err(Error::Initialization(format!(
                        "{name}: dispatch {loading:.3} pu exceeds machine capability {MACHINE_CAPABILITY}"
                    )));
                }
                let params = m.machine(mode).on_system_base(&base);
                let eq = equilibrium_state(&params, v, s)?;
                let exciter = ExciterST1A::at_equilibrium(m.exciter, v.norm(), eq.efd)
                    .map_err(|e| Error::Initialization(format!("{name}: {e}")))?;
                let p_mech = if mode == MachineMode::Condenser {
                    0.0
                } else {
                    eq.p_mech
                };
                let (_, y) = norton_equivalent(&params, &eq.state);
                x.extend_from_slice(&eq.state.to_array());
                x.push(v.norm());
                (
                    kind,
                    Model::Machine {
                        params,
                        exciter,
                        p_mech,
                        y,
                    },
                )
            }
            Placement::Gfl(g) => {
                let mut params = g.params();
                params.p_set = base.power_to_device(s.re, g.rated_mva);
                params.q_set = base.power_to_device(s.im, g.rated_mva);
                let (state, resolved) = gfl::initial_state(&params, v)
                    .map_err(|e| Error::Initialization(format!("{name}: {e}")))?;
                x.extend_from_slice(&state.continuous());
                let scale = g.rated_mva / base.mva;
                (
                    DeviceKindTag::Gfl,
                    Model::Gfl {
                        params: resolved,
                        scale,
                    },
                )
            }
            Placement::AuxSource(a) => {
                let y = Complex64::new(0.0, a.x).inv();
                let i = (s / v).conj();
                let e = v + i / y;
                (DeviceKindTag::AuxSource, Model::Aux { e, y })
            }
        };
        devices.push(Device {
            name,
            kind,
            bus,
            offset,
            model,
        });
        discrete.push(disc);
    }

    let system = System {
        base,
        config: spec.config,
        network: spec.network.clone(),
        loads: spec.network.loads(),
        devices,
        n_states: x.len(),
        v0: Vec::new(),
    };
    debug_assert_eq!(
        system.n_states,
        system.devices.iter().map(Device::n_states).sum::<usize>()
    );
    let state = SystemState {
        x,
        discrete,
        branch_closed: vec![true; spec.network.branches.len()],
        faults: BTreeMap::new(),
    };

    let (solver, _) = system.solver(&state, INIT_NETWORK_TOL)?;
    let v = solver
        .solve(&system.sources(&state.x, &state), &v_pf)
        .map_err(|e| Error::Initialization(format!("initial network solve failed: {e}")))?;
    let mut dx = vec![0.0; system.n_states];
    let mut w = vec![0.0; system.n_devices()];
    system.derivs(&state.x, &state, &v, &mut dx, &mut w);
    let residuals: Vec<(String, f64)> = system
        .devices
        .iter()
        .map(|d| {
            let r = dx[d.offset..d.offset + d.n_states()]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            (d.name.clone(), r)
        })
        .collect();
    if residuals.iter().any(|(_, r)| !(*r < EQUILIBRIUM_TOL)) {
        return Err(Error::EquilibriumResidual(residuals));
    }
    let system = System { v0: v, ..system };
    Ok((system, state))
}

/// Splits each bus's solved generation among the devices placed there.
fn allocate(
    placements: &[Placement],
    targets: &[GenTarget],
    sol: &crate::netmodel::PowerFlowSolution,
    slack_dev: usize,
    n_bus: usize,
) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = targets.iter().map(|t| Complex64::new(t.p, t.q)).collect();
    for bus in 0..n_bus {
        let here: Vec<usize> = (0..placements.len())
            .filter(|&k| placements[k].bus() == bus)
            .collect();
        if here.is_empty() {
            continue;
        }
        let s_bus = sol.generation(bus).unwrap_or_default();
        let fixed_p: f64 = here
            .iter()
            .filter(|&&k| k != slack_dev)
            .map(|&k| out[k].re)
            .sum();
        if here.contains(&slack_dev) {
            out[slack_dev].re = s_bus.re - fixed_p;
        }
        let regulating: Vec<usize> = here
            .iter()
            .copied()
            .filter(|&k| targets[k].v.is_some())
            .collect();
        if regulating.is_empty() {
            continue;
        }
        let fixed_q: f64 = here
            .iter()
            .filter(|k| !regulating.contains(k))
            .map(|&k| out[k].im)
            .sum();
        let q_rem = s_bus.im - fixed_q;
        if let Some(&aux) = regulating
            .iter()
            .find(|&&k| matches!(placements[k], Placement::AuxSource(_)))
        {
            for &k in &regulating {
                out[k].im = if k == aux { q_rem } else { 0.0 };
            }
            continue;
        }
        let rating = |k: usize| match &placements[k] {
            Placement::SyncGen(m) | Placement::SyncCond(m) => m.rated_mva,
            Placement::Gfl(g) => g.rated_mva,
            Placement::AuxSource(_) => 0.0,
        };
        let total: f64 = regulating.iter().map(|&k| rating(k)).sum();
        for &k in &regulating {
            out[k].im = q_rem * rating(k) / total;
        }
    }
    out
}
