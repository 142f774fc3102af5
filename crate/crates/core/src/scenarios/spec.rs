//! Scenario description: network, device placements, events and solver
//! configuration. Device quantities are on the device's own rating.

use crate::engine::{BreakerTarget, Event, EventKind, SimConfig};
use crate::error::{Error, Result};
use crate::gfl::GflParams;
use crate::machines::{ExciterParams, MachineMode, MachineParams};
use crate::netmodel::NetworkModel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Synchronous generator or condenser. Reactances and time constants default
/// to the generic machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachinePlacement {
    #[serde(default)]
    pub name: Option<String>,
    pub bus: usize,
    pub rated_mva: f64,
    pub h: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub ra: f64,
    #[serde(default = "g::xd")]
    pub xd: f64,
    #[serde(default = "g::xq")]
    pub xq: f64,
    #[serde(default = "g::xd_p")]
    pub xd_p: f64,
    #[serde(default = "g::xq_p")]
    pub xq_p: f64,
    #[serde(default = "g::xd_pp")]
    pub xd_pp: f64,
    #[serde(default = "g::xd_pp")]
    pub xq_pp: f64,
    #[serde(default = "g::xl")]
    pub xl: f64,
    #[serde(default = "g::td0_p")]
    pub td0_p: f64,
    #[serde(default = "g::tq0_p")]
    pub tq0_p: f64,
    #[serde(default = "g::td0_pp")]
    pub td0_pp: f64,
    #[serde(default = "g::tq0_pp")]
    pub tq0_pp: f64,
    #[serde(default)]
    pub exciter: ExciterParams,
    /// Active power dispatch, pu on the machine rating. Ignored at the slack.
    #[serde(default)]
    pub p_set: f64,
    /// Terminal voltage set point, pu.
    #[serde(default = "g::v_set")]
    pub v_set: f64,
}

mod g {
    use crate::machines::{MachineMode, MachineParams};
    fn m() -> MachineParams {
        MachineParams::generic(1.0, 1.0, MachineMode::Generator)
    }
    pub fn xd() -> f64 {
        m().xd
    }
    pub fn xq() -> f64 {
        m().xq
    }
    pub fn xd_p() -> f64 {
        m().xd_p
    }
    pub fn xq_p() -> f64 {
        m().xq_p
    }
    pub fn xd_pp() -> f64 {
        m().xd_pp
    }
    pub fn xl() -> f64 {
        m().xl
    }
    pub fn td0_p() -> f64 {
        m().td0_p
    }
    pub fn tq0_p() -> f64 {
        m().tq0_p
    }
    pub fn td0_pp() -> f64 {
        m().td0_pp
    }
    pub fn tq0_pp() -> f64 {
        m().tq0_pp
    }
    pub fn v_set() -> f64 {
        1.0
    }
}

impl MachinePlacement {
    pub fn generic(bus: usize, rated_mva: f64, h: f64) -> Self {
        let m = MachineParams::generic(rated_mva, h, MachineMode::Generator);
        Self {
            name: None,
            bus,
            rated_mva,
            h,
            d: m.d,
            ra: m.ra,
            xd: m.xd,
            xq: m.xq,
            xd_p: m.xd_p,
            xq_p: m.xq_p,
            xd_pp: m.xd_pp,
            xq_pp: m.xq_pp,
            xl: m.xl,
            td0_p: m.td0_p,
            tq0_p: m.tq0_p,
            td0_pp: m.td0_pp,
            tq0_pp: m.tq0_pp,
            exciter: ExciterParams::default(),
            p_set: 0.0,
            v_set: 1.0,
        }
    }

    pub fn machine(&self, mode: MachineMode) -> MachineParams {
        MachineParams {
            rated_mva: self.rated_mva,
            h: self.h,
            d: self.d,
            ra: self.ra,
            xd: self.xd,
            xq: self.xq,
            xd_p: self.xd_p,
            xq_p: self.xq_p,
            xd_pp: self.xd_pp,
            xq_pp: self.xq_pp,
            xl: self.xl,
            td0_p: self.td0_p,
            tq0_p: self.tq0_p,
            td0_pp: self.td0_pp,
            tq0_pp: self.tq0_pp,
            mode,
        }
    }

    /// Sets both subtransient reactances.
    pub fn with_x_pp(mut self, x: f64) -> Self {
        self.xd_pp = x;
        self.xq_pp = x;
        self
    }
}

/// Grid-following inverter. With `v_set` the inverter's reactive set point is
/// chosen at initialization so that its bus sits at `v_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GflPlacement {
    #[serde(default)]
    pub name: Option<String>,
    pub bus: usize,
    #[serde(default)]
    pub v_set: Option<f64>,
    pub rated_mva: f64,
    pub p_set: f64,
    #[serde(default)]
    pub q_set: f64,
    #[serde(default)]
    pub p_max: Option<f64>,
    #[serde(default = "d::m_p")]
    pub m_p: f64,
    #[serde(default = "d::m_q")]
    pub m_q: f64,
    #[serde(default = "d::one")]
    pub omega_n: f64,
    #[serde(default)]
    pub v_n: Option<f64>,
    #[serde(default = "d::kp")]
    pub kp_pll: f64,
    #[serde(default = "d::ki")]
    pub ki_pll: f64,
    #[serde(default = "d::i_max")]
    pub i_max: f64,
    #[serde(default = "d::t_i")]
    pub t_i: f64,
    #[serde(default = "d::f_lo")]
    pub f_trip_lo: f64,
    #[serde(default = "d::f_hi")]
    pub f_trip_hi: f64,
    #[serde(default = "d::v_trip")]
    pub v_trip_lo: f64,
    #[serde(default = "d::t_trip")]
    pub t_trip: f64,
    #[serde(default = "d::v_pll_hold")]
    pub v_pll_hold: f64,
}

mod d {
    use crate::gfl::GflParams;
    fn p() -> GflParams {
        GflParams::new(1.0, 0.0, 0.0)
    }
    pub fn m_p() -> f64 {
        p().m_p
    }
    pub fn m_q() -> f64 {
        p().m_q
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn kp() -> f64 {
        p().kp_pll
    }
    pub fn ki() -> f64 {
        p().ki_pll
    }
    pub fn i_max() -> f64 {
        p().i_max
    }
    pub fn t_i() -> f64 {
        p().t_i
    }
    pub fn f_lo() -> f64 {
        p().f_trip_lo
    }
    pub fn f_hi() -> f64 {
        p().f_trip_hi
    }
    pub fn v_trip() -> f64 {
        p().v_trip_lo
    }
    pub fn t_trip() -> f64 {
        p().t_trip
    }
    pub fn v_pll_hold() -> f64 {
        p().v_pll_hold
    }
}

impl GflPlacement {
    pub fn new(bus: usize, rated_mva: f64, p_set: f64) -> Self {
        let g = GflParams::new(rated_mva, p_set, 0.0);
        Self {
            name: None,
            bus,
            v_set: None,
            rated_mva,
            p_set,
            q_set: 0.0,
            p_max: None,
            m_p: g.m_p,
            m_q: g.m_q,
            omega_n: g.omega_n,
            v_n: g.v_n,
            kp_pll: g.kp_pll,
            ki_pll: g.ki_pll,
            i_max: g.i_max,
            t_i: g.t_i,
            f_trip_lo: g.f_trip_lo,
            f_trip_hi: g.f_trip_hi,
            v_trip_lo: g.v_trip_lo,
            t_trip: g.t_trip,
            v_pll_hold: g.v_pll_hold,
        }
    }

    pub fn params(&self) -> GflParams {
        GflParams {
            rated_mva: self.rated_mva,
            p_set: self.p_set,
            q_set: self.q_set,
            m_p: self.m_p,
            m_q: self.m_q,
            omega_n: self.omega_n,
            v_n: self.v_n,
            p_max: self.p_max,
            kp_pll: self.kp_pll,
            ki_pll: self.ki_pll,
            i_max: self.i_max,
            t_i: self.t_i,
            f_trip_lo: self.f_trip_lo,
            f_trip_hi: self.f_trip_hi,
            v_trip_lo: self.v_trip_lo,
            t_trip: self.t_trip,
            v_pll_hold: self.v_pll_hold,
        }
    }
}

/// Ideal voltage source behind a small reactance, used to start a system
/// that has no synchronous generator. It is always the slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxPlacement {
    #[serde(default)]
    pub name: Option<String>,
    pub bus: usize,
    #[serde(default = "aux_x")]
    pub x: f64,
    #[serde(default = "g::v_set")]
    pub v_set: f64,
}

fn aux_x() -> f64 {
    0.01
}

impl AuxPlacement {
    pub fn new(bus: usize, v_set: f64) -> Self {
        Self {
            name: None,
            bus,
            x: aux_x(),
            v_set,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    SyncGen(MachinePlacement),
    SyncCond(MachinePlacement),
    Gfl(GflPlacement),
    AuxSource(AuxPlacement),
}

impl Placement {
    pub fn bus(&self) -> usize {
        match self {
            Self::SyncGen(m) | Self::SyncCond(m) => m.bus,
            Self::Gfl(g) => g.bus,
            Self::AuxSource(a) => a.bus,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::SyncGen(_) => "sync_gen",
            Self::SyncCond(_) => "sync_cond",
            Self::Gfl(_) => "gfl",
            Self::AuxSource(_) => "aux_source",
        }
    }

    fn explicit_name(&self) -> Option<&str> {
        match self {
            Self::SyncGen(m) | Self::SyncCond(m) => m.name.as_deref(),
            Self::Gfl(g) => g.name.as_deref(),
            Self::AuxSource(a) => a.name.as_deref(),
        }
    }

    /// Display name: the explicit name, else kind and 1-based bus number.
    pub fn display_name(&self) -> String {
        self.explicit_name()
            .map(str::to_string)
            .unwrap_or_else(|| format!("{}{}", self.kind_name(), self.bus() + 1))
    }

    pub fn is_machine(&self) -> bool {
        matches!(self, Self::SyncGen(_) | Self::SyncCond(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub network: NetworkModel,
    pub placements: Vec<Placement>,
    #[serde(default)]
    pub events: Vec<Event>,
    pub config: SimConfig,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(format!("{}: {m}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::InvalidScenario("scenario name is empty".into()));
        }
        self.network.validate()?;
        self.config.validate()?;
        let base = self.config.base();
        let n_bus = self.network.n_bus();
        if self.placements.is_empty() {
            return bad("no devices placed".into());
        }
        let mut names = BTreeMap::new();
        let mut aux = 0;
        for (k, p) in self.placements.iter().enumerate() {
            if p.bus() >= n_bus {
                return bad(format!("placement {k} references missing bus {}", p.bus()));
            }
            if names.insert(p.display_name(), k).is_some() {
                return bad(format!("duplicate device name {}", p.display_name()));
            }
            match p {
                Placement::SyncGen(m) | Placement::SyncCond(m) => {
                    let mode = if matches!(p, Placement::SyncGen(_)) {
                        MachineMode::Generator
                    } else {
                        MachineMode::Condenser
                    };
                    m.machine(mode).validate()?;
                    m.exciter.validate()?;
                    if !(m.v_set > 0.5 && m.v_set < 1.5) {
                        return bad(format!("placement {k}: v_set out of range"));
                    }
                    if mode == MachineMode::Condenser && m.p_set != 0.0 {
                        return bad(format!("placement {k}: a condenser cannot have p_set"));
                    }
                }
                Placement::Gfl(g) => {
                    g.params().validate(base.freq_hz)?;
                    if g.v_set.is_some_and(|v| !(v > 0.5 && v < 1.5)) {
                        return bad(format!("placement {k}: v_set out of range"));
                    }
                }
                Placement::AuxSource(a) => {
                    aux += 1;
                    if !(a.x > 0.0 && a.v_set > 0.5 && a.v_set < 1.5) {
                        return bad(format!(
                            "placement {k}: aux source needs x > 0 and a sane v_set"
                        ));
                    }
                }
            }
        }
        if aux > 1 {
            return bad("at most one aux_source is allowed".into());
        }
        // Voltage set points at a shared bus must agree.
        let mut v_at: BTreeMap<usize, f64> = BTreeMap::new();
        for p in &self.placements {
            let v = match p {
                Placement::SyncGen(m) | Placement::SyncCond(m) => Some(m.v_set),
                Placement::Gfl(g) => g.v_set,
                Placement::AuxSource(a) => Some(a.v_set),
            };
            if let Some(v) = v {
                if let Some(prev) = v_at.insert(p.bus(), v) {
                    if prev != v {
                        return bad(format!("conflicting voltage set points at bus {}", p.bus()));
                    }
                }
            }
        }
        self.validate_events()
    }

    fn validate_events(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(format!("{}: {m}", self.name)));
        let mut faulted = std::collections::BTreeSet::new();
        let mut device_open = vec![false; self.placements.len()];
        let mut branch_open = vec![false; self.network.branches.len()];
        let mut last = 0.0;
        for (k, e) in self.events.iter().enumerate() {
            if !(e.time >= 0.0 && e.time.is_finite()) {
                return bad(format!("event {k} has an invalid time"));
            }
            if e.time < last {
                return bad(format!("event {k} is out of order"));
            }
            last = e.time;
            match &e.kind {
                EventKind::ApplyFault { bus, admittance } => {
                    if *bus >= self.network.n_bus() {
                        return bad(format!("event {k}: fault at missing bus {bus}"));
                    }
                    if !(admittance.re.is_finite() && admittance.im.is_finite())
                        || admittance.norm() == 0.0
                    {
                        return bad(format!(
                            "event {k}: fault admittance must be finite and nonzero"
                        ));
                    }
                    if !faulted.insert(*bus) {
                        return bad(format!("event {k}: bus {bus} is already faulted"));
                    }
                }
                EventKind::ClearFault { bus } => {
                    if !faulted.remove(bus) {
                        return bad(format!(
                            "event {k}: clear_fault without a matching apply_fault"
                        ));
                    }
                }
                EventKind::OpenBreaker { target } | EventKind::CloseBreaker { target } => {
                    let open = matches!(e.kind, EventKind::OpenBreaker { .. });
                    let slot = match *target {
                        BreakerTarget::Device(i) => device_open.get_mut(i),
                        BreakerTarget::Branch(i) => branch_open.get_mut(i),
                    };
                    let Some(slot) = slot else {
                        return bad(format!(
                            "event {k}: breaker target {target:?} does not exist"
                        ));
                    };
                    if *slot == open {
                        return bad(format!(
                            "event {k}: breaker {target:?} is already in that state"
                        ));
                    }
                    *slot = open;
                }
            }
        }
        Ok(())
    }

    /// Time of the first and last event.
    pub fn event_span(&self) -> Option<(f64, f64)> {
        let first = self.events.first()?.time;
        let last = self.events.last()?.time;
        Some((first, last))
    }
}
