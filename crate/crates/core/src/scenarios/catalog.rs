//! Named experiment cases on the 9-bus system.
//!
//! Grid-strength cases ("GFL13"): inverters at buses 1 and 3, a synchronous
//! generator at bus 2, every unit rated 200 MVA, and a bolted fault at bus 6
//! cleared after five cycles. Condensers are paired with the inverter at
//! bus 1 (and bus 3 for the two-condenser cases).
//!
//! Grid-forming cases ("GF"): inverters at all three generator buses with an
//! auxiliary source at bus 2 whose breaker opens at `t = 1 s`.

use super::spec::{AuxPlacement, GflPlacement, MachinePlacement, Placement, ScenarioSpec};
use crate::engine::{BreakerTarget, Event, EventKind, SimConfig, BOLTED_FAULT};
use crate::netmodel::wscc9::{self, bus, GEN_VOLTAGE};
use crate::netmodel::NetworkModel;
use num_complex::Complex64;

pub const UNIT_MVA: f64 = 200.0;
pub const FAULT_TIME: f64 = 1.0;
/// Five cycles at 60 Hz, rounded as in the reference study.
pub const FAULT_DURATION: f64 = 0.083;
pub const FAULT_BUS: usize = bus(6);
/// Simulated time after the last event.
pub const POST_EVENT_HORIZON: f64 = 20.0;

/// Inverter dispatch at buses 1 and 3 in the grid-strength cases, pu on the
/// system base.
pub const GFL13_P: [f64; 2] = [0.72, 0.85];
/// Loading of the grid-strength cases relative to the standard 9-bus data.
/// Loads and inverter dispatch are both scaled; the generator at bus 2 picks
/// up the rest.
pub const GFL13_LOAD_SCALE: f64 = 0.85;
/// Reactive droop of the grid-strength inverters, pu on the device base.
pub const GFL13_M_Q: f64 = 0.75;
/// Inverter dispatch at buses 1, 2, 3 in the grid-forming cases, pu on the
/// system base; the auxiliary source supplies the rest.
pub const GF_P: [f64; 3] = [0.60, 1.40, 0.80];
pub const GF_BREAKER_TIME: f64 = 1.0;
pub const GF_HORIZON: f64 = 6.0;

/// One condenser: bus number (1-based), rating in MVA, inertia in s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condenser {
    pub bus_number: usize,
    pub s_mva: f64,
    pub h: f64,
    pub x_pp: Option<f64>,
}

impl Condenser {
    pub fn new(bus_number: usize, s_mva: f64, h: f64) -> Self {
        Self {
            bus_number,
            s_mva,
            h,
            x_pp: None,
        }
    }

    fn placement(&self, index: usize) -> Placement {
        let mut m = MachinePlacement::generic(bus(self.bus_number), self.s_mva, self.h);
        m.name = Some(format!("synco{}_{}", index + 1, self.bus_number));
        m.v_set = GEN_VOLTAGE[self.bus_number - 1];
        if let Some(x) = self.x_pp {
            m = m.with_x_pp(x);
        }
        Placement::SyncCond(m)
    }
}

fn gfl(bus_number: usize, p_sys: f64) -> GflPlacement {
    let mut g = GflPlacement::new(bus(bus_number), UNIT_MVA, p_sys * 100.0 / UNIT_MVA);
    g.name = Some(format!("gfl{bus_number}"));
    g.v_set = Some(GEN_VOLTAGE[bus_number - 1]);
    g
}

fn config(t_end: f64) -> SimConfig {
    SimConfig {
        t_end,
        ..SimConfig::default()
    }
}

fn scaled_loads(mut net: NetworkModel, factor: f64) -> NetworkModel {
    for b in &mut net.buses {
        b.load_p *= factor;
        b.load_q *= factor;
    }
    net
}

/// Grid-strength case: placements are `[gfl1, gfl3, gen2, condensers...]`.
pub fn gfl13(name: &str, gen_h: f64, condensers: &[Condenser]) -> ScenarioSpec {
    let mut gen = MachinePlacement::generic(bus(2), UNIT_MVA, gen_h);
    gen.name = Some("gen2".into());
    gen.v_set = GEN_VOLTAGE[1];
    let inverter = |bus_number: usize, p: f64| {
        let mut g = gfl(bus_number, p * GFL13_LOAD_SCALE);
        g.m_q = GFL13_M_Q;
        Placement::Gfl(g)
    };
    let mut placements = vec![
        inverter(1, GFL13_P[0]),
        inverter(3, GFL13_P[1]),
        Placement::SyncGen(gen),
    ];
    placements.extend(condensers.iter().enumerate().map(|(k, c)| c.placement(k)));
    ScenarioSpec {
        name: name.to_string(),
        description: String::new(),
        network: scaled_loads(wscc9::network(), GFL13_LOAD_SCALE),
        placements,
        events: vec![
            Event::new(
                FAULT_TIME,
                EventKind::ApplyFault {
                    bus: FAULT_BUS,
                    admittance: Complex64::new(BOLTED_FAULT, 0.0),
                },
            ),
            Event::new(
                FAULT_TIME + FAULT_DURATION,
                EventKind::ClearFault { bus: FAULT_BUS },
            ),
        ],
        config: config(FAULT_TIME + FAULT_DURATION + POST_EVENT_HORIZON),
    }
}

/// Grid-forming case: placements are `[gfl1, gfl2, gfl3, aux2, condensers...]`.
pub fn grid_forming(name: &str, condensers: &[Condenser]) -> ScenarioSpec {
    let mut placements = Vec::new();
    for (k, &p) in GF_P.iter().enumerate() {
        let mut g = gfl(k + 1, p);
        // Inverters run at their available power: no upward reserve.
        g.p_max = Some(g.p_set);
        placements.push(Placement::Gfl(g));
    }
    let mut aux = AuxPlacement::new(bus(2), GEN_VOLTAGE[1]);
    aux.name = Some("aux2".into());
    placements.push(Placement::AuxSource(aux));
    let aux_index = placements.len() - 1;
    placements.extend(condensers.iter().enumerate().map(|(k, c)| c.placement(k)));
    ScenarioSpec {
        name: name.to_string(),
        description: String::new(),
        network: wscc9::network(),
        placements,
        events: vec![Event::new(
            GF_BREAKER_TIME,
            EventKind::OpenBreaker {
                target: BreakerTarget::Device(aux_index),
            },
        )],
        // The loss of synchronism unfolds within a few milliseconds.
        config: SimConfig {
            output_decimation: 1,
            ..config(GF_BREAKER_TIME + GF_HORIZON)
        },
    }
}

/// Index of the device whose frequency the case is judged on: the first
/// synchronous generator, else the unit at bus 3, else the first device.
///
/// A generator's rotor speed is a physical frequency; a PLL reading carries
/// spikes from every network phase jump.
pub fn monitored_device(spec: &ScenarioSpec) -> usize {
    let placements = &spec.placements;
    placements
        .iter()
        .position(|p| matches!(p, Placement::SyncGen(_)))
        .or_else(|| placements.iter().position(|p| p.bus() == bus(3)))
        .unwrap_or(0)
}

fn described(mut s: ScenarioSpec, d: &str) -> ScenarioSpec {
    s.description = d.to_string();
    s
}

pub const SINGLE_RATINGS: [f64; 2] = [14.85, 24.75];
pub const X_PP_SWEEP: [f64; 3] = [0.150, 0.220, 0.295];
/// Two-condenser rating pairs (bus 1, bus 3) with a fixed total, from the
/// closest match to the largest mismatch.
pub const DUAL_REDISTRIBUTION: [(f64, f64); 4] =
    [(12.36, 10.35), (14.36, 8.35), (16.36, 6.35), (18.36, 4.35)];

pub fn case_catalog() -> Vec<ScenarioSpec> {
    let c = Condenser::new;
    let mut cases = vec![
        described(
            grid_forming("GF-noSynCo", &[]),
            "all-inverter system, auxiliary source disconnected",
        ),
        described(
            grid_forming("GF-synco1", &[c(1, 14.85, 4.0)]),
            "all-inverter system with one condenser at bus 1",
        ),
        described(
            grid_forming(
                "GF-synco3",
                &[c(1, 14.85, 4.0), c(2, 14.58, 4.0), c(3, 20.70, 4.0)],
            ),
            "all-inverter system with a condenser at every inverter",
        ),
        described(gfl13("GFL13-noSynCo", 4.0, &[]), "base grid-strength case"),
        gfl13("GFL13-synco-S14.85-H4", 4.0, &[c(1, 14.85, 4.0)]),
        gfl13("GFL13-synco-S14.85-H6", 4.0, &[c(1, 14.85, 6.0)]),
        gfl13("GFL13-synco-S24.75-H4", 4.0, &[c(1, 24.75, 4.0)]),
    ];
    for x in X_PP_SWEEP {
        cases.push(described(
            gfl13(
                &format!("GFL13-synco-S24.75-H4-Xpp{x:.3}"),
                4.0,
                &[Condenser {
                    x_pp: Some(x),
                    ..c(1, 24.75, 4.0)
                }],
            ),
            "condenser subtransient reactance sweep",
        ));
    }
    cases.push(gfl13("GFL13-genH2-noSynCo", 2.0, &[]));
    for h in [4.0, 6.0] {
        cases.push(gfl13(
            &format!("GFL13-genH2-synco-S24.75-H{h}"),
            2.0,
            &[c(1, 24.75, h)],
        ));
    }
    for (s1, s3) in DUAL_REDISTRIBUTION {
        cases.push(gfl13(
            &format!("GFL13-dual-S{s1:.2}-S{s3:.2}-H4"),
            4.0,
            &[c(1, s1, 4.0), c(3, s3, 4.0)],
        ));
    }
    cases.push(gfl13(
        "GFL13-genH2-dual-S12.36-S10.35-H4",
        2.0,
        &[c(1, 12.36, 4.0), c(3, 10.35, 4.0)],
    ));
    cases.push(gfl13(
        "GFL13-genH2-dual-S12.36-S10.35-H6",
        2.0,
        &[c(1, 12.36, 6.0), c(3, 10.35, 6.0)],
    ));
    cases.push(gfl13(
        "GFL13-genH2-dual-S24.75-S20.70-H6",
        2.0,
        &[c(1, 24.75, 6.0), c(3, 20.70, 6.0)],
    ));
    cases.push(described(
        gfl13(
            "GFL13-genH2-dual-large-lowH",
            2.0,
            &[c(1, 13.59, 4.0), c(3, 10.35, 6.0)],
        ),
        "large condenser with low inertia, small condenser with high inertia",
    ));
    cases.push(described(
        gfl13(
            "GFL13-genH2-dual-large-highH",
            2.0,
            &[c(1, 13.59, 6.0), c(3, 10.35, 4.0)],
        ),
        "large condenser with high inertia, small condenser with low inertia",
    ));
    cases
}

/// Looks up a catalog case by name.
pub fn catalog_case(name: &str) -> Option<ScenarioSpec> {
    case_catalog().into_iter().find(|s| s.name == name)
}
