//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rmsdyn_core::engine::{BreakerTarget, Event, EventKind, SimConfig};
use rmsdyn_core::netmodel::{Bus, BusRole, NetworkModel};
use rmsdyn_core::scenarios::{GflPlacement, MachinePlacement, Placement, ScenarioSpec};

pub const STEP_TIME: f64 = 0.5;

/// One bus holding a machine, a constant-power load and an inverter whose
/// breaker opens at `STEP_TIME`. With a lossless machine and loads above the
/// constant-impedance region, the machine's electrical power steps by
/// exactly the inverter's output: a constant accelerating power of `-dp`.
pub fn isolated_machine(h: f64, dp: f64, t_end: f64) -> ScenarioSpec {
    let network = NetworkModel {
        buses: vec![Bus {
            id: 0,
            name: "bus1".into(),
            base_kv: 20.0,
            load_p: 1.0,
            load_q: 0.2,
            init_role: BusRole::Slack,
        }],
        branches: Vec::new(),
    };
    let mut m = MachinePlacement::generic(0, 100.0, h);
    m.name = Some("gen".into());
    m.d = 0.0;
    m.ra = 0.0;
    let mut g = GflPlacement::new(0, 100.0, dp);
    g.name = Some("step".into());
    ScenarioSpec {
        name: format!("isolated-H{h}"),
        description: String::new(),
        network,
        placements: vec![Placement::SyncGen(m), Placement::Gfl(g)],
        events: vec![Event::new(
            STEP_TIME,
            EventKind::OpenBreaker {
                target: BreakerTarget::Device(1),
            },
        )],
        config: SimConfig {
            t_end,
            output_decimation: 1,
            ..SimConfig::default()
        },
    }
}

/// Complex power to complex current at voltage `v`.
pub fn current(s: Complex64, v: Complex64) -> Complex64 {
    (s / v).conj()
}

/// Samples of `t` inside `[from, to]`.
pub fn window(t: &[f64], from: f64, to: f64) -> std::ops::Range<usize> {
    let a = t.partition_point(|&x| x < from - 1e-9);
    let b = t.partition_point(|&x| x <= to + 1e-9);
    a..b
}

/// The standard three-machine 9-bus case with its published dispatch.
pub fn three_machines(t_end: f64) -> ScenarioSpec {
    use rmsdyn_core::netmodel::wscc9::{self, bus, GEN_P, GEN_VOLTAGE};
    let ratings = [247.5, 192.0, 128.0];
    let inertia = [9.55, 3.33, 2.35];
    let placements = (0..3)
        .map(|k| {
            let mut m = MachinePlacement::generic(bus(k + 1), ratings[k], inertia[k]);
            m.name = Some(format!("gen{}", k + 1));
            m.v_set = GEN_VOLTAGE[k];
            if k > 0 {
                m.p_set = GEN_P[k - 1] * 100.0 / ratings[k];
            }
            Placement::SyncGen(m)
        })
        .collect();
    ScenarioSpec {
        name: "three-machine-9bus".into(),
        description: String::new(),
        network: wscc9::network(),
        placements,
        events: Vec::new(),
        config: SimConfig {
            t_end,
            ..SimConfig::default()
        },
    }
}
