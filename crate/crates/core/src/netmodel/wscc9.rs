//! WSCC 3-generator 9-bus system (standard textbook data, 100 MVA base).
//!
//! Bus `k` of the usual one-line diagram has id `k - 1`. Generator buses 1-3
//! sit behind step-up transformers; loads A, B and C are at buses 5, 6 and 8.
//! The published dispatch is 1.63 pu at bus 2 and 0.85 pu at bus 3 with bus 1
//! as the swing bus.

use super::{Branch, Bus, BusRole, NetworkModel};

/// Published voltage set points at buses 1, 2, 3.
pub const GEN_VOLTAGE: [f64; 3] = [1.04, 1.025, 1.025];
/// Published active dispatch at buses 2 and 3, pu.
pub const GEN_P: [f64; 2] = [1.63, 0.85];

/// Converts a one-line-diagram bus number (1-based) to a bus id.
pub const fn bus(number: usize) -> usize {
    number - 1
}

pub fn network() -> NetworkModel {
    let kv = [16.5, 18.0, 13.8, 230.0, 230.0, 230.0, 230.0, 230.0, 230.0];
    let load = |n: usize| match n {
        5 => (1.25, 0.50),
        6 => (0.90, 0.30),
        8 => (1.00, 0.35),
        _ => (0.0, 0.0),
    };
    let buses = (1..=9)
        .map(|n| {
            let (p, q) = load(n);
            Bus {
                id: bus(n),
                name: format!("bus{n}"),
                base_kv: kv[n - 1],
                load_p: p,
                load_q: q,
                init_role: match n {
                    1 => BusRole::Slack,
                    2 | 3 => BusRole::Pv,
                    _ => BusRole::Pq,
                },
            }
        })
        .collect();

    let b = |f: usize, t: usize, r: f64, x: f64, bsh: f64| Branch::line(bus(f), bus(t), r, x, bsh);
    let branches = vec![
        b(1, 4, 0.0, 0.0576, 0.0),
        b(2, 7, 0.0, 0.0625, 0.0),
        b(3, 9, 0.0, 0.0586, 0.0),
        b(4, 5, 0.0100, 0.0850, 0.176),
        b(4, 6, 0.0170, 0.0920, 0.158),
        b(5, 7, 0.0320, 0.1610, 0.306),
        b(6, 9, 0.0390, 0.1700, 0.358),
        b(7, 8, 0.0085, 0.0720, 0.149),
        b(8, 9, 0.0119, 0.1008, 0.209),
    ];
    NetworkModel { buses, branches }
}
