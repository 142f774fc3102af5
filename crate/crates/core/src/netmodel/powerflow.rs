//! Newton-Raphson power flow in polar coordinates, used to place the system at
//! an operating point before dynamic simulation.

use super::{AdmittanceMatrix, BusRole, NetworkModel};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Generation set point at one bus. `v` is used only at slack and PV buses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenTarget {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
    pub v: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dispatch {
    pub targets: Vec<GenTarget>,
}

impl Dispatch {
    fn bus_gen(&self, bus: usize) -> (f64, f64) {
        self.targets
            .iter()
            .filter(|t| t.bus == bus)
            .fold((0.0, 0.0), |(p, q), t| (p + t.p, q + t.q))
    }

    fn bus_voltage(&self, bus: usize) -> Option<f64> {
        self.targets
            .iter()
            .filter(|t| t.bus == bus)
            .find_map(|t| t.v)
    }

    fn gen_buses(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.targets.iter().map(|t| t.bus).collect();
        b.sort_unstable();
        b.dedup();
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    /// Buses that carry a generation target, ascending.
    pub gen_buses: Vec<usize>,
    /// Net generation at each of `gen_buses` (injection plus local load).
    pub gen_p: Vec<f64>,
    pub gen_q: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest active/reactive mismatch at the returned point.
    pub mismatch: f64,
}

impl PowerFlowSolution {
    pub fn voltages(&self) -> Vec<Complex64> {
        self.v_mag
            .iter()
            .zip(&self.v_ang)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    pub fn generation(&self, bus: usize) -> Option<Complex64> {
        self.gen_buses
            .iter()
            .position(|&b| b == bus)
            .map(|k| Complex64::new(self.gen_p[k], self.gen_q[k]))
    }
}

/// Complex power injected into the network at every bus for voltages `v`.
pub(crate) fn injections(y: &DMatrix<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    let i = y * v;
    v.zip_map(&i, |vk, ik| vk * ik.conj())
}

pub fn solve_power_flow(
    net: &NetworkModel,
    ybus: &AdmittanceMatrix,
    dispatch: &Dispatch,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution> {
    net.validate()?;
    let n = net.n_bus();
    if ybus.n() != n {
        return Err(Error::InvalidNetwork(
            "admittance matrix size mismatch".into(),
        ));
    }
    let y = ybus.to_dense();
    let slack = net.slack_bus().expect("validated network has a slack bus");

    let mut pv = Vec::new();
    let mut pq = Vec::new();
    for bus in &net.buses {
        match bus.init_role {
            BusRole::Slack => {}
            BusRole::Pv => pv.push(bus.id),
            BusRole::Pq => pq.push(bus.id),
        }
    }
    let pvpq: Vec<usize> = {
        let mut v = pv.clone();
        v.extend(&pq);
        v.sort_unstable();
        v
    };

    let s_spec: Vec<Complex64> = net
        .buses
        .iter()
        .map(|b| {
            let (pg, qg) = dispatch.bus_gen(b.id);
            Complex64::new(pg - b.load_p, qg - b.load_q)
        })
        .collect();

    // Flat start with regulated magnitudes.
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    for bus in &net.buses {
        if bus.init_role != BusRole::Pq {
            vm[bus.id] = dispatch.bus_voltage(bus.id).unwrap_or(1.0);
        }
    }

    let polar = |vm: &[f64], va: &[f64]| {
        DVector::from_iterator(
            n,
            vm.iter()
                .zip(va)
                .map(|(&m, &a)| Complex64::from_polar(m, a)),
        )
    };
    let mismatch_of = |s: &DVector<Complex64>| -> DVector<f64> {
        let mut f = DVector::zeros(pvpq.len() + pq.len());
        for (k, &i) in pvpq.iter().enumerate() {
            f[k] = s_spec[i].re - s[i].re;
        }
        for (k, &i) in pq.iter().enumerate() {
            f[pvpq.len() + k] = s_spec[i].im - s[i].im;
        }
        f
    };

    let mut iterations = 0;
    let mut v = polar(&vm, &va);
    let mut f = mismatch_of(&injections(&y, &v));
    let mut norm = f.amax();
    while norm >= opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&y, &v, &pvpq, &pq);
        let dx = jac.lu().solve(&f).ok_or(Error::PowerFlowDiverged {
            iterations,
            mismatch: norm,
        })?;
        for (k, &i) in pvpq.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in pq.iter().enumerate() {
            vm[i] += dx[pvpq.len() + k];
        }
        v = polar(&vm, &va);
        f = mismatch_of(&injections(&y, &v));
        norm = f.amax();
        if !norm.is_finite() {
            break;
        }
    }
    if !(norm < opts.tolerance) {
        return Err(Error::PowerFlowDiverged {
            iterations,
            mismatch: norm,
        });
    }

    let s = injections(&y, &v);
    let mut gen_buses = dispatch.gen_buses();
    if !gen_buses.contains(&slack) {
        gen_buses.push(slack);
        gen_buses.sort_unstable();
    }
    let gen_p = gen_buses
        .iter()
        .map(|&b| s[b].re + net.buses[b].load_p)
        .collect();
    let gen_q = gen_buses
        .iter()
        .map(|&b| s[b].im + net.buses[b].load_q)
        .collect();
    Ok(PowerFlowSolution {
        v_mag: vm,
        v_ang: va,
        gen_buses,
        gen_p,
        gen_q,
        converged: true,
        iterations,
        mismatch: norm,
    })
}

fn jacobian(
    y: &DMatrix<Complex64>,
    v: &DVector<Complex64>,
    pvpq: &[usize],
    pq: &[usize],
) -> DMatrix<f64> {
    let n = v.len();
    let i = y * v;
    let vnorm = v.map(|x| {
        if x.norm() > 0.0 {
            x / x.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    let j = Complex64::new(0.0, 1.0);
    let mut ds_dvm = DMatrix::<Complex64>::zeros(n, n);
    let mut ds_dva = DMatrix::<Complex64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let yrc = y[(r, c)];
            ds_dvm[(r, c)] = v[r] * (yrc * vnorm[c]).conj();
            ds_dva[(r, c)] = -j * v[r] * (yrc * v[c]).conj();
        }
        ds_dvm[(r, r)] += i[r].conj() * vnorm[r];
        ds_dva[(r, r)] += j * v[r] * i[r].conj();
    }
    let (a, b) = (pvpq.len(), pq.len());
    let mut jac = DMatrix::zeros(a + b, a + b);
    for (rk, &r) in pvpq.iter().enumerate() {
        for (ck, &c) in pvpq.iter().enumerate() {
            jac[(rk, ck)] = ds_dva[(r, c)].re;
        }
        for (ck, &c) in pq.iter().enumerate() {
            jac[(rk, a + ck)] = ds_dvm[(r, c)].re;
        }
    }
    for (rk, &r) in pq.iter().enumerate() {
        for (ck, &c) in pvpq.iter().enumerate() {
            jac[(a + rk, ck)] = ds_dva[(r, c)].im;
        }
        for (ck, &c) in pq.iter().enumerate() {
            jac[(a + rk, a + ck)] = ds_dvm[(r, c)].im;
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{build_ybus, wscc9, Branch, Bus};

    fn base_dispatch() -> Dispatch {
        let v = wscc9::GEN_VOLTAGE;
        Dispatch {
            targets: vec![
                GenTarget {
                    bus: 0,
                    p: 0.0,
                    q: 0.0,
                    v: Some(v[0]),
                },
                GenTarget {
                    bus: 1,
                    p: wscc9::GEN_P[0],
                    q: 0.0,
                    v: Some(v[1]),
                },
                GenTarget {
                    bus: 2,
                    p: wscc9::GEN_P[1],
                    q: 0.0,
                    v: Some(v[2]),
                },
            ],
        }
    }

    #[test]
    fn unloaded_network_is_flat() {
        let mut net = wscc9::network();
        for b in &mut net.buses {
            b.load_p = 0.0;
            b.load_q = 0.0;
        }
        // Line charging raises voltages unless the generators absorb it, so
        // use a purely series network for the zero-flow case.
        for br in &mut net.branches {
            br.b_shunt = 0.0;
        }
        let y = build_ybus(&net).unwrap();
        let dispatch = Dispatch {
            targets: (0..3)
                .map(|b| GenTarget {
                    bus: b,
                    p: 0.0,
                    q: 0.0,
                    v: Some(1.0),
                })
                .collect(),
        };
        let sol = solve_power_flow(&net, &y, &dispatch, &PowerFlowOptions::default()).unwrap();
        for k in 0..net.n_bus() {
            assert!((sol.v_mag[k] - 1.0).abs() < 1e-12);
            assert!(sol.v_ang[k].abs() < 1e-12);
        }
        for k in 0..sol.gen_buses.len() {
            assert!(sol.gen_p[k].abs() < 1e-12 && sol.gen_q[k].abs() < 1e-12);
        }
    }

    #[test]
    fn base_case_matches_published_solution() {
        let net = wscc9::network();
        let y = build_ybus(&net).unwrap();
        let sol =
            solve_power_flow(&net, &y, &base_dispatch(), &PowerFlowOptions::default()).unwrap();
        assert!(sol.converged && sol.mismatch < 1e-8);
        // Published values (3 significant digits).
        let slack = sol.generation(0).unwrap();
        assert!((slack.re - 0.716).abs() < 1e-3);
        assert!((slack.im - 0.270).abs() < 1e-3);
        assert!((sol.generation(1).unwrap().im - 0.067).abs() < 1e-3);
        assert!((sol.generation(2).unwrap().im + 0.109).abs() < 1e-3);
        assert!((sol.v_mag[4] - 0.996).abs() < 1e-3);
        assert!((sol.v_ang[4].to_degrees() + 3.99).abs() < 0.02);
    }

    #[test]
    fn two_bus_closed_form() {
        // Slack at 1.0 pu feeding 0.5 + j0 pu over x = 0.1:
        // |V|^4 - |V|^2 + (P x)^2 = 0, upper root.
        let bus = |id, role| Bus {
            id,
            name: format!("b{id}"),
            base_kv: 1.0,
            load_p: if id == 1 { 0.5 } else { 0.0 },
            load_q: 0.0,
            init_role: role,
        };
        let net = NetworkModel {
            buses: vec![bus(0, BusRole::Slack), bus(1, BusRole::Pq)],
            branches: vec![Branch::line(0, 1, 0.0, 0.1, 0.0)],
        };
        let y = build_ybus(&net).unwrap();
        let dispatch = Dispatch {
            targets: vec![GenTarget {
                bus: 0,
                p: 0.0,
                q: 0.0,
                v: Some(1.0),
            }],
        };
        let sol = solve_power_flow(&net, &y, &dispatch, &PowerFlowOptions::default()).unwrap();
        let px: f64 = 0.5 * 0.1;
        let v2 = (1.0 + (1.0 - 4.0 * px * px).sqrt()) / 2.0;
        assert!((sol.v_mag[1] - v2.sqrt()).abs() < 1e-9);
        // sin(delta) = P x / |V|
        assert!((sol.v_ang[1] + (px / v2.sqrt()).asin()).abs() < 1e-9);
    }

    #[test]
    fn infeasible_loading_reports_divergence() {
        let mut net = wscc9::network();
        for b in &mut net.buses {
            b.load_p *= 20.0;
        }
        let y = build_ybus(&net).unwrap();
        let err = solve_power_flow(&net, &y, &base_dispatch(), &PowerFlowOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::PowerFlowDiverged { .. }));
    }
}
