use super::system::{initialize, System, SystemState};
use super::{BreakerTarget, DeviceTrace, Event, EventKind, EventRecord, SimResult, Termination};
use crate::error::{Error, Result};
use crate::netmodel::NetworkSolver;
use crate::scenarios::ScenarioSpec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Two instants closer than this are the same instant.
const TIME_EPS: f64 = 1e-9;

/// A running simulation: system, state, cached network solve and recorded
/// output.
pub struct Simulation {
    pub system: System,
    pub state: SystemState,
    pub t: f64,
    events: Vec<Event>,
    next_event: usize,
    solver: NetworkSolver,
    y_net: DMatrix<Complex64>,
    /// Bus voltages consistent with `state` at `t`.
    pub v: Vec<Complex64>,
    omega: Vec<f64>,
    result: SimResult,
    step_index: u64,
}

impl Simulation {
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        let (system, state) = initialize(spec)?;
        let (solver, y_net) = system.solver(&state, system.config.network_tol)?;
        let v = system.v0.clone();
        let n_dev = system.n_devices();
        let devices = spec
            .placements
            .iter()
            .zip(system.device_names())
            .zip(&system.devices)
            .map(|((p, name), d)| DeviceTrace {
                name,
                kind: d.kind,
                bus: p.bus(),
                p: Vec::new(),
                q: Vec::new(),
                freq: Vec::new(),
                delta: Vec::new(),
                current: Vec::new(),
                online: Vec::new(),
            })
            .collect();
        let span = spec.event_span();
        let result = SimResult {
            scenario: spec.name.clone(),
            base_freq: system.base.freq_hz,
            t: Vec::new(),
            v_mag: vec![Vec::new(); system.network.n_bus()],
            v_ang: vec![Vec::new(); system.network.n_bus()],
            devices,
            balance_residual: Vec::new(),
            events: Vec::new(),
            termination: Termination::Completed,
            termination_time: 0.0,
            first_event: span.map(|s| s.0),
            last_event: span.map(|s| s.1),
        };
        let mut sim = Self {
            system,
            state,
            t: 0.0,
            events: spec.events.clone(),
            next_event: 0,
            solver,
            y_net,
            v,
            omega: vec![1.0; n_dev],
            result,
            step_index: 0,
        };
        sim.record();
        Ok(sim)
    }

    fn solve_network(&self, x: &[f64], guess: &[Complex64]) -> Result<Vec<Complex64>> {
        let i = self.system.sources(x, &self.state);
        let v = self.solver.solve(&i, guess)?;
        if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NetworkDiverged { residual: f64::NAN });
        }
        Ok(v)
    }

    fn f(&mut self, x: &[f64], v: &[Complex64]) -> Vec<f64> {
        let mut dx = vec![0.0; x.len()];
        self.system
            .derivs(x, &self.state, v, &mut dx, &mut self.omega);
        dx
    }

    /// One RK4 step of length `h` with a network solve at every stage.
    pub fn step(&mut self, h: f64) -> Result<()> {
        let x0 = self.state.x.clone();
        let n = x0.len();
        let axpy = |a: f64, k: &[f64]| -> Vec<f64> { (0..n).map(|i| x0[i] + a * k[i]).collect() };

        let v1 = self.v.clone();
        let k1 = self.f(&x0, &v1);
        let x2 = axpy(0.5 * h, &k1);
        let v2 = self.solve_network(&x2, &v1)?;
        let k2 = self.f(&x2, &v2);
        let x3 = axpy(0.5 * h, &k2);
        let v3 = self.solve_network(&x3, &v2)?;
        let k3 = self.f(&x3, &v3);
        let x4 = axpy(h, &k3);
        let v4 = self.solve_network(&x4, &v3)?;
        let k4 = self.f(&x4, &v4);
        let x_new: Vec<f64> = (0..n)
            .map(|i| x0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if x_new.iter().any(|x| !x.is_finite()) {
            return Err(Error::NetworkDiverged { residual: f64::NAN });
        }
        let v_new = self.solve_network(&x_new, &v4)?;
        self.state.x = x_new;
        self.v = v_new;
        self.t += h;
        if self.system.update_trips(&mut self.state, &self.v, h) {
            self.v = self.solve_network(&self.state.x, &self.v.clone())?;
        }
        Ok(())
    }

    fn apply(&mut self, event: &Event) -> Result<()> {
        let st = &mut self.state;
        let description = match &event.kind {
            EventKind::ApplyFault { bus, admittance } => {
                st.faults.insert(*bus, *admittance);
                format!("apply_fault bus {}", bus + 1)
            }
            EventKind::ClearFault { bus } => {
                st.faults.remove(bus);
                format!("clear_fault bus {}", bus + 1)
            }
            EventKind::OpenBreaker { target } | EventKind::CloseBreaker { target } => {
                let closed = matches!(event.kind, EventKind::CloseBreaker { .. });
                match *target {
                    BreakerTarget::Device(k) => st.discrete[k].connected = closed,
                    BreakerTarget::Branch(k) => st.branch_closed[k] = closed,
                }
                let what = match *target {
                    BreakerTarget::Device(k) => self.system.devices[k].name.clone(),
                    BreakerTarget::Branch(k) => format!("branch {k}"),
                };
                format!(
                    "{} {what}",
                    if closed {
                        "close_breaker"
                    } else {
                        "open_breaker"
                    }
                )
            }
        };
        self.result.events.push(EventRecord {
            time: self.t,
            description,
        });
        let (solver, y_net) = self
            .system
            .solver(&self.state, self.system.config.network_tol)?;
        self.solver = solver;
        self.y_net = y_net;
        // A topology change can move the operating point far; start from a
        // healthy voltage profile so a collapsed solution is only accepted
        // when nothing else exists.
        let guess = crate::netmodel::unit_magnitude(&self.v);
        self.v = match self.solve_network(&self.state.x.clone(), &guess) {
            Ok(v) => v,
            Err(_) => self.solve_network(&self.state.x.clone(), &self.v.clone())?,
        };
        Ok(())
    }

    /// Appends a sample at the current time, replacing one at the same time.
    fn record(&mut self) {
        let r = &mut self.result;
        if r.t
            .last()
            .is_some_and(|&last| (self.t - last).abs() < TIME_EPS)
        {
            r.t.pop();
            r.balance_residual.pop();
            for b in 0..r.v_mag.len() {
                r.v_mag[b].pop();
                r.v_ang[b].pop();
            }
            for d in &mut r.devices {
                d.p.pop();
                d.q.pop();
                d.freq.pop();
                d.delta.pop();
                d.current.pop();
                d.online.pop();
            }
        }
        r.t.push(self.t);
        for (b, v) in self.v.iter().enumerate() {
            r.v_mag[b].push(v.norm());
            r.v_ang[b].push(v.arg());
        }
        let f_b = self.system.base.freq_hz;
        let mut s_dev = Complex64::default();
        for k in 0..self.system.n_devices() {
            let o = self.system.outputs(k, &self.state.x, &self.state, &self.v);
            let bus = self.system.devices[k].bus;
            let s = self.v[bus] * o.current.conj();
            s_dev += s;
            let d = &mut r.devices[k];
            d.p.push(s.re);
            d.q.push(s.im);
            d.freq.push(o.freq_pu * f_b);
            d.delta.push(o.angle);
            d.current.push(o.current.norm());
            d.online.push(o.online);
        }
        let s_load: Complex64 = self
            .system
            .loads
            .iter()
            .map(|l| l.power(self.v[l.bus]))
            .sum();
        let vv = DVector::from_column_slice(&self.v);
        let iv = &self.y_net * &vv;
        let s_net: Complex64 = vv.iter().zip(iv.iter()).map(|(v, i)| v * i.conj()).sum();
        r.balance_residual.push((s_dev - s_load - s_net).norm());
    }

    fn terminate(&mut self, reason: Termination) -> SimResult {
        let mut r = std::mem::replace(&mut self.result, empty_result());
        r.termination = reason;
        r.termination_time = self.t;
        r
    }

    /// Integrates to `t_end`, returning the recorded result.
    pub fn run_to_end(mut self) -> SimResult {
        let t_end = self.system.config.t_end;
        let dt = self.system.config.dt;
        let decimation = self.system.config.output_decimation as u64;
        loop {
            // Events due now.
            let mut fired = false;
            while self.next_event < self.events.len()
                && self.events[self.next_event].time <= self.t + TIME_EPS
            {
                let e = self.events[self.next_event].clone();
                self.next_event += 1;
                if self.apply(&e).is_err() {
                    return self.terminate(Termination::NetworkCollapse);
                }
                fired = true;
            }
            if fired {
                self.record();
                if self.system.all_sources_offline(&self.state) {
                    return self.terminate(Termination::AllSourcesOffline);
                }
            }
            if self.t >= t_end - TIME_EPS {
                return self.terminate(Termination::Completed);
            }
            let grid = (self.step_index + 1) as f64 * dt;
            let mut target = grid.min(t_end);
            let mut on_grid = true;
            if let Some(e) = self.events.get(self.next_event) {
                if e.time < target - TIME_EPS {
                    target = e.time;
                    on_grid = false;
                }
            }
            if on_grid && (target - t_end).abs() < TIME_EPS && grid > t_end + TIME_EPS {
                on_grid = false;
            }
            let h = target - self.t;
            if self.step(h).is_err() {
                return self.terminate(Termination::NetworkCollapse);
            }
            self.t = target;
            if on_grid {
                self.step_index += 1;
            }
            let at_end = self.t >= t_end - TIME_EPS;
            if (on_grid && self.step_index % decimation == 0) || at_end {
                self.record();
            }
            if self.system.all_sources_offline(&self.state) {
                self.record();
                return self.terminate(Termination::AllSourcesOffline);
            }
        }
    }
}

fn empty_result() -> SimResult {
    SimResult {
        scenario: String::new(),
        base_freq: 0.0,
        t: Vec::new(),
        v_mag: Vec::new(),
        v_ang: Vec::new(),
        devices: Vec::new(),
        balance_residual: Vec::new(),
        events: Vec::new(),
        termination: Termination::Completed,
        termination_time: 0.0,
        first_event: None,
        last_event: None,
    }
}

/// Runs a scenario to completion. Only validation and initialization can
/// fail; collapse during the run is reported through the termination reason.
pub fn run(spec: &ScenarioSpec) -> Result<SimResult> {
    Ok(Simulation::new(spec)?.run_to_end())
}

/// Runs a scenario with `t_end` replaced.
pub fn run_until(spec: &ScenarioSpec, t_end: f64) -> Result<SimResult> {
    let mut spec = spec.clone();
    spec.config.t_end = t_end;
    run(&spec)
}
