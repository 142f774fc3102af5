//! Shared fixtures for the simulation benchmarks.

use num_complex::Complex64;
use rmsdyn_core::netmodel::{build_ybus, wscc9, Load, NetworkSolver};
use rmsdyn_core::scenarios::catalog_case;
use rmsdyn_core::ScenarioSpec;

/// A catalog case cut to `t_end` seconds.
pub fn truncated(name: &str, t_end: f64) -> ScenarioSpec {
    let mut spec = catalog_case(name).expect("catalog case");
    spec.config.t_end = t_end;
    spec
}

/// The 9-bus network with Norton sources at the generator buses and
/// constant-power loads, plus a source vector and a flat start.
pub fn loaded_9bus() -> (NetworkSolver, Vec<Complex64>, Vec<Complex64>) {
    let net = wscc9::network();
    let mut y = build_ybus(&net).expect("valid network");
    let mut sources = vec![Complex64::new(0.0, 0.0); net.n_bus()];
    for (k, x) in [0.0608, 0.1198, 0.1813].into_iter().enumerate() {
        y.add(k, k, Complex64::new(0.0, -1.0 / x));
        sources[k] = Complex64::from_polar(1.05 / x, 0.05 * k as f64);
    }
    let loads: Vec<Load> = net.loads();
    let solver = NetworkSolver::new(&y, &loads, 1e-10);
    let guess = vec![Complex64::new(1.0, 0.0); net.n_bus()];
    (solver, sources, guess)
}
