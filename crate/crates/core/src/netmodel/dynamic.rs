//! Per-step algebraic network solve: `Y_aug · V = I_src − I_load(V)`.
//!
//! Constant-power loads become voltage-dependent current injections. Below
//! [`LOAD_PQ_MIN_V`] the load power is blended linearly towards its nominal
//! constant-impedance equivalent, which is reached fully at
//! [`LOAD_Z_MAX_V`]. The nonlinear system is solved with Newton's method in
//! rectangular coordinates.

use super::AdmittanceMatrix;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub const LOAD_PQ_MIN_V: f64 = 0.4;
pub const LOAD_Z_MAX_V: f64 = 0.2;

const MAX_ITERATIONS: usize = 60;
/// Largest per-bus voltage change in one Newton iteration, pu.
const MAX_STEP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Load {
    pub bus: usize,
    /// Consumption at nominal voltage, pu on the system base.
    pub s: Complex64,
}

impl Load {
    /// Fraction of nominal power consumed at voltage magnitude `m`, and its
    /// derivative with respect to `m`.
    fn scale(m: f64) -> (f64, f64) {
        if m >= LOAD_PQ_MIN_V {
            (1.0, 0.0)
        } else if m > LOAD_Z_MAX_V {
            let span = LOAD_PQ_MIN_V - LOAD_Z_MAX_V;
            let w = (m - LOAD_Z_MAX_V) / span;
            let g = w + (1.0 - w) * m * m;
            let dg = (1.0 - m * m) / span + 2.0 * m * (1.0 - w);
            (g, dg)
        } else {
            (m * m, 2.0 * m)
        }
    }

    /// Actual complex power drawn at bus voltage `v`.
    pub fn power(&self, v: Complex64) -> Complex64 {
        self.s * Self::scale(v.norm()).0
    }

    /// Current drawn from the network at bus voltage `v`.
    pub fn current(&self, v: Complex64) -> Complex64 {
        let m = v.norm();
        let (g, _) = Self::scale(m);
        if m < LOAD_Z_MAX_V {
            // constant admittance conj(S)
            return self.s.conj() * v;
        }
        self.s.conj() * v * (g / (m * m))
    }

    /// Partial derivatives of the load current with respect to Re(v), Im(v).
    fn current_partials(&self, v: Complex64) -> (Complex64, Complex64) {
        let c = self.s.conj();
        let j = Complex64::new(0.0, 1.0);
        let m = v.norm();
        if m < LOAD_Z_MAX_V {
            return (c, c * j);
        }
        let (g, dg) = Self::scale(m);
        let h = g / (m * m);
        let dh = (dg * m * m - 2.0 * m * g) / m.powi(4);
        let dx = c * (h + v * dh * v.re / m);
        let dy = c * (j * h + v * dh * v.im / m);
        (dx, dy)
    }
}

/// Network solve with a fixed augmented admittance matrix.
///
/// `y_aug` already contains the device Norton admittances and any fault
/// shunt; it only changes at events, so the solver is rebuilt then.
#[derive(Debug, Clone)]
pub struct NetworkSolver {
    n: usize,
    y: DMatrix<Complex64>,
    y_real: DMatrix<f64>,
    loads: Vec<Load>,
    tolerance: f64,
}

impl NetworkSolver {
    pub fn new(y_aug: &AdmittanceMatrix, loads: &[Load], tolerance: f64) -> Self {
        let n = y_aug.n();
        let y = y_aug.to_dense();
        let mut y_real = DMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                let g = y[(r, c)].re;
                let b = y[(r, c)].im;
                y_real[(2 * r, 2 * c)] = g;
                y_real[(2 * r, 2 * c + 1)] = -b;
                y_real[(2 * r + 1, 2 * c)] = b;
                y_real[(2 * r + 1, 2 * c + 1)] = g;
            }
        }
        Self {
            n,
            y,
            y_real,
            loads: loads.to_vec(),
            tolerance,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn loads(&self) -> &[Load] {
        &self.loads
    }

    pub fn admittance(&self) -> &DMatrix<Complex64> {
        &self.y
    }

    /// Current mismatch `Y·V + I_load(V) − I_src` at every bus.
    pub fn residual(&self, v: &[Complex64], sources: &[Complex64]) -> Vec<Complex64> {
        let vv = DVector::from_column_slice(v);
        let yv = &self.y * vv;
        let mut f: Vec<Complex64> = (0..self.n).map(|k| yv[k] - sources[k]).collect();
        for load in &self.loads {
            f[load.bus] += load.current(v[load.bus]);
        }
        f
    }

    /// Solves for the bus voltages, starting from `guess`.
    ///
    /// If Newton fails from `guess` (typically because the operating point it
    /// was tracking no longer exists), it is restarted from the solution with
    /// every load at its nominal impedance: first with unit magnitudes, then
    /// as is, then scaled down, which finds a collapsed low-voltage solution
    /// when no other exists.
    pub fn solve(&self, sources: &[Complex64], guess: &[Complex64]) -> Result<Vec<Complex64>> {
        assert_eq!(sources.len(), self.n);
        if self.loads.is_empty() {
            return self.solve_linear(&self.y, sources);
        }
        let first = match self.newton(sources, guess) {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };
        let mut y_z = self.y.clone();
        for load in &self.loads {
            y_z[(load.bus, load.bus)] += load.s.conj();
        }
        let Ok(v_z) = self.solve_linear(&y_z, sources) else {
            return Err(first);
        };
        let unit = unit_magnitude(&v_z);
        if let Ok(v) = self.newton(sources, &unit) {
            return Ok(v);
        }
        for scale in [1.0, 0.5, 0.25] {
            let start: Vec<Complex64> = v_z.iter().map(|v| v * scale).collect();
            if let Ok(v) = self.newton(sources, &start) {
                return Ok(v);
            }
        }
        Err(first)
    }

    pub(crate) fn newton(
        &self,
        sources: &[Complex64],
        guess: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let mut v = guess.to_vec();
        let mut f = self.residual(&v, sources);
        let mut norm = max_norm(&f);
        let mut iterations = 0;
        loop {
            if norm < self.tolerance {
                return Ok(v);
            }
            if iterations == MAX_ITERATIONS || !norm.is_finite() {
                return Err(Error::NetworkDiverged { residual: norm });
            }
            iterations += 1;
            let mut jac = self.y_real.clone();
            for load in &self.loads {
                let (dx, dy) = load.current_partials(v[load.bus]);
                let k = 2 * load.bus;
                jac[(k, k)] += dx.re;
                jac[(k, k + 1)] += dy.re;
                jac[(k + 1, k)] += dx.im;
                jac[(k + 1, k + 1)] += dy.im;
            }
            let rhs = DVector::from_iterator(2 * self.n, f.iter().flat_map(|c| [-c.re, -c.im]));
            let dx = jac
                .lu()
                .solve(&rhs)
                .ok_or(Error::NetworkDiverged { residual: norm })?;
            // Limit the step so the iteration stays on the branch it starts
            // on, then backtrack if it increases the mismatch.
            let largest = (0..self.n)
                .map(|k| Complex64::new(dx[2 * k], dx[2 * k + 1]).norm())
                .fold(0.0, f64::max);
            let mut alpha = if largest > MAX_STEP {
                MAX_STEP / largest
            } else {
                1.0
            };
            loop {
                let trial: Vec<Complex64> = (0..self.n)
                    .map(|k| v[k] + alpha * Complex64::new(dx[2 * k], dx[2 * k + 1]))
                    .collect();
                let ft = self.residual(&trial, sources);
                let nt = max_norm(&ft);
                if nt < norm || alpha < 1.0 / 256.0 {
                    v = trial;
                    f = ft;
                    norm = nt;
                    break;
                }
                alpha *= 0.5;
            }
        }
    }

    fn solve_linear(
        &self,
        y: &DMatrix<Complex64>,
        sources: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let rhs = DVector::from_column_slice(sources);
        let sol = y.clone().lu().solve(&rhs).ok_or(Error::NetworkDiverged {
            residual: f64::INFINITY,
        })?;
        Ok(sol.iter().copied().collect())
    }
}

/// Same angles, unit magnitudes (zero entries become 1∠0).
pub fn unit_magnitude(v: &[Complex64]) -> Vec<Complex64> {
    v.iter()
        .map(|c| {
            if c.norm() > 0.0 {
                c / c.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect()
}

fn max_norm(f: &[Complex64]) -> f64 {
    f.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// One-shot network solve from a flat start.
pub fn network_solve_dynamic(
    y_aug: &AdmittanceMatrix,
    norton_currents: &[Complex64],
    loads: &[Load],
    tolerance: f64,
) -> Result<Vec<Complex64>> {
    let solver = NetworkSolver::new(y_aug, loads, tolerance);
    let flat = vec![Complex64::new(1.0, 0.0); y_aug.n()];
    solver.solve(norton_currents, &flat)
}
