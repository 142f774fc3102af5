//! Static network representation and the algebraic network layer.
//!
//! Buses are indexed contiguously from zero. Loads are constant power on the
//! system base; the dynamic solve blends them to constant impedance at very
//! low voltage (see [`dynamic`]).

mod dynamic;
mod powerflow;
pub mod wscc9;
mod ybus;

pub use dynamic::{
    network_solve_dynamic, unit_magnitude, Load, NetworkSolver, LOAD_PQ_MIN_V, LOAD_Z_MAX_V,
};
pub use powerflow::{solve_power_flow, Dispatch, GenTarget, PowerFlowOptions, PowerFlowSolution};
pub use ybus::{apply_fault, build_ybus, AdmittanceMatrix};

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusRole {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    pub name: String,
    pub base_kv: f64,
    /// Constant-power active load, pu on the system base.
    #[serde(default)]
    pub load_p: f64,
    #[serde(default)]
    pub load_q: f64,
    #[serde(default = "default_role")]
    pub init_role: BusRole,
}

fn default_role() -> BusRole {
    BusRole::Pq
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    #[serde(default)]
    pub b_shunt: f64,
    /// Off-nominal turns ratio on the from side; 1.0 for lines.
    #[serde(default = "unit_tap")]
    pub tap: f64,
}

fn unit_tap() -> f64 {
    1.0
}

impl Branch {
    pub fn line(from_bus: usize, to_bus: usize, r: f64, x: f64, b_shunt: f64) -> Self {
        Self {
            from_bus,
            to_bus,
            r,
            x,
            b_shunt,
            tap: 1.0,
        }
    }

    pub fn series_admittance(&self) -> Complex64 {
        Complex64::new(self.r, self.x).inv()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

impl NetworkModel {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    /// Checks the structural invariants: contiguous ids, one slack bus,
    /// finite loads and well-formed branches.
    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::InvalidNetwork("no buses".into()));
        }
        for (i, bus) in self.buses.iter().enumerate() {
            if bus.id != i {
                return Err(Error::InvalidNetwork(format!(
                    "bus ids must be contiguous from 0; found id {} at position {i}",
                    bus.id
                )));
            }
            if !bus.load_p.is_finite() || !bus.load_q.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "bus {i} has a non-finite load"
                )));
            }
        }
        let slack = self
            .buses
            .iter()
            .filter(|b| b.init_role == BusRole::Slack)
            .count();
        if slack != 1 {
            return Err(Error::InvalidNetwork(format!(
                "exactly one slack bus required, found {slack}"
            )));
        }
        for (k, br) in self.branches.iter().enumerate() {
            self.check_branch(k, br)?;
        }
        Ok(())
    }

    fn check_branch(&self, k: usize, br: &Branch) -> Result<()> {
        let n = self.n_bus();
        if br.from_bus >= n || br.to_bus >= n {
            return Err(Error::InvalidNetwork(format!(
                "branch {k} references a missing bus"
            )));
        }
        if br.from_bus == br.to_bus {
            return Err(Error::InvalidNetwork(format!("branch {k} is a self loop")));
        }
        if br.r == 0.0 && br.x == 0.0 {
            return Err(Error::InvalidNetwork(format!(
                "branch {k} has zero impedance"
            )));
        }
        if !(br.tap.is_finite() && br.tap > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "branch {k} has an invalid tap"
            )));
        }
        Ok(())
    }

    /// Loads as constant-power consumptions on the system base.
    pub fn loads(&self) -> Vec<Load> {
        self.buses
            .iter()
            .filter(|b| b.load_p != 0.0 || b.load_q != 0.0)
            .map(|b| Load {
                bus: b.id,
                s: Complex64::new(b.load_p, b.load_q),
            })
            .collect()
    }

    pub fn slack_bus(&self) -> Option<usize> {
        self.buses
            .iter()
            .position(|b| b.init_role == BusRole::Slack)
    }

    /// Connected components, each sorted, in order of their lowest bus id.
    pub fn islands(&self) -> Vec<Vec<usize>> {
        let n = self.n_bus();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            if br.from_bus < n && br.to_bus < n {
                adj[br.from_bus].push(br.to_bus);
                adj[br.to_bus].push(br.from_bus);
            }
        }
        let mut seen = vec![false; n];
        let mut islands = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut island = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        island.push(v);
                        stack.push(v);
                    }
                }
            }
            island.sort_unstable();
            islands.push(island);
        }
        islands
    }
}
