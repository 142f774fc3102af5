//! RMS phasor simulation of synchronous machines, synchronous condensers and
//! grid-following inverters on small transmission networks.

// `!(x < tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod gfl;
pub mod machines;
pub mod netmodel;
pub mod scenarios;
pub mod units;

pub use engine::{run, run_batch, Event, EventKind, SimConfig, SimResult, Termination};
pub use error::{Error, Result};
pub use scenarios::{case_catalog, MetricReport, ScenarioSpec, Verdict};
pub use units::SystemBase;
