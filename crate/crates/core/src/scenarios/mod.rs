//! Scenario description, the experiment catalog, metrics and CSV export.

pub mod catalog;
mod export;
mod metrics;
mod spec;

pub use catalog::{case_catalog, catalog_case, monitored_device};
pub use export::{csv_header, export_csv, write_csv};
pub use metrics::{
    classify_stability, metrics, oscillation_period, peak_to_peak, trace_metrics, FreqTrace,
    MetricReport, Verdict, MIN_POST_EVENT, STABILITY_P2P_HZ, STABILITY_WINDOW, UFLS_HZ,
};
pub use spec::{AuxPlacement, GflPlacement, MachinePlacement, Placement, ScenarioSpec};
