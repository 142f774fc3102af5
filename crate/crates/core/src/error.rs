use thiserror::Error;

/// Errors raised while building, initializing or post-processing a simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network is not connected; islands: {islands:?}")]
    Disconnected { islands: Vec<Vec<usize>> },

    #[error("power flow did not converge after {iterations} iterations (max mismatch {mismatch:.3e} pu)")]
    PowerFlowDiverged { iterations: usize, mismatch: f64 },

    #[error("network solve diverged (residual {residual:.3e} pu)")]
    NetworkDiverged { residual: f64 },

    #[error("invalid machine parameters: {0}")]
    InvalidMachine(String),

    #[error("invalid inverter parameters: {0}")]
    InvalidInverter(String),

    #[error("condenser dynamics evaluated for a machine in generator mode")]
    NotACondenser,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("equilibrium residual too large: {}", format_residuals(.0))]
    EquilibriumResidual(Vec<(String, f64)>),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_residuals(r: &[(String, f64)]) -> String {
    r.iter()
        .map(|(name, v)| format!("{name}={v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
