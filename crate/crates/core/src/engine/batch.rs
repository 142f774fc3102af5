use super::{run, SimResult};
use crate::error::{Error, Result};
use crate::scenarios::ScenarioSpec;
use rayon::prelude::*;

/// Runs independent scenarios on up to `jobs` threads (all cores when
/// `None`). Results come back in input order.
pub fn run_batch(
    specs: &[ScenarioSpec],
    jobs: Option<usize>,
) -> Result<Vec<(String, Result<SimResult>)>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidScenario(format!("thread pool: {e}")))?;
    Ok(pool.install(|| specs.par_iter().map(|s| (s.name.clone(), run(s))).collect()))
}
