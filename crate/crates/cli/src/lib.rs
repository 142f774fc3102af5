//! Command-line front end: load scenarios, run single cases or sweeps, and
//! write per-case CSV traces and metrics.
//!
//! Exit codes: 0 on success (a collapsed or unstable verdict is a result, not
//! a failure), 1 on any validation error, 2 when a run or its output fails.

pub mod overrides;

use clap::{Args, Parser, Subcommand};
use overrides::{parse_vary, Override};
use rayon::prelude::*;
use rmsdyn_core::scenarios::{case_catalog, catalog_case, export_csv, metrics, monitored_device};
use rmsdyn_core::{MetricReport, ScenarioSpec, Termination};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Like `println!`, but a closed pipe (e.g. `| head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown scenario `{0}`: not a catalog case and no such file (see `rmsdyn list`)")]
    UnknownScenario(String),
    #[error("cannot read scenario file {}: {source}", path.display())]
    ReadScenario {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario JSON in {}: {source}", path.display())]
    MalformedJson {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid override: {0}")]
    Override(String),
    #[error("override leaves an invalid scenario: {0}")]
    OverrideType(serde_json::Error),
    #[error("invalid scenario: {0}")]
    InvalidScenario(rmsdyn_core::Error),
    #[error("output directory {} is not writable: {source}", path.display())]
    OutDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("run of `{case}` failed: {source}")]
    Run {
        case: String,
        source: rmsdyn_core::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{failed} of {total} sweep cases failed")]
    SweepFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::OutDir { .. }
            | Self::Run { .. }
            | Self::Write { .. }
            | Self::SweepFailed { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rmsdyn",
    version,
    about = "RMS dynamic simulation of condensers and grid-following inverters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the catalog case names.
    List,
    /// Run one scenario and write `<out>/<case>.csv` and `<out>/<case>.metrics.json`.
    Run {
        #[command(flatten)]
        source: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run several scenarios in parallel; all catalog cases when none is given.
    Sweep {
        /// Catalog name or JSON file; repeatable.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Dotted-path assignment applied to every case; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// One variant per value, named `<case>@<key>=<value>`.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        vary: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (all cores by default).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse and check a scenario without running it.
    Validate {
        #[command(flatten)]
        source: ScenarioArgs,
        /// Print the resolved scenario as JSON.
        #[arg(long)]
        print: bool,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Catalog name or path to a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    /// Dotted-path assignment such as `placements.1.h=6`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Integration step override (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Horizon override (s).
    #[arg(long)]
    pub t_end: Option<f64>,
}

/// Reads a scenario file with strict key checking.
pub fn parse_scenario_file(path: &Path) -> Result<ScenarioSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadScenario {
        path: path.to_path_buf(),
        source,
    })?;
    let spec: ScenarioSpec =
        serde_json::from_str(&text).map_err(|source| CliError::MalformedJson {
            path: path.to_path_buf(),
            source,
        })?;
    spec.validate().map_err(CliError::InvalidScenario)?;
    Ok(spec)
}

/// A catalog name, else an existing file.
pub fn resolve_scenario(name_or_path: &str) -> Result<ScenarioSpec, CliError> {
    if let Some(spec) = catalog_case(name_or_path) {
        return Ok(spec);
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        return parse_scenario_file(path);
    }
    Err(CliError::UnknownScenario(name_or_path.to_string()))
}

/// Applies overrides in order and re-validates the result.
pub fn apply_overrides(
    spec: &ScenarioSpec,
    overrides: &[Override],
) -> Result<ScenarioSpec, CliError> {
    if overrides.is_empty() {
        return Ok(spec.clone());
    }
    let mut value = serde_json::to_value(spec).expect("scenario serializes");
    for o in overrides {
        o.apply(&mut value)?;
    }
    let out: ScenarioSpec = serde_json::from_value(value).map_err(CliError::OverrideType)?;
    out.validate().map_err(CliError::InvalidScenario)?;
    Ok(out)
}

fn collect_overrides(
    raw: &[String],
    dt: Option<f64>,
    t_end: Option<f64>,
) -> Result<Vec<Override>, CliError> {
    let mut out: Vec<Override> = raw.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let num = |key: &str, x: f64| Override {
        path: key.split('.').map(str::to_string).collect(),
        value: x.into(),
    };
    if let Some(dt) = dt {
        out.push(num("config.dt", dt));
    }
    if let Some(t) = t_end {
        out.push(num("config.t_end", t));
    }
    Ok(out)
}

fn load(args: &ScenarioArgs) -> Result<ScenarioSpec, CliError> {
    let base = resolve_scenario(&args.scenario)?;
    apply_overrides(
        &base,
        &collect_overrides(&args.overrides, args.dt, args.t_end)?,
    )
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    let err = |source| CliError::OutDir {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    // Creating a directory that already exists succeeds even when it is
    // read-only, so probe with a real file.
    let probe = dir.join(".rmsdyn-write-test");
    std::fs::write(&probe, b"").map_err(err)?;
    std::fs::remove_file(&probe).map_err(err)?;
    Ok(())
}

/// File-system-safe form of a case name.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.=@".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Runs one case and writes its trace and metrics.
pub fn run_case(spec: &ScenarioSpec, out: &Path) -> Result<MetricReport, CliError> {
    let run_err = |source| CliError::Run {
        case: spec.name.clone(),
        source,
    };
    let result = rmsdyn_core::run(spec).map_err(run_err)?;
    let report = metrics(&result, monitored_device(spec)).map_err(run_err)?;
    let stem = file_stem(&spec.name);
    let csv = out.join(format!("{stem}.csv"));
    export_csv(&result, &csv).map_err(|e| CliError::Write {
        path: csv.clone(),
        source: Box::new(e),
    })?;
    let json = out.join(format!("{stem}.metrics.json"));
    let text = serde_json::to_string_pretty(&report).expect("metrics serialize");
    std::fs::write(&json, text + "\n").map_err(|e| CliError::Write {
        path: json.clone(),
        source: Box::new(e),
    })?;
    if result.termination != Termination::Completed {
        log(&format!(
            "{}: {} at t = {:.4} s",
            spec.name, result.termination, result.termination_time
        ));
    }
    Ok(report)
}

fn log(msg: &str) {
    let _ = writeln!(std::io::stderr(), "{msg}");
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

fn summary_line(name: &str, m: &MetricReport) -> String {
    format!(
        "{name}: {} nadir={:.4} Hz ufls={} s rocof={:.4} Hz/s settling={} s period={} s",
        m.verdict,
        m.nadir_hz,
        fmt_opt(m.time_to_ufls_s, 4),
        m.max_rocof_hz_s,
        fmt_opt(m.settling_time_s, 3),
        fmt_opt(m.osc_period_s, 3),
    )
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sweep(
    scenarios: &[String],
    raw: &[String],
    vary: Option<&str>,
    dt: Option<f64>,
    t_end: Option<f64>,
    out: &Path,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let common = collect_overrides(raw, dt, t_end)?;
    let bases = if scenarios.is_empty() {
        case_catalog()
    } else {
        scenarios
            .iter()
            .map(|s| resolve_scenario(s))
            .collect::<Result<_, _>>()?
    };
    let variants = vary.map(parse_vary).transpose()?;
    let mut specs = Vec::new();
    for base in &bases {
        let base = apply_overrides(base, &common)?;
        match &variants {
            None => specs.push(base),
            Some(vs) => {
                for v in vs {
                    let mut s = apply_overrides(&base, std::slice::from_ref(v))?;
                    s.name = format!("{}@{}={}", base.name, v.key(), v.value);
                    specs.push(s);
                }
            }
        }
    }
    prepare_out_dir(out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let results: Vec<Result<MetricReport, CliError>> =
        pool.install(|| specs.par_iter().map(|s| run_case(s, out)).collect());

    let mut entries = Vec::with_capacity(specs.len());
    let mut failed = 0;
    for (spec, r) in specs.iter().zip(results) {
        match r {
            Ok(m) => {
                say!("{}", summary_line(&spec.name, &m));
                entries.push(SweepEntry {
                    case: spec.name.clone(),
                    metrics: Some(m),
                    error: None,
                });
            }
            Err(e) => {
                failed += 1;
                say!("{}: error: {e}", spec.name);
                entries.push(SweepEntry {
                    case: spec.name.clone(),
                    metrics: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&entries).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Write {
        path,
        source: Box::new(e),
    })?;
    if failed > 0 {
        return Err(CliError::SweepFailed {
            failed,
            total: specs.len(),
        });
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List => {
            for s in case_catalog() {
                if s.description.is_empty() {
                    say!("{}", s.name);
                } else {
                    say!("{:<40} {}", s.name, s.description);
                }
            }
        }
        Command::Run { source, out } => {
            let spec = load(&source)?;
            prepare_out_dir(&out)?;
            let m = run_case(&spec, &out)?;
            say!("{}", summary_line(&spec.name, &m));
        }
        Command::Sweep {
            scenarios,
            overrides,
            vary,
            dt,
            t_end,
            out,
            jobs,
        } => {
            sweep(
                &scenarios,
                &overrides,
                vary.as_deref(),
                dt,
                t_end,
                &out,
                jobs,
            )?;
        }
        Command::Validate { source, print } => {
            let spec = load(&source)?;
            if print {
                say!(
                    "{}",
                    serde_json::to_string_pretty(&spec).expect("scenario serializes")
                );
            } else {
                say!(
                    "{}: ok ({} buses, {} devices, {} events)",
                    spec.name,
                    spec.network.buses.len(),
                    spec.placements.len(),
                    spec.events.len()
                );
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            log(&format!("error: {e}"));
            e.exit_code()
        }
    }
}
