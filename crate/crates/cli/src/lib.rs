//! Experiment runner: loads a TOML config, runs one scenario and writes its
//! CSV/JSON artifacts plus a `manifest.json` into the output directory.
//!
//! Exit codes: 0 on success, 1 when a scenario's verdict fails or it hits a
//! runtime error (a JSON error record is printed and saved), 2 for usage and
//! configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;

pub mod config;
pub mod output;
pub mod scenarios;

use config::{ConfigError, ExperimentConfig, Overrides, Scenario};
use output::{num, sha256_hex, Artifacts, Obj};

/// Environment variable read for the worker count when neither the config
/// nor `--workers` sets it.
pub const WORKERS_ENV: &str = "HOROFLOW_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] horoflow::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numeric(_) => "numeric",
            RunError::Io(_) | RunError::Csv(_) => "io",
            RunError::Pool(_) => "workers",
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: String,
    pub passed: bool,
    pub out_dir: PathBuf,
}

/// Loads and validates the configuration for `scenario`.
pub fn prepare(scenario: Scenario, path: Option<&std::path::Path>, o: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(o);
    if cfg.workers.is_none() {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            let n = v.trim().parse().map_err(|_| ConfigError::Invalid {
                key: WORKERS_ENV.into(),
                message: format!("expected a positive integer, got `{v}`"),
            })?;
            cfg.workers = Some(n);
        }
    }
    cfg.validate(scenario)?;
    Ok(cfg)
}

/// Runs a validated config and writes artifacts and the manifest.
pub fn run(scenario: Scenario, cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let out_dir = cfg.out_dir();
    let mut art = Artifacts::new(&out_dir)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let report = pool.install(|| scenarios::dispatch(scenario, cfg, &mut art))?;

    let resolved = serde_json::to_string(cfg).expect("config serialises");
    let mut manifest = Obj::new()
        .v("scenario", scenario.name())
        .v("config_sha256", sha256_hex(resolved.as_bytes()))
        .v("config", serde_json::from_str::<Value>(&resolved).expect("round trip"))
        .v(
            "versions",
            Obj::new()
                .v("horoflow-cli", env!("CARGO_PKG_VERSION"))
                .v("horoflow-core", horoflow::VERSION)
                .build(),
        )
        .v("workers", pool.current_num_threads())
        .v("outputs", art.written().to_vec())
        .v("passed", report.passed)
        .v("summary", report.summary.clone());
    if let Some(t) = report.timing {
        manifest = manifest.v("timing", t);
    }
    manifest = manifest.v("wall_time_s", num(start.elapsed().as_secs_f64()));
    art.json("manifest.json", &manifest.build())?;
    Ok(RunOutcome {
        summary: report.summary,
        passed: report.passed,
        out_dir,
    })
}

/// JSON record printed (and saved as `error.json`) when a scenario fails.
pub fn error_record(scenario: Scenario, err: &RunError) -> Value {
    Obj::new()
        .v("scenario", scenario.name())
        .v("error", err.kind())
        .v("message", err.to_string())
        .build()
}

/// Full command handling after argument parsing; returns the exit code.
pub fn execute(scenario: Scenario, path: Option<&std::path::Path>, o: &Overrides) -> ExitCode {
    let cfg = match prepare(scenario, path, o) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(scenario, &cfg) {
        Ok(r) => {
            println!("{}", r.summary);
            ExitCode::from(if r.passed { 0 } else { 1 })
        }
        Err(e) => {
            let rec = error_record(scenario, &e);
            println!("{rec}");
            if let Ok(mut art) = Artifacts::new(&cfg.out_dir()) {
                if let Err(io) = art.json("error.json", &rec) {
                    log::warn!("could not save error record: {io}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
