//! Runs a validated experiment on a sized pool and publishes its outputs.
//!
//! Files are first written into a hidden staging directory inside the
//! output directory and only renamed into place after every file of the
//! run has been produced, so a failed run leaves no partial outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::config::{self, ExperimentConfig, Overrides, Violation};
use crate::error::{ConfigError, RunError};
use crate::experiments;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MASIM_OUTPUT_DIR";

/// Used when neither the flag, the config nor the environment names one.
pub const FALLBACK_OUTPUT_DIR: &str = "masim-out";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: Overrides,
    /// Output directory flag; wins over the config and the environment.
    pub out: Option<PathBuf>,
    /// Worker count; `None` uses the rayon default.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// Published files, in write order.
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// Reads and validates `path` without running anything.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    config::load(path, &Overrides::default())
}

/// Loads `path`, applies the overrides and runs the experiment.
pub fn run_experiment(path: &Path, opts: &RunOptions) -> Result<RunReport, RunError> {
    let cfg = config::load(path, &opts.overrides)?;
    run_config(&cfg, opts)
}

pub fn resolve_output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    if opts.threads == Some(0) {
        return Err(ConfigError::Invalid(vec![Violation {
            field: "threads".into(),
            message: "must be at least 1".into(),
        }])
        .into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let threads = pool.current_num_threads();

    let start = Instant::now();
    let artifacts = pool.install(|| experiments::execute(&cfg.experiment, cfg.seed))?;
    let wall = start.elapsed().as_secs_f64();

    let summary = json!({
        "kind": cfg.experiment.kind(),
        "seed": cfg.seed,
        "threads": threads,
        "wall_time_s": wall,
        "results": artifacts.results,
    });
    let mut files = artifacts.files;
    files.push((
        "summary.json".into(),
        serde_json::to_vec_pretty(&summary).expect("summary serialises"),
    ));

    let out_dir = resolve_output_dir(cfg, opts.out.as_deref());
    fs::create_dir_all(&out_dir)?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(&out_dir)?;
    for (name, bytes) in &files {
        fs::write(staging.path().join(name), bytes)?;
    }
    let mut published = Vec::with_capacity(files.len());
    for (name, _) in &files {
        let dest = out_dir.join(name);
        fs::rename(staging.path().join(name), &dest)?;
        published.push(dest);
    }
    Ok(RunReport {
        out_dir,
        files: published,
        summary,
    })
}
