//! Command-line runner for `decim-core`.
//!
//! Loads a JSON [`RunConfig`](config::RunConfig), plans the requested
//! command, runs its chains on a rayon pool and writes CSV/JSON payloads
//! plus a `manifest.json` into the output directory. All file writes happen
//! on the calling thread after the work is done.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{Command, Outcome, Plan};
pub use config::RunConfig;
pub use error::CliError;
pub use output::RunManifest;

/// One CLI invocation after argument parsing.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config_path: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    pub dry_run: bool,
}

/// What an invocation produced.
#[derive(Debug)]
pub enum Report {
    DryRun(serde_json::Value),
    Completed {
        manifest: RunManifest,
        stdout: Option<String>,
    },
}

pub fn execute(inv: &Invocation) -> Result<Report, CliError> {
    let started_at = output::timestamp();
    let bytes = std::fs::read(&inv.config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", inv.config_path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(CliError::config)?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(seed) = inv.seed {
        cfg.chain.seed = seed;
    }
    let base_dir = inv.config_path.parent().unwrap_or(Path::new("."));
    let pool = match inv.workers {
        Some(0) => return Err(CliError::Config("--workers must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(CliError::runtime)?;

    let plan = pool.install(|| commands::prepare(inv.command, &cfg, base_dir))?;
    if inv.dry_run {
        let mut plan_json = pool.install(|| plan.describe());
        plan_json["seeds"] = plan.seeds().into();
        plan_json["workers"] = pool.current_num_threads().into();
        return Ok(Report::DryRun(plan_json));
    }
    log::info!(
        "{} on {} workers",
        inv.command.name(),
        pool.current_num_threads()
    );
    let outcome = pool.install(|| plan.run(cfg.output.csv, cfg.output.json))?;

    let dir = inv
        .out
        .clone()
        .unwrap_or_else(|| cfg.output.directory.clone());
    let manifest = RunManifest {
        schema_version: output::SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: inv.command.name().to_owned(),
        config_sha256: output::sha256_hex(&bytes),
        seeds: outcome.seeds,
        started_at,
        finished_at: String::new(),
        files: Vec::new(),
    };
    let manifest = output::write_all(&dir, &outcome.artifacts, manifest)?;
    Ok(Report::Completed {
        manifest,
        stdout: outcome.stdout,
    })
}
