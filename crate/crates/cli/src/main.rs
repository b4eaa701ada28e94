use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decim::{execute, Command, Invocation, Report};

/// Decimated Gibbs measures: magnetization runs, discontinuity probes,
/// annulus sizing and exact oracles.
///
/// Every flag can also be set through an environment variable with the
/// `DECIM_` prefix (`DECIM_CONFIG`, `DECIM_OUT`, `DECIM_SEED`,
/// `DECIM_WORKERS`, `DECIM_DRY_RUN`). Exit codes: 0 success, 2 invalid
/// configuration, 3 runtime failure.
#[derive(Parser, Debug)]
#[command(name = "decim", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, global = true, env = "DECIM_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true, env = "DECIM_OUT")]
    out: Option<PathBuf>,
    /// Base seed; overrides `chain.seed`.
    #[arg(long, global = true, env = "DECIM_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "DECIM_WORKERS")]
    workers: Option<usize>,
    /// Validate the configuration and print the derived plan.
    #[arg(long, global = true, env = "DECIM_DRY_RUN")]
    dry_run: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Magnetization of a box under plus and minus exteriors.
    Magnetize,
    /// Gap of the decimated origin magnetization between the two annulus sides.
    Probe,
    /// Probes over `geometry.L_list` with N from `scan.n_rule`.
    Scan,
    /// Smallest annulus bringing the boundary energy difference below `target_c`.
    Annulus,
    /// Boundary energy difference bound for given L and N.
    EnergyBound,
    /// Exact enumeration on a small free box.
    Oracle,
    /// Decimate a spin configuration file.
    Decimate,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Magnetize => Command::Magnetize,
            Sub::Probe => Command::Probe,
            Sub::Scan => Command::Scan,
            Sub::Annulus => Command::Annulus,
            Sub::EnergyBound => Command::EnergyBound,
            Sub::Oracle => Command::Oracle,
            Sub::Decimate => Command::Decimate,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let Some(config_path) = cli.common.config else {
        eprintln!("configuration error: --config is required");
        return ExitCode::from(2);
    };
    let inv = Invocation {
        command: cli.command.into(),
        config_path,
        out: cli.common.out,
        seed: cli.common.seed,
        workers: cli.common.workers,
        dry_run: cli.common.dry_run,
    };
    match execute(&inv) {
        Ok(Report::DryRun(plan)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&plan).expect("plan is valid JSON")
            );
            ExitCode::SUCCESS
        }
        Ok(Report::Completed { manifest, stdout }) => {
            if let Some(text) = stdout {
                println!("{text}");
            }
            for f in &manifest.files {
                log::info!("wrote {}", f.path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
