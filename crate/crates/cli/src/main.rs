//! `delta-piston`: classify, solve, verify and sweep free-piston problems.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver error,
//! 4 verification or tolerance failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{parse_override, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "delta-piston", version, about = "Piston accreting pressureless gas: exact, ODE and particle solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// closed | ode | particles | all
    #[arg(long)]
    backend: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Number of output samples on [0, t_end].
    #[arg(long)]
    grid: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override a config entry, e.g. `--set setup.m0=0.5`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the case tag and boundary flags.
    Classify(Common),
    /// Write trajectories for the selected backend(s).
    Solve(Common),
    /// Run entropy, closure, Rankine-Hugoniot and weak-form checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Double the atom mass before the weak-form checks.
        #[arg(long)]
        corrupt_alpha: bool,
    },
    /// Solve for each value of one setup parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Setup field to vary (rho_left, u_left, rho_right, u_right, m0, u0, l).
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Run the sticky-particle backend with its event log.
    Particles(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut overrides: Vec<(String, Value)> = common.set.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?;
    if let Some(b) = &common.backend {
        overrides.push(("backend".into(), Value::String(b.clone())));
    }
    if let Some(t) = common.t_end {
        overrides.push(("t_end".into(), serde_json::json!(t)));
    }
    if let Some(g) = common.grid {
        overrides.push(("grid".into(), serde_json::json!(g)));
    }
    if let Some(o) = &common.output {
        overrides.push(("output_dir".into(), Value::String(o.display().to_string())));
    }
    let cfg = RunConfig::load(common.config.as_deref(), &overrides)?;
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    log::debug!("config: {cfg:?}");
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Classify(c) => commands::cmd_classify(&load(&c)?),
        Command::Solve(c) => commands::cmd_solve(&load(&c)?),
        Command::Particles(c) => commands::cmd_particles(&load(&c)?),
        Command::Verify { common, corrupt_alpha } => commands::cmd_verify(&load(&common)?, corrupt_alpha),
        Command::Sweep { common, param, values } => {
            let cfg = load(&common)?;
            let (parameter, values) = match (param, values, &cfg.sweep) {
                (Some(p), Some(v), _) => (p, v),
                (None, None, Some(s)) => (s.parameter.clone(), s.values.clone()),
                (Some(p), None, Some(s)) => (p, s.values.clone()),
                (None, Some(v), Some(s)) => (s.parameter.clone(), v),
                _ => return Err(CliError::Config("sweep needs --param and --values (or a `sweep` config entry)".into())),
            };
            commands::cmd_sweep(&cfg, &parameter, &values)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DELTA_PISTON_LOG", "error")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("delta-piston: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
