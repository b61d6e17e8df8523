//! The `tom2` command line: single simulated sessions, experiment grids,
//! log analysis and the live teaching service.
//!
//! Exit codes: 0 success, 1 runtime failure or analysis mismatch, 2 bad
//! arguments or configuration.

pub mod analyze;
pub mod experiment;
pub mod output;
pub mod simulate;
pub mod spec;

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;
use tom2_core::analysis::relative_ig_table;
use tom2_core::session::DEFAULT_MAX_STEPS;
use tom2_core::{CbhParams, ConditionKind, ModelGrid, Rule, SessionConfig};
use tom2_service::{AppState, ServiceConfig};

use crate::output::relig_text;
use crate::spec::ExperimentSpec;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0} mismatch(es) between stored and recomputed metrics")]
    Mismatch(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Mismatch(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tom2",
    version,
    about = "Second-order theory-of-mind learner for card-sorting teaching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    /// Mean relative IG of the placement after one- and two-statement feedback.
    Relig,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session against a simulated teacher and print it step by step.
    Simulate {
        /// Rule to teach, e.g. `Shape:Diamond|Oval`.
        #[arg(long)]
        rule: Rule,
        /// Teacher biases, e.g. `beta=5,gamma=2[,lambda=4]`.
        #[arg(long, default_value = "beta=0,gamma=0")]
        teacher: CbhParams,
        /// Learner condition: tom0, tom0random or tom2.
        #[arg(long, default_value = "tom2")]
        condition: ConditionKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u32,
        /// Learner's model grid, one entry per flag; defaults to the four
        /// combinations of beta in {0,5} and gamma in {0,2}.
        #[arg(long = "grid")]
        grid: Vec<CbhParams>,
        /// Root for logs; the session goes to `{root}/simulate/{condition}/{seed}.log`.
        #[arg(long, env = "TOM2_LOG_DIR", default_value = "runs")]
        out: PathBuf,
    },
    /// Run an experiment grid from a spec file (see `experiments/default.toml`).
    Experiment {
        spec: PathBuf,
        /// Root for output; the experiment goes to `{root}/{name}/`.
        #[arg(long, env = "TOM2_LOG_DIR", default_value = "runs")]
        out: PathBuf,
    },
    /// Recompute metrics from logs and report any difference from the stored values.
    Analyze {
        /// Directory searched recursively for `*.log` files.
        dir: PathBuf,
        /// Also print a summary table.
        #[arg(long, value_enum)]
        table: Option<Table>,
        /// Also replay every session through the engine and compare events.
        #[arg(long)]
        replay: bool,
    },
    /// Serve live teaching sessions over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Bearer token required to create sessions.
        #[arg(long, env = "TOM2_OPERATOR_TOKEN")]
        token: Option<String>,
        /// Root for logs; live sessions go to `{root}/live/{id}.log`.
        #[arg(long, env = "TOM2_LOG_DIR", default_value = "runs")]
        out: PathBuf,
    },
}

fn io(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            rule,
            teacher,
            condition,
            seed,
            max_steps,
            grid,
            out: root,
        } => {
            let grid = if grid.is_empty() {
                ModelGrid::default()
            } else {
                ModelGrid::new(grid).map_err(|e| CliError::Config(e.to_string()))?
            };
            let cfg = SessionConfig {
                grid,
                max_steps,
                ..SessionConfig::simulated(rule, condition, teacher, seed)
            };
            cfg.validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let path = experiment::log_path(&root.join("simulate"), condition, seed);
            let text = simulate::simulate(&cfg, &path)?;
            out.write_all(text.as_bytes()).map_err(io)
        }
        Command::Experiment { spec, out: root } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", spec.display())))?;
            let spec = ExperimentSpec::parse(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", spec.display())))?;
            let report = experiment::run_experiment(&spec, &root)?;
            writeln!(
                out,
                "{} sessions written under {}",
                report.rows.len(),
                report.dir.display()
            )
            .map_err(io)?;
            out.write_all(relig_text(&report.table).as_bytes())
                .map_err(io)
        }
        Command::Analyze { dir, table, replay } => {
            let report = analyze::analyze(&dir, replay)?;
            writeln!(
                out,
                "{} logs, {} finished, {} open",
                report.files,
                report.sessions.len(),
                report.open
            )
            .map_err(io)?;
            for m in &report.mismatches {
                writeln!(out, "MISMATCH {}: {}", m.path.display(), m.detail).map_err(io)?;
            }
            if table == Some(Table::Relig) && !report.sessions.is_empty() {
                let t = relative_ig_table(&report.sessions)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                out.write_all(relig_text(&t).as_bytes()).map_err(io)?;
            }
            if report.mismatches.is_empty() {
                writeln!(out, "no mismatches").map_err(io)
            } else {
                Err(CliError::Mismatch(report.mismatches.len()))
            }
        }
        Command::Serve {
            addr,
            token,
            out: root,
        } => {
            let config = ServiceConfig {
                operator_token: token,
                log_dir: Some(root.join("live")),
            };
            let state = AppState::recover(config).map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(
                out,
                "serving {} session(s) on http://{addr}",
                state.store().len()
            )
            .map_err(io)?;
            out.flush().map_err(io)?;
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            rt.block_on(tom2_service::serve(addr, state)).map_err(io)
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
