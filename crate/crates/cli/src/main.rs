//! `vpal`: generate an inverse problem, run the solvers, report metrics.
//!
//! Settings come from built-in defaults, then an optional TOML file
//! (`--config`), then flags; later sources win. Every command writes its
//! resolved configuration to the output directory, so a run can always be
//! reproduced from its artifacts.

mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{CommandKind, Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "vpal",
    version,
    about = "Matrix-free generalized lasso reconstructions",
    arg_required_else_help = true
)]
struct Cli {
    /// TOML file holding the same settings as the flags.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Option<CommandKind>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.stderr_line());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    if cli.command.is_some() {
        cfg.command = cli.command;
    }
    let command = cfg.command.ok_or_else(|| {
        CliError::usage(
            "no command: pass solve, compare, sweep or autoselect, or set `command` in the config file",
        )
    })?;
    cfg.validate()?;

    std::fs::create_dir_all(&cfg.output.out)?;
    std::fs::write(cfg.output.out.join("run_config.toml"), cfg.to_toml())?;

    match command {
        CommandKind::Solve => commands::solve(&cfg),
        CommandKind::Compare => commands::compare(&cfg),
        CommandKind::Sweep => commands::sweep(&cfg),
        CommandKind::Autoselect => commands::autoselect(&cfg),
    }
}
