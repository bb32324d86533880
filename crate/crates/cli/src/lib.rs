//! `octdisp` command-line driver: configuration, file formats, plots and the
//! reproduction report.

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod plot;
pub mod reproduce;

use anyhow::Result;

use crate::cli::{Cli, Command};
use crate::config::ToolConfig;

/// Successful exit states; errors map to exit code 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Output written but a quality check failed.
    Flagged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Flagged => 2,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    let cfg = ToolConfig::resolve(cli.global.config.as_deref(), &cli.global.overrides())?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &cfg),
        Command::Calibrate(a) => commands::calibrate_cmd(a, &cfg),
        Command::Reconstruct(a) => commands::reconstruct_cmd(a, &cfg),
        Command::Tfa(a) => commands::tfa_cmd(a, &cfg),
        Command::Metrics(a) => commands::metrics_cmd(a, &cfg),
        Command::Reproduce(a) => reproduce::run(a, cfg.seed),
    }
}
