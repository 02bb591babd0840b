//! Command line front end for `polyproj-core`: bound tables, sampled
//! checks of the witness and its averages, and the discrete projection
//! oracle, with CSV/JSON output and TOML config files.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod output;

use config::{Cli, Command, Settings};
use error::CliError;

/// Runs one command. On success returns the summary for standard error.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let s = Settings::resolve(&cli.command)?;
    match &cli.command {
        Command::Bound(_) => commands::bound::bound(&s),
        Command::Table(_) => commands::bound::table(&s),
        Command::WitnessCheck(_) => commands::witness::witness_check(&s),
        Command::AverageCheck(_) => commands::average::average_check(&s),
        Command::Oracle(_) => commands::oracle::oracle(&s),
    }
}
