use std::process::ExitCode;

use clap::Parser;
use polyproj::config::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match polyproj::run(&cli) {
        Ok(text) => {
            eprint!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("polyproj {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
