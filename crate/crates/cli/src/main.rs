use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tsq_core::scenario::config::load_config;
use tsq_core::scenario::runner::execute;
use tsq_core::Error;

#[derive(Parser)]
#[command(
    name = "tsq",
    about = "Time-symmetric transition amplitude scenarios",
    disable_version_flag = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a configuration file.
    Run { config: PathBuf },
    /// Parse and validate a configuration file without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("tsq {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.scenario.name());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run { config } => {
            let report = match load_config(&config).and_then(|cfg| execute(&cfg)) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            for (key, value) in report.numbers() {
                println!("{key} = {value:.11e}");
            }
            for (key, value) in &report.notes {
                println!("{key} = {value}");
            }
            println!("wall_time = {:.3}", report.wall_time);
            println!("files = {}", report.files.len());
            ExitCode::SUCCESS
        }
    }
}
