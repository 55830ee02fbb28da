//! `grasshopper` command-line driver.
//!
//! Each command writes its files and a `result.json` into `--out` and prints
//! the same JSON document on stdout. Failures print `{"schema":1,"error":…}`
//! and exit nonzero (2 for usage errors).

mod args;
mod commands;
mod output;

use args::Cli;
use clap::error::ErrorKind;
use clap::Parser;
use output::{CliError, CliResult};

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("GRASSHOPPER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::bad_flag(format!("GRASSHOPPER_THREADS=`{raw}` is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("Io", e.to_string()))?;
    }
    Ok(())
}

fn clap_message(e: &clap::Error) -> String {
    let text = e.render().to_string();
    let first = text.lines().next().unwrap_or_default();
    first.trim_start_matches("error: ").to_string()
}

fn parse(argv: Vec<String>) -> Result<CliResult<Cli>, clap::Error> {
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(Ok(cli)),
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Err(e),
            ErrorKind::InvalidSubcommand => Ok(Err(CliError::new("UnknownCommand", clap_message(&e)))),
            _ => Ok(Err(CliError::bad_flag(clap_message(&e)))),
        },
    }
}

fn main() {
    let parsed = match parse(std::env::args().collect()) {
        Ok(p) => p,
        Err(help) => help.exit(),
    };
    let result = configure_threads().and_then(|_| parsed).and_then(commands::run);
    match result {
        Ok(doc) => {
            println!("{}", serde_json::to_string_pretty(&doc).expect("JSON value serialises"));
        }
        Err(e) => {
            println!("{}", e.to_json());
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
