use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use steelrank_cli::config::Cli;
use steelrank_cli::CliError;

/// Worker cap from STEELRANK_THREADS; unset or empty means no cap.
fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("STEELRANK_THREADS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("STEELRANK_THREADS must be a positive integer, got '{v}'"))),
        },
        _ => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let report = steelrank_cli::run(&cli.config(), thread_cap()?)?;
    let text = report.render();
    match cli.output_file() {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
