//! `tfavar` command-line interface.

mod cli;

use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match cli::run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(cli::Failure::Usage(e)) => {
            // clap formats its own help/usage output and exit code.
            e.exit()
        }
        Err(cli::Failure::Run(e)) => {
            let stage = e.stage().map_or_else(|| "-".to_string(), |s| s.to_string());
            eprintln!(
                "error: category={} stage={} message={:?}",
                e.category(),
                stage,
                e.to_string()
            );
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
