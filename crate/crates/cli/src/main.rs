use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = blockpca_cli::Cli::parse();
    let result =
        blockpca_cli::experiment::configure_threads().and_then(|()| blockpca_cli::run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
