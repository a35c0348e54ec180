use std::process::ExitCode;

use clap::Parser;
use jcqfi_cli::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match jcqfi_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jcqfi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
