use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use disclosure_cli::{execute, Cli, CONFIG_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match execute(&cli, env_path.as_deref(), &mut io::stdout().lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
