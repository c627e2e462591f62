use std::process::ExitCode;

use clap::Parser;
use glkit::cli::{self, Cli};

fn main() -> ExitCode {
    let parsed = Cli::parse();
    match cli::run(parsed) {
        Ok(text) => {
            println!("{}", text.trim_end_matches('\n'));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("glkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
