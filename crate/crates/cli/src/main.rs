use std::process::ExitCode;

use clap::Parser;
use qot_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("qotsim: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
