use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use localgd_cli::{execute, with_thread_pool, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_thread_pool(|| execute(&cli)).and_then(|r| r) {
        Ok(report) => {
            let _ = std::io::stdout().write_all(report.stdout.as_bytes());
            let _ = std::io::stderr().write_all(report.stderr.as_bytes());
            ExitCode::from(report.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
