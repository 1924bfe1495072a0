use std::process::ExitCode;

use clap::Parser;
use jpp_cli::error::{EXIT_OK, EXIT_USAGE};
use jpp_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(r) => {
            print!("{}", r.summary);
            for p in &r.reports {
                println!("wrote {}", p.display());
            }
            ExitCode::from(r.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
