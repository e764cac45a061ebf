use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qfft::cli::Cli;

fn main() -> ExitCode {
    let cfg = Cli::parse().into_config();
    match qfft::run(&cfg) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&out.stdout).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(qfft::error::EXIT_IO as u8);
            }
            for p in out.written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
