use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use peelmap_cli::{output, run, ExperimentConfig};

fn main() -> ExitCode {
    let cfg = match ExperimentConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cfg) {
        Ok((outcome, paths)) => {
            match paths {
                Some((csv, json)) => eprintln!("wrote {} and {}", csv.display(), json.display()),
                None => {
                    let bytes = output::json_bytes(&outcome.summary).unwrap_or_default();
                    let _ = std::io::stdout().write_all(&bytes);
                }
            }
            if !outcome.pass {
                eprintln!("acceptance flags failed");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("peelmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
