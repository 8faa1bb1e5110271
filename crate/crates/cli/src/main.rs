use std::process::ExitCode;

use hetlock_cli::config::config_path;
use hetlock_cli::{parse_config, run, Outcome, UsageError};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let text = match config_path(&argv) {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let cfg = match parse_config(&argv, text.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cfg) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Degraded) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
