use std::process::ExitCode;

use clap::Parser;
use towerprod_cli::app::{execute, Cli};

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("TOWERPROD_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| format!("TOWERPROD_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("TOWERPROD_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    print!("{}", outcome.stdout);
    if let Err(e) = outcome.write() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
