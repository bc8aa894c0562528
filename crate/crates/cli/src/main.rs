use std::process::ExitCode;

use clap::Parser;
use fdlcp_cli::{execute, resolve, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.command, cli.threads).and_then(|(command, threads)| {
        // Ignored if a pool already exists; only one is built per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
        execute(&command)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.report {
                if outcome.converged || !line.starts_with("warning") {
                    println!("{line}");
                } else {
                    eprintln!("{line}");
                }
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
