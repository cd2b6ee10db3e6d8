//! Scenario-driven batch interface.
//!
//! Exit codes: 0 when every requested certification passes (solver refusals
//! on nonconvex routes count as answers, not failures, unless --strict);
//! 1 when a certification fails, a solve stalls, or --strict turns a refusal
//! into a failure; 2 on scenario schema or validation errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use magduality::error::Error;
use magduality::scenario;

#[derive(Parser)]
#[command(
    name = "magduality",
    about = "Dual magnetostatics formulations: solve, transfer, certify",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario pipeline and write its artifacts
    Run {
        scenario: PathBuf,
        /// Output directory (default: <scenario stem>_out next to the file)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat solver refusals as failures
        #[arg(long)]
        strict: bool,
    },
    /// Emit only the conjugate tables configured in a scenario
    ConjugateTable {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-certify a state directory written by `run` with the fields output
    Verify { state_dir: PathBuf },
}

fn default_out_dir(scenario: &Path) -> PathBuf {
    let stem = scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    scenario
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(format!("{stem}_out"))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Json(_)
        | Error::Scenario(_)
        | Error::InvalidGrid(_)
        | Error::InvalidMaterial(_)
        | Error::EmptyRegion => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    // Kernels are currently serial; the cap is validated for forward
    // compatibility so batch drivers can set it unconditionally.
    if let Ok(v) = std::env::var("MAGDUALITY_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {}
            _ => {
                eprintln!("magduality: MAGDUALITY_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }

    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, out, strict } => {
            let out = out.unwrap_or_else(|| default_out_dir(&scenario));
            match scenario::run_scenario(&scenario, &out, strict) {
                Ok(summary) => {
                    for (label, ok) in &summary.certifications {
                        println!("{label}: {}", if *ok { "pass" } else { "FAIL" });
                    }
                    for r in &summary.refusals {
                        println!("{r}: refused (nonconvex route)");
                    }
                    for f in &summary.failures {
                        println!("{f}");
                    }
                    println!("artifacts: {}", out.display());
                    let failed = !summary.failures.is_empty()
                        || !summary.all_certifications_pass()
                        || (strict && !summary.refusals.is_empty());
                    if failed {
                        1
                    } else {
                        0
                    }
                }
                Err(e) => {
                    eprintln!("magduality run: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::ConjugateTable { scenario: path, out } => {
            let out = out.unwrap_or_else(|| default_out_dir(&path));
            match run_tables(&path, &out) {
                Ok(0) => {
                    eprintln!("magduality conjugate-table: scenario defines no conjugate_table outputs");
                    2
                }
                Ok(count) => {
                    println!("wrote {count} table(s) to {}", out.display());
                    0
                }
                Err(e) => {
                    eprintln!("magduality conjugate-table: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Verify { state_dir } => match scenario::verify_state_dir(&state_dir) {
            Ok((verdict, json)) => {
                println!("{json}");
                if verdict.is_critical_state {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("magduality verify: {e}");
                exit_code_for(&e)
            }
        },
    };
    ExitCode::from(code)
}

fn run_tables(path: &Path, out: &Path) -> magduality::Result<usize> {
    let s = scenario::load_scenario(path)?;
    std::fs::create_dir_all(out)?;
    let mut count = 0;
    for o in &s.outputs {
        if let scenario::OutputJson::ConjugateTable { function, range, samples } = o {
            let csv = scenario::conjugate_table_csv(&s.model, function, *range, *samples)?;
            std::fs::write(out.join(format!("conjugate_table_{function}.csv")), csv)?;
            count += 1;
        }
    }
    Ok(count)
}
