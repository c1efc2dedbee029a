use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holonome::examples::{example, EXAMPLES};
use holonome::{load_scenario, run_scenario, RunOptions};

#[derive(Parser)]
#[command(name = "holonome", version, about = "Parallel transport, holonomy and connection reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario and write report.json.
    Run {
        scenario: PathBuf,
        /// Output directory for report.json and CSV files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write transport traces as CSV.
        #[arg(long)]
        trace_csv: bool,
        /// Override the solver step.
        #[arg(long)]
        h: Option<f64>,
        /// Override the solver tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Load and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// List the shipped scenarios, or print one.
    Examples { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            trace_csv,
            h,
            tol,
        } => {
            let mut s = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            if let Err(e) = s.override_solver(h, tol) {
                return fail(&e);
            }
            let opts = RunOptions {
                out_dir: Some(out.clone()),
                trace_csv,
                timestamp: None,
            };
            match run_scenario(&s, &opts) {
                Ok(outcome) => {
                    for t in &outcome.report.tasks {
                        match &t.error {
                            Some(e) => println!("[{}] {:<20} {}  {e}", t.index, t.kind, t.status),
                            None => println!("[{}] {:<20} {}", t.index, t.kind, t.status),
                        }
                    }
                    println!("report: {}", out.join("report.json").display());
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                println!(
                    "ok: {} path(s), {} famil{}, {} task(s)",
                    s.paths.len(),
                    s.families.len(),
                    if s.families.len() == 1 { "y" } else { "ies" },
                    s.tasks().len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Examples { name: None } => {
            for (file, _) in EXAMPLES {
                println!("{file}");
            }
            ExitCode::SUCCESS
        }
        Command::Examples { name: Some(name) } => match example(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no shipped scenario named `{name}`");
                ExitCode::from(1)
            }
        },
    }
}

fn fail(e: &dyn std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}
