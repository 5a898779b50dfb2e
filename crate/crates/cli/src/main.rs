use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cpscause_cli::{cmd_analyze, cmd_simulate, cmd_verify, AnalyzeOptions, CliError};

/// Actual-cause analysis for cyber-physical system trajectories.
#[derive(Parser)]
#[command(name = "cpscause", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a model under a scenario and write the trajectory CSV.
    Simulate {
        /// Model JSON path, or builtin:NAME.
        #[arg(long)]
        model: String,
        /// Scenario trajectory CSV fixing the exogenous inputs.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Override the model's sampling step, in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Output CSV path.
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Search a failing run for actual causes and write a report.
    Analyze {
        /// Model JSON path, or builtin:NAME.
        #[arg(long)]
        model: String,
        /// Scenario trajectory CSV fixing the exogenous inputs.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Effect expression; defaults to the model's packaged one.
        #[arg(long)]
        phi: Option<String>,
        /// Comma-separated analysis variables; defaults to all endogenous.
        #[arg(long, value_delimiter = ',')]
        endogenous: Option<Vec<String>>,
        /// Finest number of slices per variable domain.
        #[arg(long, default_value_t = 10)]
        max_granularity: usize,
        /// Largest variable tuple considered as one cause.
        #[arg(long, default_value_t = 3)]
        max_cause_size: usize,
        /// Seed for the genetic alternative search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the model's sampling step, in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Directory for the report and trajectory artifacts.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Genetic generations per query at full budget.
        #[arg(long, default_value_t = 40)]
        budget_generations: usize,
    },
    /// Re-check every cause recorded in a report.
    Verify {
        /// Path to a report.json produced by analyze.
        #[arg(long)]
        report: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate {
            model,
            scenario,
            dt,
            out,
        } => {
            cmd_simulate(&model, scenario.as_deref(), dt, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            model,
            scenario,
            phi,
            endogenous,
            max_granularity,
            max_cause_size,
            seed,
            dt,
            out_dir,
            budget_generations,
        } => {
            let opts = AnalyzeOptions {
                model,
                scenario,
                phi,
                endogenous,
                max_granularity,
                max_cause_size,
                seed,
                dt,
                out_dir,
                budget_generations,
            };
            let report = cmd_analyze(&opts)?;
            for (k, record) in report.records.iter().enumerate() {
                let parts: Vec<String> = record
                    .variables
                    .iter()
                    .zip(&record.intervals)
                    .map(|(v, iv)| format!("{v}[{}, {})", iv.lo, iv.hi))
                    .collect();
                let w = if record.witness.w.is_empty() {
                    String::new()
                } else {
                    format!(" under W={{{}}}", record.witness.w.join(", "))
                };
                println!(
                    "cause {k}: {{{}}}{} (granularity {})",
                    parts.join(", "),
                    w,
                    record.granularity
                );
            }
            println!(
                "{} cause(s); report written to {}",
                report.records.len(),
                opts.out_dir.join("report.json").display()
            );
            if report.records.is_empty() {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Verify { report } => {
            let verdicts = cmd_verify(&report)?;
            let mut all = true;
            for (k, v) in verdicts.iter().enumerate() {
                println!(
                    "record {k}: {} ({})",
                    if v.passed { "PASS" } else { "FAIL" },
                    v.note
                );
                all &= v.passed;
            }
            if all {
                println!("verification: PASS");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("verification: FAIL");
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
