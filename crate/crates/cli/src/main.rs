use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use cocycle_core::config::ExperimentConfig;
use cocycle_core::report::{emit_report, Format};
use cocycle_core::runner::{run_adjudication, run_config_with};
use cocycle_core::Execution;

/// Exit status when some check ran and failed; usage and config errors use 2.
const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "cocycle-lab",
    version,
    about = "Numerical checks for Markovian cocycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the commands listed in a config file.
    Run {
        config: PathBuf,
        /// Write report files here instead of printing JSON to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json", value_parser = parse_format)]
        format: Format,
        /// Data-parallel execution inside each command.
        #[arg(long)]
        parallel: bool,
    },
    /// Score every cocycle variant and print the one that passes.
    Adjudicate {
        config: PathBuf,
        #[arg(long)]
        parallel: bool,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: cocycle_core::Error| e.to_string())
}

fn execution(parallel: bool) -> Execution {
    if parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Cmd::Run {
            config,
            out,
            format,
            parallel,
        } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let run = run_config_with(cfg, execution(parallel))?;
            match out {
                Some(dir) => {
                    for path in emit_report(&run, format, &dir)? {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => println!("{}", run.payload()?),
            }
            for r in &run.reports {
                eprintln!("[{}] {}", if r.pass { "PASS" } else { "FAIL" }, r.command);
            }
            Ok(run.pass)
        }
        Cmd::Adjudicate { config, parallel } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let adj = run_adjudication(&cfg, execution(parallel))?;
            println!("{}", score_table(&adj));
            match adj.selected {
                Some(v) => {
                    println!("selected: {v}");
                    Ok(true)
                }
                None => {
                    println!("selected: none");
                    Ok(false)
                }
            }
        }
    }
}

fn score_table(adj: &cocycle_core::cocycle::Adjudication) -> String {
    let mut lines = vec![format!(
        "{:<18} {:>12} {:>12} {:>12} {:>12}  pass",
        "variant", "cocycle", "unitarity", "markov", "limit"
    )];
    for s in &adj.scores {
        lines.push(format!(
            "{:<18} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}  {}",
            s.variant.to_string(),
            s.cocycle,
            s.unitarity,
            s.markov,
            s.limit,
            s.pass
        ));
    }
    lines.join("\n")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
