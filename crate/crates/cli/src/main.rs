mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use report::{digest, semantic_args, Inputs, Report, Timings};

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckKkt { .. } => "check-kkt",
        Command::SolveKkt { .. } => "solve-kkt",
        Command::Certify { .. } => "certify",
        Command::Pareto { .. } => "pareto",
        Command::Nondominance { .. } => "nondominance",
        Command::Bridge { .. } => "bridge",
        Command::Theorem { .. } => "theorem",
        Command::RunExample { .. } => "run-example",
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let (outcome, sources) = match commands::run(&cli.command, cli.tol) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let args = semantic_args(&argv);
    let sources: Vec<&str> = sources.iter().map(String::as_str).collect();
    let report = Report {
        command: command_name(&cli.command).to_string(),
        inputs: Inputs { digest: digest(&args, &sources), args },
        passed: outcome.passed,
        results: outcome.results,
        witnesses: outcome.witnesses,
        timings: (!cli.no_timings).then(|| Timings { total_ms: start.elapsed().as_secs_f64() * 1e3 }),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
