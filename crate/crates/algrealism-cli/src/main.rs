//! `algrealism`: seeded experiments for realism-constrained lossy
//! compression.
//!
//! Exit codes: 0 when every checked bound holds, 2 when a measured value
//! violates a bound, 1 on input errors (bad flags, malformed config or
//! block files, infeasible budgets).

mod args;
mod commands;
mod inputs;

use anyhow::Context;
use args::Cli;
use clap::error::ErrorKind;
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let requested = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if requested {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(&cli) {
        Ok(exit) => ExitCode::from(exit),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Caps the rayon worker count from `ALGREALISM_THREADS`. Results do not
/// depend on the worker count; this only bounds CPU use.
fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("ALGREALISM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("ALGREALISM_THREADS must be a positive integer, got {raw:?}"))?;
    // Fails only if a global pool already exists, which keeps its size.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let resolver = inputs::Resolver::load(cli.config.as_deref())?;
    let outcome = commands::run(&cli.command, &resolver)?;

    let pretty =
        serde_json::to_string_pretty(&outcome.report).context("report serialization failed")?;
    println!("{pretty}");
    if let Some(path) = &cli.json {
        std::fs::write(path, format!("{pretty}\n"))
            .with_context(|| format!("cannot write JSON report to {}", path.display()))?;
    }
    if let Some(path) = &cli.csv {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot write CSV report to {}", path.display()))?;
        algrealism::experiments::report::write_csv(file, &outcome.rows)?;
    }
    Ok(outcome.exit)
}
