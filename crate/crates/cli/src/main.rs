mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{dispatch, Run, COMMANDS};
use config::RunConfig;

/// Numerical verification suite for rough-wavespeed local energy decay.
#[derive(Debug, Parser)]
#[command(name = "logdecay", version)]
struct Cli {
    /// One of: phase, weight-check, goal-est, carleman-test, specfun-audit,
    /// resolvent-sweep, neumann, fredholm, decay-sim, stone-compare, inequalities.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(COMMANDS))]
    command: String,
    /// INI-style configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// Worker threads for parallel sweeps (rayon default when omitted).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::load(&cli.command, cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let run = Run { cfg: &cfg, seed: cli.seed, plot: cli.plot };
    let outcome = match dispatch(&run) {
        Ok(o) => o,
        Err(e) => {
            println!("FAIL {}: {e}", cli.command);
            return ExitCode::from(1);
        }
    };
    if let Err(e) = outcome.write(&dir, &cli.command) {
        eprintln!("cannot write to {}: {e}", dir.display());
        return ExitCode::from(1);
    }
    for c in &outcome.checks {
        println!("{} {} [{}]: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.anchor, c.detail);
    }
    if outcome.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
