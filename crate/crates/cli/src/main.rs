//! `coinlab` command-line driver.
//!
//! Exit status: 0 all checks pass, 1 a bound is violated, 2 usage or parse
//! error, 3 infeasible request (cap exceeded, hypothesis or precondition
//! not met).

mod commands;
mod config;
mod verify;

use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;

use commands::RoundingArgs;
use config::{Command, RunConfig};
use verify::VerifyArgs;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
    Infeasible,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Violation => 1,
            Status::Infeasible => 3,
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<coinlab::Error>() {
        Some(coinlab::Error::CapExceeded { .. })
        | Some(coinlab::Error::HypothesisFailed { .. })
        | Some(coinlab::Error::Precondition(_)) => 3,
        Some(coinlab::Error::NumericalFault(_)) => 1,
        _ => 2,
    }
}

fn single_seed(cfg: &RunConfig) -> Result<u64> {
    match cfg.seed.single() {
        Some(s) => Ok(s),
        None => bail!("seed ranges are only accepted by the rounding subcommand"),
    }
}

fn run(cfg: &RunConfig, out: &mut impl Write) -> Result<Status> {
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    if !matches!(cfg.command, Command::Rounding { .. }) {
        single_seed(cfg)?;
    }
    let format = cfg.format();
    match &cfg.command {
        Command::Analyze { spec, top, spectrum, save_table } => {
            commands::analyze(out, format, spec, *top, *spectrum, save_table.as_deref())
        }
        Command::Coin { spec, eps } => commands::coin(out, format, spec, eps),
        Command::Verify {
            suite,
            functions,
            exhaustive_n,
            class,
            eps_grid,
            n,
            eps,
            eps0,
            b,
            width,
            samples,
            cap,
            sample,
            members,
        } => {
            let args = VerifyArgs {
                functions,
                exhaustive_n: *exhaustive_n,
                class: class.as_ref(),
                eps_grid: eps_grid.as_ref(),
                n: *n,
                eps: *eps,
                eps0: *eps0,
                b: *b,
                width: *width,
                samples: *samples,
                cap: *cap,
                sample: *sample,
                members: *members,
                seed: single_seed(cfg)?,
                tolerance: cfg.tolerance,
            };
            verify::verify(out, format, *suite, &args)
        }
        Command::Closure { class, eps_grid, cap, sample } => {
            commands::closure(out, format, class, eps_grid, *cap, *sample, single_seed(cfg)?)
        }
        Command::Rounding {
            n,
            b,
            samples,
            trials,
            eps_list,
            confidence,
            min_pass_fraction,
            samples_csv,
        } => {
            let args = RoundingArgs {
                n: *n,
                b: *b,
                samples: *samples,
                trials: *trials,
                eps_list,
                confidence: *confidence,
                min_pass_fraction: *min_pass_fraction,
                samples_csv: samples_csv.as_deref(),
            };
            commands::rounding(out, format, cfg.seed, &args)
        }
        Command::Sweep { specs, eps } => commands::sweep(out, format, specs, eps),
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    if cfg.print_config {
        println!("{}", cfg.normalized().canonical());
        return ExitCode::SUCCESS;
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(&cfg, &mut out).and_then(|s| {
        out.flush()?;
        Ok(s)
    });
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            let _ = out.flush();
            if e.downcast_ref::<io::Error>().map(|io| io.kind()) == Some(io::ErrorKind::BrokenPipe) {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
