//! `schwarz`: batch driver for the Dirichlet solver.
//!
//! Exit codes: 0 success, 1 failed checks or I/O errors, 2 configuration
//! errors, 3 contraction violated, 4 other numerical failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use schwarz_core::Error;

use config::Mode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::ContractionViolated { .. } => 3,
                Error::InvalidGeometry(_)
                | Error::AnglesCoincide { .. }
                | Error::InvalidCuts(_)
                | Error::InvalidBoundaryData(_)
                | Error::InvalidDiscretization(_) => 2,
                _ => 4,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "schwarz", version, about = "Dirichlet problems on circular annuli by a contraction form of the Schwarz alternating method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `solver.mode`.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Truncation order; overrides `solver.t`.
    #[arg(long)]
    t: Option<usize>,
    /// Fixed-point tolerance; overrides `solver.tol`.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve and write field.csv and report.json.
    Solve(Common),
    /// Run the invariant checks and write verify.json.
    Verify(Common),
    /// Closed-form error against the fixed point for t = 0..=T; writes converge.csv.
    Converge(Common),
    /// Write geometry.csv with the boundary circles and the cuts.
    EmitGeometry(Common),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (Command::Solve(common) | Command::Verify(common) | Command::Converge(common) | Command::EmitGeometry(common)) =
        &cli.command;
    let mut cfg = config::load(&common.config)?;
    if let Some(mode) = common.mode {
        cfg.solver.mode = mode;
    }
    if let Some(t) = common.t {
        cfg.solver.t = t;
    }
    if let Some(tol) = common.tol {
        cfg.solver.tol = tol;
    }
    let problem = cfg.build()?;
    let out = common.out.clone().or_else(|| problem.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let start = Instant::now();
    let ok = match &cli.command {
        Command::Solve(_) => {
            let report = commands::cmd_solve(&problem, &out)?;
            eprintln!("solve: N = {}, q = {:.3e}, {} points", report.n, report.q, report.points);
            true
        }
        Command::Verify(_) => {
            let report = commands::cmd_verify(&problem, &out)?;
            for c in &report.checks {
                eprintln!("{:<20} {} ({:.3e} <= {:.1e})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.value, c.threshold);
            }
            report.all_pass()
        }
        Command::Converge(_) => {
            let report = commands::cmd_converge(&problem, problem.solver.t, &out)?;
            report.all_pass()
        }
        Command::EmitGeometry(_) => {
            let rows = commands::cmd_emit_geometry(&problem, &out)?;
            eprintln!("emit-geometry: {rows} rows");
            true
        }
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
