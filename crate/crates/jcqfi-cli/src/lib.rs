//! Front end for the `jcqfi` library: parameter sweeps written as CSV or
//! JSON tables, and the verification suite.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use config::{Cli, Command, Mode, SweepConfig};
use error::CliError;

/// Executes a parsed command line, writing its table or report.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (mode, common) = match &cli.command {
        Command::Scan(c) => (Mode::Scan, c),
        Command::Slice { common, .. } => (Mode::Slice, common),
        Command::Collision { common, .. } => (Mode::Collision, common),
        Command::Lindblad(c) => (Mode::Lindblad, c),
        Command::Verify { common, .. } => (Mode::Verify, common),
    };
    let cfg = SweepConfig::from_args(mode, common)?;
    let table = match cli.command {
        Command::Scan(_) => commands::run_scan(&cfg)?,
        Command::Slice { spacing, .. } => commands::run_slice(&cfg, spacing)?,
        Command::Collision { steps, .. } => commands::run_collision(&cfg, steps)?,
        Command::Lindblad(_) => commands::run_lindblad(&cfg)?,
        Command::Verify { tol_scale, .. } => {
            if !(tol_scale >= 0.0) {
                return Err(CliError::Usage(format!("--tol-scale must be non-negative, got {tol_scale}")));
            }
            let report = verify::run_verify(cfg.seed, tol_scale);
            output::emit(cfg.output_path.as_deref(), |w| {
                serde_json::to_writer_pretty(&mut *w, &report)?;
                writeln!(w)
            })?;
            if !cfg.quiet {
                for c in report.checks.iter().filter(|c| !c.pass) {
                    eprintln!("FAIL {}: {:e} > {:e}", c.name, c.value, c.tolerance);
                }
            }
            return if report.all_pass() {
                Ok(())
            } else {
                Err(CliError::VerifyFailed { failed: report.failed, total: report.checks.len() })
            };
        }
    };
    output::emit(cfg.output_path.as_deref(), |w| table.write(w, cfg.format))?;
    Ok(())
}
