//! Command-line front end for the rimming-flow solvers.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod verify;

use clap::Parser;

use crate::args::{Cli, Command, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::verify::{checks, run_checks, VerifyContext};

fn verify_cmd(args: &VerifyArgs) -> CliResult<()> {
    if args.list {
        for c in checks() {
            println!("{:<30} criterion {:>2}  budget {:>4} s  {}", c.name, c.criterion, c.budget.as_secs(), c.summary);
        }
        return Ok(());
    }
    let ctx = VerifyContext { seed: args.common.seed.unwrap_or(VerifyContext::default().seed) };
    let reports = run_checks(&args.only, &ctx).map_err(CliError::Usage)?;
    for r in &reports {
        println!("{:<5} {:<30} {:>8.2} s  {}", r.status.to_uppercase(), r.name, r.seconds, r.detail);
    }
    if let Some(target) = &args.common.json {
        output::write_json(target, &reports)?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification { failed: failed.len(), names: failed.join(", ") })
    }
}

/// Dispatches a parsed command.
pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Steady(a) => commands::steady(a),
        Command::ReducedF(a) => commands::reduced_f(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::SlowOde(a) => commands::slow_ode(a),
        Command::PhasePortrait(a) => commands::phase_portrait_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

/// Parses `argv` (after config-file expansion), runs the command and returns
/// the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let argv = match config::expand_args(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
