use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rigid_dmoc::cli::{self, CliError, SolveOutputs};
use rigid_dmoc::validate::Check;

/// Minimum-torque rigid-body attitude maneuvers on SO(3).
#[derive(Parser)]
#[command(name = "rigid-dmoc", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the forced rigid body under a given torque history.
    Simulate {
        maneuver: PathBuf,
        /// CSV with tx,ty,tz columns (N-1 interior rows or N+1 rows for k = 0..N).
        #[arg(long)]
        torques: PathBuf,
        /// Trajectory CSV; printed to stdout when neither this nor output.csv is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the discrete optimal control problem.
    Solve {
        maneuver: PathBuf,
        /// Trajectory CSV; printed to stdout when neither this nor output.csv is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run verification checks and report metrics.
    Validate {
        maneuver: PathBuf,
        /// Comma-separated subset of equivariance,refinement,oracle,continuous,multipliers.
        #[arg(long, default_value = "equivariance,refinement,oracle,continuous,multipliers")]
        checks: String,
        /// Report path; printed to stdout when neither this nor output.report is set.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Simulate { maneuver, torques, out } => {
            let csv = cli::cmd_simulate(&maneuver, &torques, out.as_deref())?;
            if out.is_none() && cli::load_maneuver(&maneuver)?.output.csv.is_none() {
                print!("{csv}");
            }
        }
        Command::Solve { maneuver, out, svg, report } => {
            let to_stdout = out.is_none() && cli::load_maneuver(&maneuver)?.output.csv.is_none();
            let sol = cli::cmd_solve(&maneuver, &SolveOutputs { csv: out, svg, report })?;
            if to_stdout {
                print!("{}", cli::trajectory_csv(&sol.trajectory));
            }
            eprintln!(
                "converged in {} iterations, residual {:e}, cost {}",
                sol.report.iterations, sol.report.final_residual, sol.cost
            );
        }
        Command::Validate { maneuver, checks, report } => {
            let checks: Vec<Check> = cli::parse_checks(&checks)?;
            let (rep, text) = cli::cmd_validate(&maneuver, &checks, report.as_deref())?;
            if report.is_none() && cli::load_maneuver(&maneuver)?.output.report.is_none() {
                print!("{text}");
            }
            cli::validation_verdict(&rep)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
