use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elflow::io::RunStatus;
use elflow::run::{run, RunError};
use elflow::scenario::SCENARIO_NAMES;
use elflow::verify::{self, Suite};

/// Solver and verification lab for nematic liquid-crystal flow in the
/// (velocity, deformation-gradient) formulation.
#[derive(Parser)]
#[command(name = "elflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run described by a flat key = value config file.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
    },
    /// Run a verification suite (operators | energy | picard | weakstrong | all).
    Verify {
        /// Suite name.
        suite: String,
    },
    /// Scenario utilities.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Manufactured-solution convergence ladder.
    Mms {
        /// Number of grid levels, starting at 16² and doubling.
        #[arg(long, default_value_t = 3)]
        refine: usize,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// List the bundled scenario constructors.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match run(&config) {
            Ok(summary) => {
                print!("{}", summary.to_text());
                ExitCode::from(summary.exit.exit_code() as u8)
            }
            Err(RunError::Config(err)) => {
                eprintln!("config error: {err}");
                ExitCode::from(RunStatus::ConfigError.exit_code() as u8)
            }
            Err(RunError::Scenario(err)) => {
                eprintln!("config error: {err}");
                ExitCode::from(RunStatus::ConfigError.exit_code() as u8)
            }
            Err(RunError::Io(err)) => {
                eprintln!("i/o error: {err}");
                ExitCode::from(1)
            }
        },
        Command::Verify { suite } => match Suite::parse(&suite) {
            Some(suite) => {
                let report = verify::run_suite(suite, None);
                report.print();
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(4)
                }
            }
            None => {
                eprintln!("unknown suite {suite:?}; pick one of operators, energy, picard, weakstrong, all");
                ExitCode::from(2)
            }
        },
        Command::Scenario { action: ScenarioAction::List } => {
            for name in SCENARIO_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Mms { refine } => {
            if refine == 0 {
                eprintln!("--refine must be at least 1");
                return ExitCode::from(2);
            }
            let ladder = verify::mms_ladder(refine);
            println!("{:>6} {:>12} {:>14} {:>8}", "n", "dt", "l2_error", "order");
            for lvl in &ladder {
                match lvl.order {
                    Some(order) => println!(
                        "{:>6} {:>12.4e} {:>14.6e} {:>8.3}",
                        lvl.n, lvl.dt, lvl.l2_error, order
                    ),
                    None => println!("{:>6} {:>12.4e} {:>14.6e} {:>8}", lvl.n, lvl.dt, lvl.l2_error, "-"),
                }
            }
            ExitCode::SUCCESS
        }
    }
}
