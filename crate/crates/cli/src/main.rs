use std::path::PathBuf;
use std::process::ExitCode;

use afpo_core::app::{self, Overrides};
use afpo_core::Error;
use clap::{Args, Parser, Subcommand};

/// Actuarially fair Pareto optimal risk sharing.
#[derive(Parser)]
#[command(name = "afpo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a pool and write the rule table and report.
    Solve {
        config: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Also write per-participant CDFs of the shared risks (optionally to PATH).
        #[arg(long, value_name = "PATH", num_args = 0..=1)]
        emit_cdf: Option<Option<PathBuf>>,
    },
    /// Compare the shared risks of two pools in convex order.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write the crossing report here instead of standard output.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Write a seeded random pool configuration.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Lattice step in monetary units.
    #[arg(long)]
    delta: Option<f64>,
}

impl SolverFlags {
    fn overrides(&self, emit_cdf: Option<Option<PathBuf>>) -> Overrides {
        Overrides { epsilon: self.epsilon, max_iter: self.max_iter, delta: self.delta, emit_cdf }
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, solver, emit_cdf } => match app::run_solve(&config, &solver.overrides(emit_cdf)) {
            Ok(out) => {
                let s = &out.summary;
                eprintln!(
                    "{} after {} iterations (distance {:.3e}); rule table {}, report {}",
                    if out.converged { "converged" } else { "did not converge" },
                    s.iterations,
                    s.distance_trace.last().copied().unwrap_or(f64::NAN),
                    out.rule_table.display(),
                    out.report.display()
                );
                ExitCode::from(out.exit_code() as u8)
            }
            Err(e) => fail(e),
        },
        Command::Compare { config_a, config_b, solver, out } => {
            match app::run_compare(&config_a, &config_b, &solver.overrides(None), out.as_deref()) {
                Ok(res) if res.report.converged.iter().all(|c| *c) => ExitCode::SUCCESS,
                Ok(_) => {
                    eprintln!("warning: a pool did not converge");
                    ExitCode::from(2)
                }
                Err(e) => fail(e),
            }
        }
        Command::Gen { seed, n, out } => match app::run_pool_gen(seed, n, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
    }
}
