mod commands;
mod error;
mod front;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slimtune::cost::DEFAULT_CARBON_INTENSITY;
use slimtune::prune::SizeConstraint;

use commands::{ReportArgs, TuneArgs};

#[derive(Parser)]
#[command(name = "slimtune", version, about = "Prune, fit and tune compact code-model configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop values that cannot appear in any configuration within the budget.
    Prune {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value_t = SizeConstraint::DEFAULT_BUDGET_MB)]
        budget_mb: f64,
        #[arg(long, default_value_t = 13)]
        partitions: usize,
        /// Pruned space file; a `.report.json` is written beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample, score and fit an effectiveness indicator.
    Fit {
        #[arg(long)]
        space: PathBuf,
        /// `synthetic`, `synthetic:noise=<sigma>` or `external:<command>`.
        #[arg(long, default_value = "synthetic")]
        oracle: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model file; `.table.jsonl` and `.fit.json` are written beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for size/GFLOPs/effectiveness trade-offs.
    Tune {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = SizeConstraint::DEFAULT_BUDGET_MB)]
        budget_mb: f64,
        #[arg(long, default_value_t = 20)]
        pop: usize,
        #[arg(long, default_value_t = 50)]
        generations: usize,
        #[arg(long, default_value_t = 0.6)]
        crossover_rate: f64,
        #[arg(long, default_value_t = 0.1)]
        mutation_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Front file; `.log.jsonl` and `.manifest.json` are written beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a front, the deployment pick and a workload's emissions.
    Report {
        #[arg(long)]
        front: PathBuf,
        #[arg(long, default_value_t = SizeConstraint::DEFAULT_BUDGET_MB)]
        target_mb: f64,
        #[arg(long, default_value_t = 1.0)]
        runtime_hours: f64,
        #[arg(long, default_value_t = 0.32)]
        power_kw: f64,
        #[arg(long, default_value_t = DEFAULT_CARBON_INTENSITY)]
        carbon_intensity: f64,
        /// Re-validate every member against this space.
        #[arg(long)]
        space: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prune { space, budget_mb, partitions, out } => {
            commands::cmd_prune(space, *budget_mb, *partitions, out)
        }
        Command::Fit { space, oracle, samples, seed, out } => {
            commands::cmd_fit(space, oracle, *samples, *seed, out)
        }
        Command::Tune {
            space,
            model,
            budget_mb,
            pop,
            generations,
            crossover_rate,
            mutation_rate,
            seed,
            out,
        } => commands::cmd_tune(&TuneArgs {
            space_file: space,
            model_file: model,
            budget_mb: *budget_mb,
            population: *pop,
            generations: *generations,
            crossover_rate: *crossover_rate,
            mutation_rate: *mutation_rate,
            seed: *seed,
            out,
        }),
        Command::Report {
            front,
            target_mb,
            runtime_hours,
            power_kw,
            carbon_intensity,
            space,
        } => commands::cmd_report(&ReportArgs {
            front_file: front,
            target_mb: *target_mb,
            runtime_hours: *runtime_hours,
            power_kw: *power_kw,
            carbon_intensity: *carbon_intensity,
            space_file: space.as_deref(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
