use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linear_dyna::harness::{run_experiment, ExperimentConfig};
use linear_dyna::verify::run_checks;
use linear_dyna::Error;

/// Linear Dyna experiments: Boyan chain and Mountain Car.
#[derive(Parser)]
#[command(name = "lindyna", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single-point configuration and write aggregated CSVs.
    Run(RunArgs),
    /// Run every (algorithm, alpha0, N0) cell of a grid configuration.
    Sweep(RunArgs),
    /// Check the analysis oracles against the planners on random instances.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override `run.seeds`.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit with status 2 if any run diverged.
    #[arg(long)]
    strict: bool,
}

const EXIT_ERROR: u8 = 1;
const EXIT_DIVERGED: u8 = 2;

fn execute(args: &RunArgs, sweep: bool) -> Result<ExitCode, Error> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(k) = args.seeds {
        cfg.seeds = k;
        cfg.validate()?;
    }
    if !sweep && cfg.is_grid() {
        return Err(Error::Config(
            "configuration lists several alpha0/n0 values; use `sweep`".into(),
        ));
    }
    let report = run_experiment(&cfg, &args.out, args.jobs)?;
    for cell in &report.cells {
        let last = cell
            .aggregate
            .final_point()
            .map_or("no aggregate (fewer than 2 valid runs)".to_string(), |p| {
                format!("episode {} mean {:.6} stderr {:.6}", p.episode, p.mean, p.stderr)
            });
        println!(
            "{:<32} runs {:>3} diverged {:>3}  {last}",
            cell.label, cell.aggregate.n_runs, cell.aggregate.n_diverged
        );
    }
    if sweep {
        for &(alg, k) in &report.best {
            let c = &report.cells[k].cell;
            println!("best {alg}: alpha0 = {}, n0 = {}", c.alpha0, c.n0);
        }
    }
    println!("wrote {} files to {}", report.files.len(), args.out.display());
    if args.strict && report.any_diverged() {
        eprintln!("error: at least one run diverged");
        return Ok(ExitCode::from(EXIT_DIVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => execute(args, false),
        Command::Sweep(args) => execute(args, true),
        Command::Verify { seed } => {
            let checks = run_checks(*seed);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ERROR)
            })
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_ERROR)
    })
}
