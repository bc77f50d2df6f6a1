use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use glnn_lab::selftest::{print_table, run_selftest};
use glnn_lab::settings::{parse_algorithms, MAX_RESTARTS};
use glnn_lab::{run, write_outputs, ExperimentKind, LabConfig, RunOptions};

#[derive(Parser)]
#[command(name = "glnn-lab", version, about = "GLNN vs WMMSE beamforming experiments on synthetic mmWave channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean SE against transmit power, perfect CSI.
    SeVsPower(RunArgs),
    /// Mean SE against channel estimation error at fixed power.
    SeVsCee(RunArgs),
    /// Three mobility phases at fixed estimation error.
    Dynamic(RunArgs),
    /// Median per-sample optimization time against BS antenna count.
    Timing(RunArgs),
    /// Gradient, power, CEE, liquid-cell and WMMSE invariant suites.
    Selftest {
        /// Corrupt the adjoint of the named op (negative control).
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Sectioned key=value config ([scenario], [glnn], [wmmse], [experiment]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides [scenario] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated subset of glnn,wmmse.
    #[arg(long)]
    algorithms: Option<String>,
    /// Add the best-of-N GLNN restart upper bound (N defaults to 20).
    #[arg(long, num_args = 0..=1, default_missing_value = "20")]
    restarts: Option<usize>,
    /// Worker threads for independent sweep cells.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Pick λ per cell from [experiment] lambda_grid during warm-up.
    #[arg(long)]
    lambda_search: bool,
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => LabConfig::from_file(path)?,
        None => LabConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(list) = &args.algorithms {
        cfg.experiment.algorithms = parse_algorithms(list)?;
    }
    if let Some(r) = args.restarts {
        anyhow::ensure!(r <= MAX_RESTARTS, "--restarts must be at most {MAX_RESTARTS}");
        cfg.experiment.restarts = r;
    }
    if args.lambda_search {
        cfg.experiment.lambda_search = true;
    }
    let opts = RunOptions { parallel: args.parallel.max(1) };
    let output = run(kind, &cfg, &opts)?;
    write_outputs(&args.out, &cfg, &opts, &output)?;
    println!("{:<12} {:>12} {:>8} {:>12} {:>16}", "algorithm", "sweep", "samples", "mean_R", "median_time_us");
    for s in &output.summary {
        println!(
            "{:<12} {:>12} {:>8} {:>12.4} {:>16.1}",
            s.algorithm.name(),
            s.sweep_value,
            s.samples,
            s.mean_rate,
            s.median_wall_time_us
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SeVsPower(a) => run_experiment(ExperimentKind::SeVsPower, a),
        Command::SeVsCee(a) => run_experiment(ExperimentKind::SeVsCee, a),
        Command::Dynamic(a) => run_experiment(ExperimentKind::Dynamic, a),
        Command::Timing(a) => run_experiment(ExperimentKind::Timing, a),
        Command::Selftest { inject_fault } => match run_selftest(inject_fault.as_deref()) {
            Ok(reports) => {
                let _ = print_table(&mut std::io::stdout(), &reports);
                if reports.iter().all(|r| r.passed) {
                    return ExitCode::SUCCESS;
                }
                return ExitCode::FAILURE;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
