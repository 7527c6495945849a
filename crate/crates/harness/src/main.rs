use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oloop::experiment::{run_experiment, worker_pool, ExperimentSpec, PlannerSettings};
use oloop::output::{CsvSink, ResultRow, SummaryRow};
use oloop::{run_sweep, SweepConfig};
use oloop::sweep::cap_policy;
use oloop_core::domain::DomainKey;
use oloop_core::planner::{DEFAULT_BETA0, DEFAULT_PARTICLES};
use oloop_core::PlannerKind;

/// Online POMDP planning experiments.
#[derive(Debug, Parser)]
#[command(name = "oloop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs one experiment cell and prints its summary.
    Run(RunArgs),
    /// Runs a TOML-described grid and writes results.csv and summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    domain: DomainKey,
    #[arg(long)]
    planner: PlannerKind,
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    horizon: usize,
    #[arg(long)]
    memory_cap: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BETA0)]
    beta0: f64,
    /// UCB1 exploration constant; defaults to the domain's reward range.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PARTICLES)]
    particles: usize,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    no_adjacent_ships: bool,
    /// End a tree search at the memory cap instead of simulating on.
    #[arg(long)]
    interrupt_at_cap: bool,
    /// Fill the mean_plan_time_ms column. Timed files differ between reruns.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> oloop::Result<()> {
    let settings = PlannerSettings {
        budget: args.budget,
        horizon: args.horizon,
        memory_cap: args.memory_cap,
        cap_policy: cap_policy(args.interrupt_at_cap),
        beta0: args.beta0,
        c: args.c,
        particles: args.particles,
    };
    let mut spec = ExperimentSpec::new(args.domain, args.planner, settings);
    spec.episodes = args.episodes;
    spec.base_seed = args.seed;
    spec.max_episode_steps = args.max_steps;
    spec.no_adjacent_ships = args.no_adjacent_ships;
    let pool = worker_pool()?;
    let result = run_experiment(&spec, &pool)?;
    if let Some(path) = &args.out {
        let mut sink = CsvSink::create(path)?;
        sink.write_all(
            result
                .records
                .iter()
                .map(|r| ResultRow::new(&spec, result.c, r, args.timing)),
        )?;
    }
    let mut stdout = CsvSink::new(std::io::stdout());
    stdout.write_all([SummaryRow::new(&spec, result.c, &result.records)])?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep { config, out } => SweepConfig::load(&config)
            .and_then(|cfg| worker_pool().and_then(|pool| run_sweep(&cfg, &out, &pool).map(|_| ()))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
