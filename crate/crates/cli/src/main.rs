use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use marketvrp_cli::service::Service;
use marketvrp_cli::{load_instance, solve};
use marketvrp_core::{replay_schedule, EngineConfig, EngineError, Scenario, WeightSchedule};

#[derive(Parser)]
#[command(
    name = "marketvrp",
    version,
    about = "Interactive multi-objective MDVRPTW solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a weight schedule on one instance and write the results.
    Solve(SolveArgs),
    /// Serve the interactive JSON/SSE API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    A,
    B,
    C,
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run agents sequentially; results are identical either way.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value_t = EngineConfig::default().patience)]
    patience: u64,
    #[arg(long, default_value_t = EngineConfig::default().ejection_size)]
    ejection_size: usize,
    #[arg(long, default_value_t = EngineConfig::default().micro_budget)]
    micro_budget: u64,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            seed: self.seed,
            deterministic: self.deterministic,
            patience: self.patience,
            ejection_size: self.ejection_size,
            micro_budget: self.micro_budget,
            ..EngineConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Cordeau instance file, or `pr01` for the bundled instance.
    #[arg(long)]
    instance: String,
    #[arg(long, value_enum, ignore_case = true, conflicts_with = "schedule")]
    scenario: Option<ScenarioArg>,
    /// One stage per line: `w_dist [budget]`; `#` comments.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Iterations per stage unless the schedule says otherwise.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    #[arg(long, default_value = "marketvrp-out")]
    out: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Load this instance on startup.
    #[arg(long)]
    instance: Option<String>,
    #[command(flatten)]
    engine: EngineArgs,
}

fn run_solve(args: SolveArgs) -> Result<ExitCode> {
    let instance = Arc::new(load_instance(&args.instance)?);
    let schedule = match (&args.schedule, args.scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read schedule {}", path.display()))?;
            solve::parse_schedule(&text, args.budget)?
        }
        (None, scenario) => {
            let scenario = match scenario.unwrap_or(ScenarioArg::A) {
                ScenarioArg::A => Scenario::A,
                ScenarioArg::B => Scenario::B,
                ScenarioArg::C => Scenario::C,
            };
            WeightSchedule::scenario(scenario, args.budget)?
        }
    };
    let report = match replay_schedule(Arc::clone(&instance), &schedule, args.engine.config()) {
        Ok(r) => r,
        Err(EngineError::Stalled(s)) => {
            eprintln!("error: construction stalled: {s}");
            return Ok(ExitCode::from(3));
        }
        Err(e) => return Err(e.into()),
    };
    print!("{}", solve::stage_table(&report));
    solve::write_outputs(&args.out, &instance, &report)?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_serve(args: ServeArgs) -> Result<ExitCode> {
    let service = Service::new(args.engine.config());
    if let Some(source) = &args.instance {
        service.load(load_instance(source)?)?;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("cannot listen on {addr} (is the port already in use?)"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, service.router()).await?;
        Ok(ExitCode::SUCCESS)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Serve(args) => run_serve(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
