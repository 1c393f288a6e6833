use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use locreal_cli::output::{
    render_checks, render_search, render_simulation, render_summary, Format,
};
use locreal_cli::runner::{run_checks, run_search, run_simulation, summarize, RunError};
use locreal_cli::{load_scenario, ScenarioFile};

#[derive(Parser)]
#[command(
    name = "locreal",
    version,
    about = "Inequality checks, violation search and Monte-Carlo simulation for scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario and run every constructor, reporting diagnostics
    Validate(CommonArgs),
    /// Evaluate the scenario's inequality checks
    Check(CommonArgs),
    /// Optimize measurement settings for the scenario's state
    Search(CommonArgs),
    /// Monte-Carlo simulate the sampleable checks
    Simulate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (UTF-8 JSON)
    #[arg(long)]
    scenario: PathBuf,

    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format
    #[arg(long, default_value = "json")]
    format: Format,

    /// Report tolerance override
    #[arg(long)]
    tol: Option<f64>,

    /// Seed override for simulate and search
    #[arg(long)]
    seed: Option<u64>,

    /// Worker thread count; LOCREAL_JOBS overrides the default
    #[arg(long)]
    jobs: Option<usize>,
}

type CommandFn = fn(&CommonArgs, &ScenarioFile) -> Result<String, RunError>;

fn main() {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, CommandFn) = match &cli.command {
        Command::Validate(a) => (a, run_validate),
        Command::Check(a) => (a, run_check),
        Command::Search(a) => (a, run_search_cmd),
        Command::Simulate(a) => (a, run_simulate),
    };

    configure_workers(args.jobs);
    let result = load_scenario(&args.scenario).and_then(|file| {
        let rendered = run(args, &file)?;
        write_output(args, &rendered)
    });
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn configure_workers(jobs: Option<usize>) {
    let count = jobs.or_else(|| {
        std::env::var("LOCREAL_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = count {
        // Results are deterministic regardless of worker count; this only
        // tunes parallelism.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn run_validate(args: &CommonArgs, file: &ScenarioFile) -> Result<String, RunError> {
    let built = file.build()?;
    render_summary(&summarize(file, &built), args.format)
}

fn run_check(args: &CommonArgs, file: &ScenarioFile) -> Result<String, RunError> {
    let built = file.build()?;
    let outcomes = run_checks(file, &built, args.tol)?;
    render_checks(&outcomes, args.format)
}

fn run_search_cmd(args: &CommonArgs, file: &ScenarioFile) -> Result<String, RunError> {
    let built = file.build()?;
    let output = run_search(file, &built, args.seed)?;
    render_search(&output, args.format)
}

fn run_simulate(args: &CommonArgs, file: &ScenarioFile) -> Result<String, RunError> {
    let built = file.build()?;
    let reports = run_simulation(file, &built, args.seed)?;
    render_simulation(&reports, args.format)
}

fn write_output(args: &CommonArgs, rendered: &str) -> Result<(), RunError> {
    match &args.out {
        None => {
            println!("{rendered}");
            Ok(())
        }
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            f.write_all(rendered.as_bytes())
                .and_then(|_| f.write_all(b"\n"))
                .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
        }
    }
}
