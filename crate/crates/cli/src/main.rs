//! Command line front end: runs the pipeline from a TOML job config
//! and writes artifacts for whichever stage range the subcommand
//! covers.
//!
//! Exit codes: 0 on success, 2 when the config fails to load or
//! validate, 3 when a pipeline stage fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relam_core::config::{load_config, ConfigError, PipelineConfig};
use relam_core::pipeline::{execute, PipelineError, PipelineRun, StopAfter};

#[derive(Parser)]
#[command(
    name = "relam",
    version,
    about = "Design and fabrication planning for layered assemblies built from reclaimed timber"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// Job configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Loft, slice, and lay out the timber elements.
    Design(JobArgs),
    /// Design plus lap overlaps and nail placement.
    Nails(JobArgs),
    /// Design plus partitioning into transportable subassemblies.
    Modularize(JobArgs),
    /// Everything through stock allocation.
    Allocate(JobArgs),
    /// Everything through the fabrication simulation.
    Simulate(JobArgs),
    /// The whole pipeline plus the report bundle.
    Report(JobArgs),
    /// Same as report: the whole pipeline.
    All(JobArgs),
}

impl Command {
    fn split(&self) -> (&JobArgs, StopAfter) {
        match self {
            Command::Design(a) => (a, StopAfter::Layout),
            Command::Nails(a) => (a, StopAfter::Connections),
            Command::Modularize(a) => (a, StopAfter::Modularize),
            Command::Allocate(a) => (a, StopAfter::Allocate),
            Command::Simulate(a) => (a, StopAfter::Simulate),
            Command::Report(a) | Command::All(a) => (a, StopAfter::Report),
        }
    }
}

enum AppError {
    Config(ConfigError),
    Pipeline(PipelineError),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        AppError::Pipeline(e)
    }
}

fn load(args: &JobArgs) -> Result<PipelineConfig, ConfigError> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn describe(run: &PipelineRun, stop: StopAfter) -> String {
    let elements: usize = run.layers.iter().map(|l| l.elements.len()).sum();
    let mut s = format!("{} layer(s), {elements} element(s)", run.layers.len());
    if stop >= StopAfter::Connections {
        s.push_str(&format!(", {} overlap(s), {} nail(s)", run.overlaps.len(), run.nails.len()));
    }
    if stop >= StopAfter::Modularize {
        s.push_str(&format!(", {} subassembly(ies)", run.subassemblies.len()));
    }
    if let Some(plan) = &run.plan {
        s.push_str(&format!(
            ", stock {} reclaimed / {} new / {} unassigned",
            plan.reclaimed_count,
            plan.new_count,
            plan.unassigned.len()
        ));
    }
    if stop >= StopAfter::Simulate && !run.fab.is_empty() {
        let aborted = run.fab.iter().filter(|(_, f)| f.log.aborted.is_some()).count();
        s.push_str(&format!(", {} simulated run(s)", run.fab.len()));
        if aborted > 0 {
            s.push_str(&format!(" ({aborted} aborted)"));
        }
    }
    s
}

fn run(args: &JobArgs, stop: StopAfter) -> Result<(), AppError> {
    let config = load(args)?;
    let (run, artifacts) = execute(&config, stop)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    for f in &artifacts.files {
        println!("wrote {}", f.display());
    }
    println!("{}", describe(&run, stop));
    if stop >= StopAfter::Report {
        let summary = artifacts
            .files
            .iter()
            .find(|f| f.file_name().is_some_and(|n| n == "summary.txt"));
        if let Some(path) = summary {
            if let Ok(text) = std::fs::read_to_string(path) {
                println!();
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (args, stop) = cli.command.split();
    match run(args, stop) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(AppError::Pipeline(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
