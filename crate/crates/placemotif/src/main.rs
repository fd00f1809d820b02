//! Thin CLI over the placemotif library.
//!
//! Subcommands: `synth` generates a scenario; `ingest`, `census`, `props`,
//! `metrics`, `clusters` run one stage and write its artifacts; `run` does
//! everything and writes the manifest. Exit codes: 0 success, 1 config error,
//! 2 i/o error, 3 stage failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use placemotif::census::M4Convention;
use placemotif::error::Error;
use placemotif::ingest::categories::CategoryTable;
use placemotif::pipeline::{
    run_census_stage, run_clusters_stage, run_ingest_stage, run_metrics_stage, run_pipeline,
    run_props_stage, PipelineConfig, RunSummary,
};
use placemotif::synth::{generate_scenario, write_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "placemotif",
    version,
    about = "Daily visitation networks of places: motif census, lifestyle clusters, disruption and recovery metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for day-parallel stages (overrides the config).
    #[arg(long)]
    jobs: Option<usize>,
    /// Naming convention for the dense four-node motifs.
    #[arg(long, value_parser = parse_convention)]
    m4_convention: Option<M4Convention>,
}

fn parse_convention(s: &str) -> Result<M4Convention, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stop/POI scenario with known ground truth.
    Synth {
        /// Scenario config JSON; omit for the built-in default scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for stops.csv, pois.csv, ground_truth.json.
        #[arg(long)]
        out: PathBuf,
        /// RNG seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse stops and POIs, derive transitions and mobility stats.
    Ingest(PipelineArgs),
    /// Build daily networks and run the motif census.
    Census(PipelineArgs),
    /// Compute global network properties per day.
    Props(PipelineArgs),
    /// Compute baselines, change series, and recovery reports.
    Metrics(PipelineArgs),
    /// Rank attributed motifs and aggregate lifestyle clusters.
    Clusters(PipelineArgs),
    /// Run the whole pipeline and write the full report bundle.
    Run(PipelineArgs),
}

fn load_pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig, Error> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    if let Some(conv) = args.m4_convention {
        config.m4_convention = conv;
    }
    Ok(config)
}

fn run_synth(config_path: Option<PathBuf>, out: PathBuf, seed: Option<u64>) -> Result<RunSummary, Error> {
    let mut config = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let table = CategoryTable::builtin();
    let scenario = generate_scenario(&config, &table)?;
    write_scenario(&out, &scenario)?;
    eprintln!(
        "synth: {} stops, {} POIs -> {}",
        scenario.stops.len(),
        scenario.pois.len(),
        out.display()
    );
    Ok(RunSummary {
        out_dir: out,
        files: vec![],
        days: config.calendar.days() as usize,
        parse_warnings: 0,
    })
}

fn dispatch(cli: Cli) -> Result<RunSummary, Error> {
    match cli.command {
        Command::Synth { config, out, seed } => run_synth(config, out, seed),
        Command::Ingest(args) => run_ingest_stage(load_pipeline_config(&args)?),
        Command::Census(args) => run_census_stage(load_pipeline_config(&args)?),
        Command::Props(args) => run_props_stage(load_pipeline_config(&args)?),
        Command::Metrics(args) => run_metrics_stage(load_pipeline_config(&args)?),
        Command::Clusters(args) => run_clusters_stage(load_pipeline_config(&args)?),
        Command::Run(args) => run_pipeline(load_pipeline_config(&args)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(summary) => {
            eprintln!(
                "done: {} days, {} files, {} parse warnings -> {}",
                summary.days,
                summary.files.len(),
                summary.parse_warnings,
                summary.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
