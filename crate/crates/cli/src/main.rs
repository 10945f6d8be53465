//! testweaver: white-box service-level test generation.
//!
//! Subcommands mirror the pipeline stages: `analyze` builds the endpoint
//! model from source (or a descriptor document), `build-odg` derives the
//! operation dependency graph, `gen-endpoint-tests` and
//! `gen-scenario-tests` run the generation pipelines against a deployed
//! base URL (or the bundled toy service), and `report` recomputes the
//! consolidated report from persisted logs.
//!
//! Exit codes: 0 success, 1 partial (some endpoints or scenarios failed),
//! 2 fatal.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "testweaver", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Mode {
    Live,
    Replay,
    Stub,
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// Directory of service source files to analyze.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Neutral endpoint-model descriptor document (bypasses parsing).
    #[arg(long)]
    descriptor: Option<PathBuf>,
    /// Base URL of the deployed service, or `toy:` for the bundled
    /// in-process toy service.
    #[arg(long, default_value = "toy:")]
    base_url: String,
    /// Provider mode for all model interaction.
    #[arg(long, value_enum, default_value = "stub")]
    mode: Mode,
    /// Stub script (stub mode). Defaults to the bundled clinic script.
    #[arg(long)]
    stub_script: Option<PathBuf>,
    /// Recording file to replay (replay mode).
    #[arg(long)]
    recording: Option<PathBuf>,
    /// Recording file to append to (live mode).
    #[arg(long)]
    record: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Agent iteration cap.
    #[arg(long, default_value_t = 5)]
    max_iter: u32,
    /// Sampling temperature (live mode), in [0, 2].
    #[arg(long, default_value_t = 0.2)]
    temperature: f64,
    /// Scenario count target.
    #[arg(long, default_value_t = 10)]
    scenarios: usize,
    /// Application name used in artifact documents.
    #[arg(long, default_value = "clinic")]
    app: String,
    /// Coverage adapter URL (defaults to `<base-url>/__coverage`).
    #[arg(long)]
    coverage_url: Option<String>,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 10)]
    timeout: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build the endpoint model from source or a descriptor.
    Analyze(CommonArgs),
    /// Build the operation dependency graph from the endpoint model.
    BuildOdg(CommonArgs),
    /// Run the endpoint-focused generation pipeline and emit tests.
    GenEndpointTests(CommonArgs),
    /// Run the scenario pipeline and emit scenario tests.
    GenScenarioTests(CommonArgs),
    /// Recompute the consolidated report from persisted logs.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the bundled toy service over HTTP (with /__coverage).
    ServeToy {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => commands::analyze(&args),
        Command::BuildOdg(args) => commands::build_odg(&args),
        Command::GenEndpointTests(args) => commands::gen_endpoint_tests(&args),
        Command::GenScenarioTests(args) => commands::gen_scenario_tests(&args),
        Command::Report { out } => commands::report(&out),
        Command::ServeToy { addr } => commands::serve_toy(&addr),
    };
    match result {
        Ok(commands::Outcome::Success) => ExitCode::from(0),
        Ok(commands::Outcome::Partial(reason)) => {
            eprintln!("partial: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
