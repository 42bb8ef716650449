//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid configuration or input, 3 for
//! I/O failures.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::engine::{run_steady_sweep, run_transient, run_utilization_scan, ExperimentError, Network, Simulation};
use crate::metrics::snapshot_report;
use crate::spectrum::SpectrumState;
use crate::topology::{build_beta_paths, load_beta_paths, load_topology, BetaPathSet, Topology, TopologyError};
use crate::traffic::DemandGenerator;
use config::{ExperimentConfig, ExperimentKind, Overrides};
use output::write_atomic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fragsim", version, about = "Spectrum fragmentation metrics and dynamic-traffic simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric report for a spectrum dump.
    Snapshot {
        #[arg(long)]
        topology: PathBuf,
        /// Spectrum dump, one `link: bits` line per directed link.
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        paths: Option<PathBuf>,
        #[arg(long = "path-count")]
        path_count: Option<usize>,
        /// Print JSON instead of `name value` lines.
        #[arg(long)]
        json: bool,
    },
    /// Indicator time series from an empty network.
    Transient(RunArgs),
    /// Steady-state averages over a load / MaxDemand grid.
    Sweep(RunArgs),
    /// Indicators while the network fills towards full utilization.
    Scan(RunArgs),
    /// Runs one replication and writes the final spectrum dump.
    DumpState {
        #[command(flatten)]
        run: RunArgs,
        /// Dump destination; stdout when omitted.
        #[arg(long)]
        to: Option<PathBuf>,
    },
    /// Prints the beta-path cover computed for a topology.
    MakePaths {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        count: Option<usize>,
    },
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_cover(topology: &Topology, paths: Option<&Path>, count: Option<usize>) -> Result<BetaPathSet, CliError> {
    let set = match paths {
        Some(p) => load_beta_paths(topology, p, count)?,
        None => build_beta_paths(topology, count),
    };
    if let Some(s) = set.shortfall() {
        log::warn!("requested {} beta paths, built {}", s.requested, s.achieved);
    }
    Ok(set)
}

fn load_network(config: &ExperimentConfig) -> Result<Network, CliError> {
    let topology = load_topology(&config.topology)?;
    let paths = load_cover(&topology, config.beta_paths.as_deref(), config.beta_path_count)?;
    Ok(Network::new(topology, paths))
}

fn write_outputs(
    network: &Network,
    config: &ExperimentConfig,
    files: Vec<(String, String)>,
    clamp_events: usize,
) -> Result<(), CliError> {
    let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    for (name, contents) in &files {
        write_atomic(&config.output.join(name), contents.as_bytes())?;
    }
    let meta = output::metadata_json(network, config, names, clamp_events);
    write_atomic(&config.output.join("metadata.json"), meta.as_bytes())
}

fn transient(args: &RunArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::resolve(ExperimentKind::Transient, &args.overrides, args.config.as_deref())?;
    let network = load_network(&config)?;
    let result = run_transient(&network, &config.profile(), &config.transient())?;
    let mut files: Vec<(String, String)> = result
        .replications
        .iter()
        .enumerate()
        .map(|(rep, samples)| (format!("transient_rep{rep:03}.csv"), output::samples_csv(samples)))
        .collect();
    files.push(("transient_ci.csv".into(), output::transient_ci_csv(&result)));
    write_outputs(&network, &config, files, result.clamp_events)
}

fn sweep(args: &RunArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::resolve(ExperimentKind::Sweep, &args.overrides, args.config.as_deref())?;
    let network = load_network(&config)?;
    let result = run_steady_sweep(&network, &config.grid_points(), &config.sweep())?;
    let clamps = result.points.iter().map(|p| p.clamp_events).sum();
    write_outputs(&network, &config, vec![("sweep.csv".into(), output::sweep_csv(&result))], clamps)
}

fn scan(args: &RunArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::resolve(ExperimentKind::Scan, &args.overrides, args.config.as_deref())?;
    let network = load_network(&config)?;
    let result = run_utilization_scan(&network, &config.profile(), &config.scan())?;
    write_outputs(&network, &config, vec![("scan.csv".into(), output::scan_csv(&result))], 0)
}

fn dump_state(args: &RunArgs, to: Option<&Path>) -> Result<(), CliError> {
    let config = ExperimentConfig::resolve(ExperimentKind::Transient, &args.overrides, args.config.as_deref())?;
    let network = load_network(&config)?;
    let profile = config.profile();
    profile.check_grid(network.topology().slice_count()).map_err(|e| CliError::Config(e.to_string()))?;
    let generator = DemandGenerator::new(&profile, network.topology().node_count(), 0)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut sim = Simulation::new(&network);
    sim.run(generator, config.arrivals, &mut ());
    let dump = sim.state().dump();
    match to {
        Some(path) => write_atomic(path, dump.as_bytes()),
        None => {
            print!("{dump}");
            Ok(())
        }
    }
}

fn snapshot(
    topology: &Path,
    dump: &Path,
    paths: Option<&Path>,
    path_count: Option<usize>,
    json: bool,
) -> Result<(), CliError> {
    let topology = load_topology(topology)?;
    let text = read_text(dump)?;
    let state = SpectrumState::parse_dump(&text, topology.link_count(), topology.slice_count())
        .map_err(|e| CliError::Config(format!("{}: {e}", dump.display())))?;
    let cover = load_cover(&topology, paths, path_count)?;
    let network = Network::new(topology, cover);
    let r = snapshot_report(&state, network.paths(), network.bounds());
    let b = network.bounds();
    let rows = [
        ("utilization", r.utilization),
        ("alpha", r.alpha),
        ("beta", r.beta),
        ("vfm", r.vfm),
        ("nvfm", r.nvfm),
        ("avfm", r.avfm),
        ("a_alpha", r.a_alpha),
        ("a_beta", r.a_beta),
        ("lefm", r.lefm),
        ("alpha_min", b.alpha_min),
        ("beta_min", b.beta_min),
        ("vfm_min", b.vfm_min),
    ];
    if json {
        let map: serde_json::Map<String, serde_json::Value> =
            rows.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect();
        println!("{}", serde_json::Value::Object(map));
    } else {
        for (name, value) in rows {
            println!("{name} {value:.6}");
        }
        println!("el_size {}", r.el_size);
    }
    if r.nvfm_clamped {
        log::warn!("normalised metric fell outside [0, 1] and was clamped");
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Snapshot { topology, dump, paths, path_count, json } => {
            snapshot(topology, dump, paths.as_deref(), *path_count, *json)
        }
        Command::Transient(args) => transient(args),
        Command::Sweep(args) => sweep(args),
        Command::Scan(args) => scan(args),
        Command::DumpState { run, to } => dump_state(run, to.as_deref()),
        Command::MakePaths { topology, count } => {
            let topology = load_topology(topology)?;
            println!("{}", load_cover(&topology, None, *count)?.to_json());
            Ok(())
        }
    }
}
