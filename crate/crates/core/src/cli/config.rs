//! Experiment configuration: a JSON file, command-line overrides and
//! defaults, resolved in that order of precedence (flags win).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::engine::{BlockingMode, GridPoint, SampleClock, ScanConfig, SweepConfig, TransientConfig};
use crate::traffic::DemandProfile;

/// Environment variable consulted for the seed when neither flags nor the
/// config file provide one.
pub const SEED_ENV: &str = "FRAGSIM_SEED";

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Transient,
    Sweep,
    Scan,
    Snapshot,
}

/// Fields accepted both in the config file and as flags. Every field is
/// optional; unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Topology JSON file.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Beta-path JSON file; computed from the topology when omitted.
    #[arg(long = "paths")]
    pub beta_paths: Option<PathBuf>,
    /// Number of trails in the beta-path cover.
    #[arg(long = "path-count")]
    pub beta_path_count: Option<usize>,
    /// Per-node arrival rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mean holding time.
    #[arg(long)]
    pub holding: Option<f64>,
    /// Per-node offered load in Erlangs.
    #[arg(long)]
    pub load: Option<f64>,
    /// Largest demand width in slices.
    #[arg(long)]
    pub max_demand: Option<usize>,
    /// Arrivals per transient replication.
    #[arg(long)]
    pub arrivals: Option<u64>,
    /// Sample every N arrivals.
    #[arg(long)]
    pub sample_every: Option<u64>,
    /// Sample every DT units of simulated time instead (transient only).
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Report blocking over the last N arrivals instead of cumulatively.
    #[arg(long)]
    pub blocking_window: Option<usize>,
    /// Sweep loads, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub loads: Option<Vec<f64>>,
    /// Sweep arrival rates, comma separated; holding = load / lambda.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Sweep MaxDemand values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub max_demands: Option<Vec<usize>>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub measure: Option<u64>,
    /// Arrival cap for the utilization scan.
    #[arg(long)]
    pub max_arrivals: Option<u64>,
    /// Utilization at which the scan stops.
    #[arg(long)]
    pub target_utilization: Option<f64>,
    /// Output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr, $($field:ident),+ $(,)?) => {
        Overrides { $($field: $top.$field.clone().or_else(|| $bottom.$field.clone())),+ }
    };
}

impl Overrides {
    /// Fields of `self` win over `other`.
    pub fn over(&self, other: &Overrides) -> Overrides {
        layer!(
            self,
            other,
            topology,
            beta_paths,
            beta_path_count,
            lambda,
            holding,
            load,
            max_demand,
            arrivals,
            sample_every,
            sample_dt,
            blocking_window,
            loads,
            lambdas,
            max_demands,
            warmup,
            measure,
            max_arrivals,
            target_utilization,
            output,
            seed,
            replications,
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Sweep grid: loads x arrival rates x MaxDemand values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub loads: Vec<f64>,
    /// When empty, every point uses the configured holding time.
    pub lambdas: Vec<f64>,
    pub max_demands: Vec<usize>,
}

/// A fully resolved run, echoed verbatim into run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub topology: PathBuf,
    pub beta_paths: Option<PathBuf>,
    pub beta_path_count: Option<usize>,
    pub lambda: f64,
    pub holding: f64,
    pub load: f64,
    pub max_demand: usize,
    pub arrivals: u64,
    pub sample_every: u64,
    pub sample_dt: Option<f64>,
    pub blocking_window: Option<usize>,
    pub grid: GridSpec,
    pub warmup: u64,
    pub measure: u64,
    pub max_arrivals: u64,
    pub target_utilization: f64,
    pub output: PathBuf,
    pub seed: u64,
    pub replications: usize,
}

fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    /// Merges flags over the optional file and fills defaults.
    pub fn resolve(kind: ExperimentKind, flags: &Overrides, file: Option<&Path>) -> Result<Self, CliError> {
        let from_file = match file {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let o = flags.over(&from_file);

        let topology = o.topology.clone().ok_or_else(|| config_err("no topology given (--topology)"))?;
        let seed = match o.seed {
            Some(s) => s,
            None => seed_from_env()?.unwrap_or(DEFAULT_SEED),
        };
        let max_demand = o.max_demand.unwrap_or(16);
        let unset = o.lambda.is_none() && o.holding.is_none() && o.load.is_none();
        let profile = if kind == ExperimentKind::Scan && unset {
            // effectively static traffic: nothing departs before the network fills
            DemandProfile::resolve(Some(10.0), Some(1.0e6), None, max_demand, seed)
        } else {
            DemandProfile::resolve(o.lambda, o.holding, o.load, max_demand, seed)
        }
        .map_err(config_err)?;

        let config = ExperimentConfig {
            kind,
            topology,
            beta_paths: o.beta_paths.clone(),
            beta_path_count: o.beta_path_count,
            lambda: profile.arrival_rate_per_node,
            holding: profile.mean_holding,
            load: profile.load(),
            max_demand,
            arrivals: o.arrivals.unwrap_or(5000),
            sample_every: o.sample_every.unwrap_or(if kind == ExperimentKind::Transient { 50 } else { 10 }),
            sample_dt: o.sample_dt,
            blocking_window: o.blocking_window,
            grid: GridSpec {
                loads: o.loads.clone().unwrap_or_else(|| vec![profile.load()]),
                lambdas: o.lambdas.clone().or_else(|| o.lambda.map(|l| vec![l])).unwrap_or_default(),
                max_demands: o.max_demands.clone().unwrap_or_else(|| vec![max_demand]),
            },
            warmup: o.warmup.unwrap_or(20_000),
            measure: o.measure.unwrap_or(30_000),
            max_arrivals: o.max_arrivals.unwrap_or(500_000),
            target_utilization: o.target_utilization.unwrap_or(0.995),
            output: o.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            seed,
            replications: o.replications.unwrap_or(10),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        if self.sample_every == 0 {
            return Err(config_err("sample_every must be at least 1"));
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err("sample_dt must be positive"));
            }
        }
        if self.blocking_window == Some(0) {
            return Err(config_err("blocking_window must be at least 1"));
        }
        match self.kind {
            ExperimentKind::Transient if self.arrivals == 0 => Err(config_err("arrivals must be at least 1")),
            ExperimentKind::Sweep => {
                if self.measure == 0 {
                    return Err(config_err("measure must be at least 1"));
                }
                if self.grid.loads.is_empty() || self.grid.max_demands.is_empty() {
                    return Err(config_err("sweep grid is empty"));
                }
                if self.grid.loads.iter().chain(&self.grid.lambdas).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(config_err("sweep loads and lambdas must be positive"));
                }
                if self.grid.max_demands.contains(&0) {
                    return Err(config_err("max_demands must be positive"));
                }
                Ok(())
            }
            ExperimentKind::Scan if !(self.target_utilization > 0.0 && self.target_utilization <= 1.0) => {
                Err(config_err("target_utilization must lie in (0, 1]"))
            }
            ExperimentKind::Scan if self.max_arrivals == 0 => Err(config_err("max_arrivals must be at least 1")),
            _ => Ok(()),
        }
    }

    pub fn profile(&self) -> DemandProfile {
        DemandProfile {
            arrival_rate_per_node: self.lambda,
            mean_holding: self.holding,
            max_demand: self.max_demand,
            seed: self.seed,
        }
    }

    pub fn transient(&self) -> TransientConfig {
        TransientConfig {
            arrivals: self.arrivals,
            clock: match self.sample_dt {
                Some(dt) => SampleClock::Time(dt),
                None => SampleClock::Arrivals(self.sample_every),
            },
            replications: self.replications,
            blocking: self.blocking_window.map_or(BlockingMode::Cumulative, BlockingMode::Windowed),
        }
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            warmup: self.warmup,
            measure: self.measure,
            sample_every: self.sample_every.min(self.measure.max(1)),
            replications: self.replications,
            seed: self.seed,
        }
    }

    pub fn scan(&self) -> ScanConfig {
        ScanConfig {
            sample_every: self.sample_every,
            max_arrivals: self.max_arrivals,
            target_utilization: self.target_utilization,
            replications: self.replications,
        }
    }

    /// Grid points ordered by MaxDemand, then arrival rate, then load.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &max_demand in &self.grid.max_demands {
            if self.grid.lambdas.is_empty() {
                for &load in &self.grid.loads {
                    points.push(GridPoint { lambda: load / self.holding, holding: self.holding, max_demand });
                }
            } else {
                for &lambda in &self.grid.lambdas {
                    for &load in &self.grid.loads {
                        points.push(GridPoint { lambda, holding: load / lambda, max_demand });
                    }
                }
            }
        }
        points
    }
}
