//! Transient traces, steady-state sweeps and utilization scans, each run
//! over independent replications in parallel.

use rayon::prelude::*;
use thiserror::Error;

use super::stats::{mean, Summary};
use super::{Admission, BlockingMode, Network, Observer, Simulation};
use crate::metrics::{Metric, Sample};
use crate::traffic::{Demand, DemandGenerator, DemandProfile, TrafficError};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("sampling interval must be positive")]
    BadInterval,
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

/// When transient samples are taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleClock {
    /// Every `n` arrivals.
    Arrivals(u64),
    /// Every `dt` units of simulated time.
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientConfig {
    pub arrivals: u64,
    pub clock: SampleClock,
    pub replications: usize,
    pub blocking: BlockingMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientPoint {
    /// Mean arrival count at this sample across replications.
    pub arrivals: f64,
    pub t: f64,
    stats: Vec<Summary>,
}

impl TransientPoint {
    pub fn get(&self, metric: Metric) -> Summary {
        self.stats[metric_index(metric)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub replications: Vec<Vec<Sample>>,
    pub points: Vec<TransientPoint>,
    pub clamp_events: usize,
}

fn metric_index(metric: Metric) -> usize {
    Metric::ALL.iter().position(|&m| m == metric).expect("listed")
}

fn summarize(values_per_metric: impl Fn(Metric) -> Vec<f64>) -> Vec<Summary> {
    Metric::ALL.iter().map(|&m| Summary::from_values(&values_per_metric(m))).collect()
}

fn count_clamps(samples: &[Sample]) -> usize {
    samples.iter().filter(|s| s.report.nvfm_clamped).count()
}

struct ArrivalSampler {
    every: u64,
    since: u64,
    samples: Vec<Sample>,
}

impl Observer for ArrivalSampler {
    fn after_arrival(&mut self, sim: &Simulation<'_>, _demand: &Demand, _outcome: &Admission) {
        self.since += 1;
        if self.since % self.every == 0 {
            self.samples.push(sim.sample());
        }
    }
}

struct TimeSampler {
    dt: f64,
    next: f64,
    samples: Vec<Sample>,
}

impl Observer for TimeSampler {
    fn before_event(&mut self, sim: &Simulation<'_>, time: f64) {
        while self.next <= time {
            self.samples.push(sim.sample_at(self.next));
            self.next += self.dt;
        }
    }
}

/// Runs from an empty network for `arrivals` requests per replication and
/// aggregates the sampled series point by point.
pub fn run_transient(
    network: &Network,
    profile: &DemandProfile,
    config: &TransientConfig,
) -> Result<TransientResult, ExperimentError> {
    if config.arrivals == 0 {
        return Err(ExperimentError::Zero("arrivals"));
    }
    if config.replications == 0 {
        return Err(ExperimentError::Zero("replications"));
    }
    match config.clock {
        SampleClock::Arrivals(0) => return Err(ExperimentError::BadInterval),
        SampleClock::Time(dt) if !(dt > 0.0 && dt.is_finite()) => return Err(ExperimentError::BadInterval),
        _ => {}
    }
    profile.check_grid(network.topology().slice_count())?;
    let nodes = network.topology().node_count();
    DemandGenerator::new(profile, nodes, 0)?;

    let replications: Vec<Vec<Sample>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let generator = DemandGenerator::new(profile, nodes, rep as u64).expect("validated");
            let mut sim = Simulation::with_blocking(network, config.blocking);
            let initial = sim.sample_at(0.0);
            match config.clock {
                SampleClock::Arrivals(every) => {
                    let mut sampler = ArrivalSampler { every, since: 0, samples: vec![initial] };
                    sim.run(generator, config.arrivals, &mut sampler);
                    sampler.samples
                }
                SampleClock::Time(dt) => {
                    let mut sampler = TimeSampler { dt, next: dt, samples: vec![initial] };
                    sim.run(generator, config.arrivals, &mut sampler);
                    sampler.samples
                }
            }
        })
        .collect();

    let len = replications.iter().map(Vec::len).min().unwrap_or(0);
    let points = (0..len)
        .map(|k| {
            let column: Vec<&Sample> = replications.iter().map(|r| &r[k]).collect();
            TransientPoint {
                arrivals: mean(&column.iter().map(|s| s.arrivals as f64).collect::<Vec<_>>()),
                t: mean(&column.iter().map(|s| s.t).collect::<Vec<_>>()),
                stats: summarize(|m| column.iter().map(|s| s.get(m)).collect()),
            }
        })
        .collect();
    let clamp_events = replications.iter().map(|r| count_clamps(r)).sum();
    if clamp_events > 0 {
        log::info!("transient run: {clamp_events} samples had the normalised metric clamped");
    }
    Ok(TransientResult { replications, points, clamp_events })
}

/// One steady-state operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub holding: f64,
    pub max_demand: usize,
}

impl GridPoint {
    pub fn load(&self) -> f64 {
        self.lambda * self.holding
    }

    pub fn profile(&self, seed: u64) -> Result<DemandProfile, TrafficError> {
        DemandProfile::new(self.lambda, self.holding, self.max_demand, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub warmup: u64,
    pub measure: u64,
    pub sample_every: u64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { warmup: 20_000, measure: 30_000, sample_every: 10, replications: 10, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPointResult {
    pub point: GridPoint,
    stats: Vec<Summary>,
    /// Ratio of the window-mean adapted contiguity to continuity components.
    pub a_ratio: Summary,
    pub clamp_events: usize,
}

impl SweepPointResult {
    pub fn get(&self, metric: Metric) -> Summary {
        self.stats[metric_index(metric)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPointResult>,
    pub config: SweepConfig,
}

struct ReplicationWindow {
    means: Vec<f64>,
    a_ratio: f64,
    clamp_events: usize,
}

fn steady_replication(
    network: &Network,
    profile: &DemandProfile,
    stream: u64,
    config: &SweepConfig,
) -> ReplicationWindow {
    let nodes = network.topology().node_count();
    let mut generator = DemandGenerator::new(profile, nodes, stream).expect("validated");
    let mut sim = Simulation::new(network);
    sim.run(&mut generator, config.warmup, &mut ());
    let (total0, blocked0) = (sim.total_requests(), sim.blocked_requests());
    let mut sampler = ArrivalSampler { every: config.sample_every, since: 0, samples: Vec::new() };
    sim.run(&mut generator, config.measure, &mut sampler);
    let samples = sampler.samples;

    let window_total = sim.total_requests() - total0;
    let window_blocked = sim.blocked_requests() - blocked0;
    let means: Vec<f64> = Metric::ALL
        .iter()
        .map(|&m| match m {
            Metric::BrTr if window_total > 0 => window_blocked as f64 / window_total as f64,
            Metric::BrTr => 0.0,
            _ => mean(&samples.iter().map(|s| s.get(m)).collect::<Vec<_>>()),
        })
        .collect();
    let a_ratio = means[metric_index(Metric::AAlpha)] / means[metric_index(Metric::ABeta)];
    ReplicationWindow { means, a_ratio, clamp_events: count_clamps(&samples) }
}

/// For every grid point, discards `warmup` arrivals, averages each metric
/// over the next `measure` arrivals, and aggregates across replications.
/// Blocking in the result is counted within the measurement window only.
///
/// Every `(point, replication)` pair draws from its own random stream.
pub fn run_steady_sweep(
    network: &Network,
    grid: &[GridPoint],
    config: &SweepConfig,
) -> Result<SweepResult, ExperimentError> {
    if config.warmup + config.measure == 0 || config.measure == 0 {
        return Err(ExperimentError::Zero("measure"));
    }
    if config.sample_every == 0 || config.sample_every > config.measure {
        return Err(ExperimentError::BadInterval);
    }
    if config.replications == 0 {
        return Err(ExperimentError::Zero("replications"));
    }
    let profiles: Vec<DemandProfile> = grid
        .iter()
        .map(|p| {
            let profile = p.profile(config.seed)?;
            profile.check_grid(network.topology().slice_count())?;
            Ok(profile)
        })
        .collect::<Result<_, TrafficError>>()?;

    let jobs: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|p| (0..config.replications).map(move |r| (p, r))).collect();
    let windows: Vec<ReplicationWindow> = jobs
        .par_iter()
        .map(|&(p, r)| steady_replication(network, &profiles[p], ((p as u64) << 32) | r as u64, config))
        .collect();

    let points = grid
        .iter()
        .enumerate()
        .map(|(p, point)| {
            let reps = &windows[p * config.replications..(p + 1) * config.replications];
            let a_ratios: Vec<f64> = reps.iter().map(|w| w.a_ratio).filter(|r| r.is_finite()).collect();
            SweepPointResult {
                point: *point,
                stats: summarize(|m| reps.iter().map(|w| w.means[metric_index(m)]).collect()),
                a_ratio: Summary::from_values(&a_ratios),
                clamp_events: reps.iter().map(|w| w.clamp_events).sum(),
            }
        })
        .collect();
    Ok(SweepResult { points, config: *config })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub sample_every: u64,
    pub max_arrivals: u64,
    pub target_utilization: f64,
    pub replications: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { sample_every: 10, max_arrivals: 500_000, target_utilization: 0.995, replications: 10 }
    }
}

/// Threshold the scan is expected to reach.
pub const SCAN_FULL_UTILIZATION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub samples: Vec<Vec<Sample>>,
    pub max_utilization: f64,
    /// Every replication reached [`SCAN_FULL_UTILIZATION`].
    pub reached_full: bool,
}

/// Loads the network from empty until the target utilization (or the
/// arrival cap) is reached, sampling all indicators along the way.
pub fn run_utilization_scan(
    network: &Network,
    profile: &DemandProfile,
    config: &ScanConfig,
) -> Result<ScanResult, ExperimentError> {
    if config.sample_every == 0 {
        return Err(ExperimentError::BadInterval);
    }
    if config.replications == 0 {
        return Err(ExperimentError::Zero("replications"));
    }
    if config.max_arrivals == 0 {
        return Err(ExperimentError::Zero("max_arrivals"));
    }
    profile.check_grid(network.topology().slice_count())?;
    let nodes = network.topology().node_count();
    DemandGenerator::new(profile, nodes, 0)?;

    let samples: Vec<Vec<Sample>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let mut generator = DemandGenerator::new(profile, nodes, rep as u64).expect("validated");
            let mut sim = Simulation::new(network);
            let mut samples = vec![sim.sample_at(0.0)];
            while sim.total_requests() < config.max_arrivals {
                let chunk = config.sample_every.min(config.max_arrivals - sim.total_requests());
                sim.run(&mut generator, chunk, &mut ());
                samples.push(sim.sample());
                if sim.state().utilization() >= config.target_utilization {
                    break;
                }
            }
            samples
        })
        .collect();

    let finals: Vec<f64> = samples.iter().map(|r| r.iter().map(|s| s.report.utilization).fold(0.0, f64::max)).collect();
    let max_utilization = finals.iter().copied().fold(0.0, f64::max);
    let reached_full = finals.iter().all(|&u| u >= SCAN_FULL_UTILIZATION);
    if !reached_full {
        log::warn!(
            "utilization scan did not reach {SCAN_FULL_UTILIZATION} in every replication (max {max_utilization:.4}); \
             raise the load or the arrival cap"
        );
    }
    Ok(ScanResult { samples, max_utilization, reached_full })
}
