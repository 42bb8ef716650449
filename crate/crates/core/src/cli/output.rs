//! Result files. Every file is written to a temporary sibling and renamed
//! into place, so a crashed run never leaves a truncated CSV behind.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::CliError;
use crate::engine::{Network, ScanResult, SweepResult, TransientResult};
use crate::metrics::{Metric, Sample, SAMPLE_CSV_HEADER};
use crate::traffic::RNG_NAME;

pub const SWEEP_CSV_HEADER: &str = "load,max_demand,lambda,holding,metric,mean,ci99";
pub const TRANSIENT_CI_CSV_HEADER: &str = "arrivals,t,metric,mean,ci99";
pub const SCAN_CSV_HEADER: &str =
    "replication,t,arrivals,utilization,alpha,beta,vfm,nvfm,avfm,a_alpha,a_beta,lefm,br_tr";

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TopologyInfo<'a> {
    name: &'a str,
    content_hash: String,
    nodes: usize,
    fibers: usize,
    slice_count: usize,
}

#[derive(Debug, Serialize)]
struct CoverInfo {
    count: usize,
    hop_counts: Vec<usize>,
    requested: Option<usize>,
}

#[derive(Debug, Serialize)]
struct BoundsInfo {
    alpha_min: f64,
    beta_min: f64,
    vfm_min: f64,
    vfm_max: f64,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    rng: &'static str,
    seed: u64,
    replications: usize,
    topology: TopologyInfo<'a>,
    beta_paths: CoverInfo,
    bounds: BoundsInfo,
    config: &'a ExperimentConfig,
    files: Vec<String>,
    clamp_events: usize,
}

/// Run metadata: everything needed to reproduce the files next to it.
/// Deliberately free of timestamps and host details so reruns are
/// byte-identical.
pub fn metadata_json(network: &Network, config: &ExperimentConfig, files: Vec<String>, clamp_events: usize) -> String {
    let topo = network.topology();
    let bounds = network.bounds();
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        rng: RNG_NAME,
        seed: config.seed,
        replications: config.replications,
        topology: TopologyInfo {
            name: topo.name(),
            content_hash: topo.content_hash(),
            nodes: topo.node_count(),
            fibers: topo.fiber_count(),
            slice_count: topo.slice_count(),
        },
        beta_paths: CoverInfo {
            count: network.paths().len(),
            hop_counts: network.paths().hop_counts(),
            requested: network.paths().shortfall().map(|s| s.requested),
        },
        bounds: BoundsInfo {
            alpha_min: bounds.alpha_min,
            beta_min: bounds.beta_min,
            vfm_min: bounds.vfm_min,
            vfm_max: bounds.vfm_max,
        },
        config,
        files,
        clamp_events,
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    text
}

pub fn samples_csv(samples: &[Sample]) -> String {
    let mut out = String::with_capacity(samples.len() * 96);
    out.push_str(SAMPLE_CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

/// Long format: one row per (sample point, metric).
pub fn transient_ci_csv(result: &TransientResult) -> String {
    let mut out = String::from(TRANSIENT_CI_CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        for m in Metric::ALL {
            let s = p.get(m);
            writeln!(out, "{},{},{},{},{}", p.arrivals, p.t, m.name(), s.mean, s.ci99).unwrap();
        }
    }
    out
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in &result.points {
        let p = r.point;
        let rows = Metric::ALL.iter().map(|&m| (m.name(), r.get(m))).chain([("a_ratio", r.a_ratio)]);
        for (name, s) in rows {
            writeln!(out, "{},{},{},{},{},{},{}", p.load(), p.max_demand, p.lambda, p.holding, name, s.mean, s.ci99)
                .unwrap();
        }
    }
    out
}

pub fn scan_csv(result: &ScanResult) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for (rep, samples) in result.samples.iter().enumerate() {
        for s in samples {
            writeln!(out, "{rep},{}", s.csv_row()).unwrap();
        }
    }
    out
}
