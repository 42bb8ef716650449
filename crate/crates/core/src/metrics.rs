//! Fragmentation quantities computed from a spectrum snapshot.
//!
//! * The contiguity component (`alpha`) averages, over links that still have
//!   a free slice, the ratio of the longest free run to the free count.
//! * The continuity component (`beta`) walks each designated trail and, for
//!   every slice index that is free on at least one hop, takes the longest
//!   run of consecutive free hops over the number of free hops. Indices are
//!   averaged per trail and trails are averaged together.
//! * The vectored metric is the Euclidean norm of the two. It is min-max
//!   normalised against the chequered worst case and flipped so that larger
//!   values mean more fragmentation (`avfm`).
//! * `lefm` is the plain link-based external fragmentation ratio.
//!
//! When nothing is free the affected component takes its no-fragmentation
//! value of 1.

use std::fmt::Write as _;

use crate::spectrum::{LinkStats, SpectrumState};
use crate::topology::{BetaPath, BetaPathSet, LinkId, Topology};

/// Largest possible vectored metric, reached when both components are 1.
pub const VFM_MAX: f64 = std::f64::consts::SQRT_2;

/// Contiguity component from per-link `(longest free run, free count)`
/// statistics. `None` when no link has a free slice.
pub fn alpha_from_link_stats<I: IntoIterator<Item = LinkStats>>(stats: I) -> Option<f64> {
    let mut sum = 0.0;
    let mut links = 0usize;
    for s in stats {
        if s.free > 0 {
            sum += s.max_contiguous as f64 / s.free as f64;
            links += 1;
        }
    }
    (links > 0).then(|| sum / links as f64)
}

pub fn compute_alpha(state: &SpectrumState) -> Option<f64> {
    alpha_from_link_stats((0..state.link_count()).map(|l| state.link_stats(LinkId(l))))
}

/// Per-trail continuity totals: the number of slice indices with at least one
/// free hop, and the sum of their run ratios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathContinuity {
    pub index_count: usize,
    pub ratio_sum: f64,
}

impl PathContinuity {
    /// Builds totals from explicit `(longest free hop run, free hops)` terms
    /// and a given index count. Lets callers reproduce hand-computed values
    /// where the divisor is fixed independently of the listed terms.
    pub fn from_terms(terms: &[(usize, usize)], index_count: usize) -> Self {
        let ratio_sum = terms.iter().map(|&(run, free)| run as f64 / free as f64).sum();
        PathContinuity { index_count, ratio_sum }
    }

    /// Mean ratio over indices, or `None` if no index is free on the trail.
    pub fn value(&self) -> Option<f64> {
        (self.index_count > 0).then(|| self.ratio_sum / self.index_count as f64)
    }
}

/// Scans one trail hop by hop, tracking per-index runs.
pub fn path_continuity(state: &SpectrumState, path: &BetaPath) -> PathContinuity {
    let s = state.slice_count();
    let mut run = vec![0u32; s];
    let mut best = vec![0u32; s];
    let mut free_hops = vec![0u32; s];
    for &link in path.links() {
        for j in 0..s {
            if state.is_free(link, j) {
                run[j] += 1;
                free_hops[j] += 1;
                best[j] = best[j].max(run[j]);
            } else {
                run[j] = 0;
            }
        }
    }
    let mut totals = PathContinuity::default();
    for j in 0..s {
        if free_hops[j] > 0 {
            totals.index_count += 1;
            totals.ratio_sum += best[j] as f64 / free_hops[j] as f64;
        }
    }
    totals
}

/// Continuity component over a set of trails. A trail with no free index
/// contributes 1; `None` only when no trail has any free index.
pub fn beta_from_paths(paths: &[PathContinuity]) -> Option<f64> {
    if paths.iter().all(|p| p.index_count == 0) {
        return None;
    }
    let sum: f64 = paths.iter().map(|p| p.value().unwrap_or(1.0)).sum();
    Some(sum / paths.len() as f64)
}

pub fn compute_beta(state: &SpectrumState, paths: &BetaPathSet) -> Option<f64> {
    let totals: Vec<PathContinuity> = paths.paths().iter().map(|p| path_continuity(state, p)).collect();
    beta_from_paths(&totals)
}

pub fn compute_vfm(alpha: f64, beta: f64) -> f64 {
    (alpha * alpha + beta * beta).sqrt()
}

/// Link-based external fragmentation from per-link statistics, `None` when
/// nothing is free.
pub fn lefm_from_link_stats<I: IntoIterator<Item = LinkStats>>(stats: I) -> Option<f64> {
    let (mut largest, mut free) = (0usize, 0usize);
    for s in stats {
        largest += s.max_contiguous;
        free += s.free;
    }
    (free > 0).then(|| 1.0 - largest as f64 / free as f64)
}

pub fn compute_lefm(state: &SpectrumState) -> Option<f64> {
    lefm_from_link_stats((0..state.link_count()).map(|l| state.link_stats(LinkId(l))))
}

/// Lowest contiguity component reachable on a grid of `slice_count` slices:
/// every other slice free, with the larger parity class free when the count
/// is odd. Equals `2 / S` for even `S`.
pub fn alpha_lower_bound(slice_count: usize) -> f64 {
    assert!(slice_count > 0);
    1.0 / slice_count.div_ceil(2) as f64
}

/// Chequered-pattern lower bound of the continuity component on a trail of
/// `hops` hops: `2/H` for even `H`, `2H/(H^2 - 1)` for odd `H > 1`, and 1 for
/// a single hop.
pub fn beta_lower_bound(hops: usize) -> f64 {
    assert!(hops > 0);
    if hops == 1 {
        1.0
    } else if hops % 2 == 0 {
        2.0 / hops as f64
    } else {
        let h = hops as f64;
        2.0 * h / (h * h - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricBounds {
    pub alpha_min: f64,
    pub beta_min: f64,
    pub vfm_min: f64,
    pub vfm_max: f64,
}

impl MetricBounds {
    /// Bounds for a per-link grid size and the hop counts of the trail set.
    /// The trail-set bound is the mean of per-trail bounds.
    pub fn new(slice_count: usize, hop_counts: &[usize]) -> Self {
        assert!(!hop_counts.is_empty(), "need at least one trail");
        let alpha_min = alpha_lower_bound(slice_count);
        let beta_min = hop_counts.iter().map(|&h| beta_lower_bound(h)).sum::<f64>() / hop_counts.len() as f64;
        MetricBounds { alpha_min, beta_min, vfm_min: compute_vfm(alpha_min, beta_min), vfm_max: VFM_MAX }
    }
}

pub fn compute_bounds(topology: &Topology, paths: &BetaPathSet) -> MetricBounds {
    MetricBounds::new(topology.slice_count(), &paths.hop_counts())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub nvfm: f64,
    pub avfm: f64,
    /// The raw value fell outside `[vfm_min, vfm_max]` and was clamped.
    pub clamped: bool,
}

pub fn normalize(vfm: f64, bounds: &MetricBounds) -> Normalized {
    let span = bounds.vfm_max - bounds.vfm_min;
    if span <= 0.0 {
        return Normalized { nvfm: 1.0, avfm: 0.0, clamped: false };
    }
    let raw = (vfm - bounds.vfm_min) / span;
    let nvfm = raw.clamp(0.0, 1.0);
    Normalized { nvfm, avfm: 1.0 - nvfm, clamped: nvfm != raw }
}

fn adapt(value: f64, min: f64) -> f64 {
    if min >= 1.0 {
        return 0.0;
    }
    (1.0 - (value - min) / (1.0 - min)).clamp(0.0, 1.0)
}

/// Each component min-max normalised against its own bound and flipped so
/// that 0 means unfragmented and 1 means the chequered worst case.
pub fn adapted_components(alpha: f64, beta: f64, bounds: &MetricBounds) -> (f64, f64) {
    (adapt(alpha, bounds.alpha_min), adapt(beta, bounds.beta_min))
}

/// Every metric for one observation instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragmentationReport {
    pub alpha: f64,
    pub beta: f64,
    pub vfm: f64,
    pub nvfm: f64,
    pub avfm: f64,
    pub a_alpha: f64,
    pub a_beta: f64,
    pub lefm: f64,
    pub utilization: f64,
    /// Links with at least one free slice.
    pub el_size: usize,
    pub nvfm_clamped: bool,
}

pub fn snapshot_report(state: &SpectrumState, paths: &BetaPathSet, bounds: &MetricBounds) -> FragmentationReport {
    let stats: Vec<LinkStats> = (0..state.link_count()).map(|l| state.link_stats(LinkId(l))).collect();
    let alpha = alpha_from_link_stats(stats.iter().copied()).unwrap_or(1.0);
    let beta = compute_beta(state, paths).unwrap_or(1.0);
    let lefm = lefm_from_link_stats(stats.iter().copied()).unwrap_or(0.0);
    report_from_components(alpha, beta, lefm, state.utilization(), stats.iter().filter(|s| s.free > 0).count(), bounds)
}

/// Assembles a report from already computed components.
pub fn report_from_components(
    alpha: f64,
    beta: f64,
    lefm: f64,
    utilization: f64,
    el_size: usize,
    bounds: &MetricBounds,
) -> FragmentationReport {
    let vfm = compute_vfm(alpha, beta);
    let norm = normalize(vfm, bounds);
    let (a_alpha, a_beta) = adapted_components(alpha, beta, bounds);
    FragmentationReport {
        alpha,
        beta,
        vfm,
        nvfm: norm.nvfm,
        avfm: norm.avfm,
        a_alpha,
        a_beta,
        lefm,
        utilization,
        el_size,
        nvfm_clamped: norm.clamped,
    }
}

/// A report tagged with when it was taken and the blocking ratio so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub arrivals: u64,
    pub br_tr: f64,
    pub report: FragmentationReport,
}

pub const SAMPLE_CSV_HEADER: &str = "t,arrivals,utilization,alpha,beta,vfm,nvfm,avfm,a_alpha,a_beta,lefm,br_tr";

impl Sample {
    /// CSV row in [`SAMPLE_CSV_HEADER`] order, six decimals.
    pub fn csv_row(&self) -> String {
        let r = &self.report;
        let mut row = String::with_capacity(128);
        let _ = write!(
            row,
            "{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.t,
            self.arrivals,
            r.utilization,
            r.alpha,
            r.beta,
            r.vfm,
            r.nvfm,
            r.avfm,
            r.a_alpha,
            r.a_beta,
            r.lefm,
            self.br_tr
        );
        row
    }

    pub fn get(&self, metric: Metric) -> f64 {
        let r = &self.report;
        match metric {
            Metric::Utilization => r.utilization,
            Metric::Alpha => r.alpha,
            Metric::Beta => r.beta,
            Metric::Vfm => r.vfm,
            Metric::Nvfm => r.nvfm,
            Metric::Avfm => r.avfm,
            Metric::AAlpha => r.a_alpha,
            Metric::ABeta => r.a_beta,
            Metric::Lefm => r.lefm,
            Metric::BrTr => self.br_tr,
        }
    }
}

/// Scalar observables that can be averaged across samples and replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Utilization,
    Alpha,
    Beta,
    Vfm,
    Nvfm,
    Avfm,
    AAlpha,
    ABeta,
    Lefm,
    BrTr,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::Utilization,
        Metric::Alpha,
        Metric::Beta,
        Metric::Vfm,
        Metric::Nvfm,
        Metric::Avfm,
        Metric::AAlpha,
        Metric::ABeta,
        Metric::Lefm,
        Metric::BrTr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Utilization => "utilization",
            Metric::Alpha => "alpha",
            Metric::Beta => "beta",
            Metric::Vfm => "vfm",
            Metric::Nvfm => "nvfm",
            Metric::Avfm => "avfm",
            Metric::AAlpha => "a_alpha",
            Metric::ABeta => "a_beta",
            Metric::Lefm => "lefm",
            Metric::BrTr => "br_tr",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_beta_paths, parse_beta_paths};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn stats(pairs: &[(usize, usize)]) -> Vec<LinkStats> {
        pairs.iter().map(|&(c, s)| LinkStats { max_contiguous: c, free: s }).collect()
    }

    #[test]
    fn alpha_from_worked_link_stats() {
        let a = alpha_from_link_stats(stats(&[(2, 3), (2, 3), (3, 5), (2, 3), (4, 6)])).unwrap();
        assert!(close(a, 0.6533, 1e-4), "{a}");
        // fully busy links are excluded
        let b = alpha_from_link_stats(stats(&[(2, 3), (0, 0)])).unwrap();
        assert!(close(b, 2.0 / 3.0, 1e-15));
        assert_eq!(alpha_from_link_stats(stats(&[(0, 0), (0, 0)])), None);
    }

    #[test]
    fn alpha_limits() {
        let empty = SpectrumState::new(4, 8);
        assert_eq!(compute_alpha(&empty), Some(1.0));
        let mut chequer = SpectrumState::new(4, 8);
        for l in 0..4 {
            for s in (1..8).step_by(2) {
                chequer.set_slice(LinkId(l), s, true);
            }
        }
        assert_eq!(compute_alpha(&chequer), Some(0.25));
    }

    #[test]
    fn beta_from_printed_terms() {
        let p = PathContinuity::from_terms(&[(1, 2), (1, 2), (4, 4), (1, 1), (1, 1), (4, 4), (5, 5)], 8);
        assert!(close(beta_from_paths(&[p]).unwrap(), 0.75, 1e-12));
    }

    #[test]
    fn beta_all_free_and_chequered() {
        let t = Topology::from_fibers("line", 5, 6, &[[0, 1], [1, 2], [2, 3], [3, 4]]).unwrap();
        let paths = build_beta_paths(&t, None);
        assert_eq!(paths.hop_counts(), vec![4]);
        let mut st = SpectrumState::for_topology(&t);
        assert_eq!(compute_beta(&st, &paths), Some(1.0));
        for (hop, &l) in paths.paths()[0].links().iter().enumerate() {
            for s in 0..6 {
                st.set_slice(l, s, (hop + s) % 2 == 1);
            }
        }
        assert_eq!(compute_beta(&st, &paths), Some(0.5));
    }

    #[test]
    fn beta_busy_path_is_neutral() {
        let a = PathContinuity { index_count: 0, ratio_sum: 0.0 };
        let b = PathContinuity::from_terms(&[(1, 2)], 1);
        assert_eq!(beta_from_paths(&[a, b]), Some(0.75));
        assert_eq!(beta_from_paths(&[a, a]), None);
    }

    #[test]
    fn bounds_reproduce_worked_minimum() {
        let b = MetricBounds::new(8, &[5]);
        assert_eq!(b.alpha_min, 0.25);
        assert!(close(b.beta_min, 10.0 / 24.0, 1e-15));
        assert!(close(b.vfm_min, 0.48591, 1e-5));
        assert!(close(b.vfm_min, 0.486, 1e-3));
        assert_eq!(beta_lower_bound(4), 0.5);
        assert_eq!(beta_lower_bound(1), 1.0);
        assert_eq!(alpha_lower_bound(7), 0.25);
        let multi = MetricBounds::new(8, &[4, 2]);
        assert_eq!(multi.beta_min, 0.75);
    }

    #[test]
    fn vfm_and_normalization() {
        assert!(close(compute_vfm(0.6533, 0.75), 0.9944, 1e-3));
        assert_eq!(compute_vfm(1.0, 1.0), VFM_MAX);
        assert!(close(compute_vfm(0.25, 10.0 / 24.0), 0.48591, 1e-5));

        let b = MetricBounds { alpha_min: 0.0, beta_min: 0.0, vfm_min: 0.486, vfm_max: 1.414 };
        let n = normalize(0.9944, &b);
        assert!(close(n.nvfm, 0.547844, 1e-3) && close(n.avfm, 0.452156, 1e-3));
        let exact = MetricBounds::new(8, &[5]);
        assert_eq!(normalize(VFM_MAX, &exact), Normalized { nvfm: 1.0, avfm: 0.0, clamped: false });
        let at_min = normalize(exact.vfm_min, &exact);
        assert_eq!((at_min.nvfm, at_min.avfm), (0.0, 1.0));
        let below = normalize(exact.vfm_min - 0.01, &exact);
        assert!(below.clamped && below.avfm == 1.0);
    }

    #[test]
    fn adapted_component_limits() {
        let b = MetricBounds::new(8, &[4]);
        assert_eq!(adapted_components(1.0, 1.0, &b), (0.0, 0.0));
        assert_eq!(adapted_components(b.alpha_min, b.beta_min, &b), (1.0, 1.0));
        let degenerate = MetricBounds::new(1, &[1]);
        assert_eq!(adapted_components(1.0, 1.0, &degenerate), (0.0, 0.0));
        assert_eq!(normalize(VFM_MAX, &degenerate).avfm, 0.0);
    }

    #[test]
    fn lefm_cases() {
        assert_eq!(lefm_from_link_stats(stats(&[(2, 3), (2, 3), (3, 5), (2, 3), (4, 6)])), Some(0.35));
        assert_eq!(compute_lefm(&SpectrumState::new(3, 8)), Some(0.0));
        let mut chequer = SpectrumState::new(3, 8);
        for l in 0..3 {
            for s in (0..8).step_by(2) {
                chequer.set_slice(LinkId(l), s, true);
            }
        }
        assert_eq!(compute_lefm(&chequer), Some(0.75));
    }

    #[test]
    fn report_sentinels() {
        let t = Topology::from_fibers("tri", 3, 8, &[[0, 1], [1, 2], [2, 0]]).unwrap();
        let paths = build_beta_paths(&t, None);
        let bounds = compute_bounds(&t, &paths);
        let mut st = SpectrumState::for_topology(&t);
        let r = snapshot_report(&st, &paths, &bounds);
        assert_eq!((r.avfm, r.lefm, r.utilization, r.el_size), (0.0, 0.0, 0.0, 6));
        for l in 0..6 {
            for s in 0..8 {
                st.set_slice(LinkId(l), s, true);
            }
        }
        let full = snapshot_report(&st, &paths, &bounds);
        assert_eq!((full.avfm, full.lefm, full.utilization, full.el_size), (0.0, 0.0, 1.0, 0));
    }

    #[test]
    fn beta_ignores_trail_direction() {
        let t = Topology::from_fibers("line", 4, 5, &[[0, 1], [1, 2], [2, 3]]).unwrap();
        let fwd = parse_beta_paths(&t, r#"{"paths":[[0,1,2,3]]}"#, None).unwrap();
        let rev = parse_beta_paths(&t, r#"{"paths":[[3,2,1,0]]}"#, None).unwrap();
        let mut st = SpectrumState::for_topology(&t);
        for (l, s) in [(0, 1), (2, 0), (2, 3), (4, 1), (1, 2), (3, 2), (5, 4)] {
            st.set_slice(LinkId(l), s, true);
            st.set_slice(LinkId(l).reverse(), s, true);
        }
        assert_eq!(compute_beta(&st, &fwd), compute_beta(&st, &rev));
    }

    #[test]
    fn sample_csv_format() {
        let r = report_from_components(1.0, 1.0, 0.0, 0.0, 2, &MetricBounds::new(8, &[2]));
        let s = Sample { t: 1.5, arrivals: 10, br_tr: 0.25, report: r };
        assert_eq!(
            s.csv_row(),
            "1.500000,10,0.000000,1.000000,1.000000,1.414214,1.000000,0.000000,0.000000,0.000000,0.000000,0.250000"
        );
        assert_eq!(SAMPLE_CSV_HEADER.split(',').count(), s.csv_row().split(',').count());
    }
}
