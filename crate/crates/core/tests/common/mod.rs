//! Reference implementations for the integration tests: a deliberately
//! naive simulator over `Vec<bool>` bitmaps with BFS routing, and naive
//! metric formulas. Floating-point sums run in the same order as the
//! library so results can be compared bit for bit.

#![allow(dead_code)]

use std::collections::VecDeque;

use fragsim::topology::{BetaPathSet, Topology};
use fragsim::traffic::Demand;
use proptest::prelude::*;

pub fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn bundled_topology(name: &str) -> String {
    format!("{}/topologies/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Directed links of a topology as `(src, dst)`, id order.
pub fn link_ends(t: &Topology) -> Vec<(usize, usize)> {
    t.links().iter().map(|l| (l.src, l.dst)).collect()
}

/// BFS distances from `src`.
pub fn bfs(n: usize, links: &[(usize, usize)], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; n];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &(a, b) in links {
            if a == u && dist[b] == usize::MAX {
                dist[b] = dist[u] + 1;
                queue.push_back(b);
            }
        }
    }
    dist
}

/// Shortest route as link ids: walking back from `dst`, take the incoming
/// link from a node one step closer with the smallest (node, link id).
pub fn reference_route(n: usize, links: &[(usize, usize)], src: usize, dst: usize) -> Vec<usize> {
    let dist = bfs(n, links, src);
    let mut route = Vec::new();
    let mut v = dst;
    while v != src {
        let (u, id) = links
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| b == v && dist[a] != usize::MAX && dist[a] + 1 == dist[v])
            .map(|(id, &(a, _))| (a, id))
            .min()
            .unwrap();
        route.push(id);
        v = u;
    }
    route.reverse();
    route
}

fn longest_free_run(bits: &[bool]) -> usize {
    let (mut best, mut run) = (0, 0);
    for &busy in bits {
        run = if busy { 0 } else { run + 1 };
        best = best.max(run);
    }
    best
}

/// Every metric, from `busy[link][slice]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveReport {
    pub alpha: f64,
    pub beta: f64,
    pub vfm: f64,
    pub nvfm: f64,
    pub avfm: f64,
    pub a_alpha: f64,
    pub a_beta: f64,
    pub lefm: f64,
    pub utilization: f64,
}

pub fn naive_alpha(busy: &[Vec<bool>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0;
    for link in busy {
        let free = link.iter().filter(|b| !**b).count();
        if free > 0 {
            sum += longest_free_run(link) as f64 / free as f64;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// `(index_count, ratio_sum)` for one trail given as link ids.
pub fn naive_path_terms(busy: &[Vec<bool>], path: &[usize]) -> (usize, f64) {
    let s = busy[0].len();
    let mut count = 0;
    let mut sum = 0.0;
    for j in 0..s {
        let column: Vec<bool> = path.iter().map(|&l| !busy[l][j]).collect();
        let free_hops = column.iter().filter(|f| **f).count();
        if free_hops == 0 {
            continue;
        }
        let mut best = 0;
        let mut run = 0;
        for &f in &column {
            run = if f { run + 1 } else { 0 };
            best = best.max(run);
        }
        count += 1;
        sum += best as f64 / free_hops as f64;
    }
    (count, sum)
}

pub fn naive_beta(busy: &[Vec<bool>], paths: &[Vec<usize>]) -> Option<f64> {
    let terms: Vec<(usize, f64)> = paths.iter().map(|p| naive_path_terms(busy, p)).collect();
    if terms.iter().all(|t| t.0 == 0) {
        return None;
    }
    let sum: f64 = terms.iter().map(|&(c, s)| if c == 0 { 1.0 } else { s / c as f64 }).sum();
    Some(sum / paths.len() as f64)
}

pub fn naive_bounds(slice_count: usize, hops: &[usize]) -> (f64, f64, f64) {
    let alpha_min = 1.0 / slice_count.div_ceil(2) as f64;
    let per_path = |h: usize| -> f64 {
        match h {
            1 => 1.0,
            h if h % 2 == 0 => 2.0 / h as f64,
            h => 2.0 * h as f64 / ((h * h) as f64 - 1.0),
        }
    };
    let beta_min = hops.iter().map(|&h| per_path(h)).sum::<f64>() / hops.len() as f64;
    let vfm_min = (alpha_min * alpha_min + beta_min * beta_min).sqrt();
    (alpha_min, beta_min, vfm_min)
}

pub fn naive_report(busy: &[Vec<bool>], paths: &[Vec<usize>]) -> NaiveReport {
    let slice_count = busy[0].len();
    let hops: Vec<usize> = paths.iter().map(Vec::len).collect();
    let (alpha_min, beta_min, vfm_min) = naive_bounds(slice_count, &hops);
    let alpha = naive_alpha(busy).unwrap_or(1.0);
    let beta = naive_beta(busy, paths).unwrap_or(1.0);
    let vfm = (alpha * alpha + beta * beta).sqrt();
    let span = std::f64::consts::SQRT_2 - vfm_min;
    let nvfm = if span <= 0.0 { 1.0 } else { ((vfm - vfm_min) / span).clamp(0.0, 1.0) };
    let adapt = |x: f64, min: f64| if min >= 1.0 { 0.0 } else { (1.0 - (x - min) / (1.0 - min)).clamp(0.0, 1.0) };
    let total_free: usize = busy.iter().map(|l| l.iter().filter(|b| !**b).count()).sum();
    let largest: usize = busy.iter().map(|l| longest_free_run(l)).sum();
    let total = busy.len() * slice_count;
    NaiveReport {
        alpha,
        beta,
        vfm,
        nvfm,
        avfm: 1.0 - nvfm,
        a_alpha: adapt(alpha, alpha_min),
        a_beta: adapt(beta, beta_min),
        lefm: if total_free == 0 { 0.0 } else { 1.0 - largest as f64 / total_free as f64 },
        utilization: (total - total_free) as f64 / total as f64,
    }
}

pub fn path_link_ids(paths: &BetaPathSet) -> Vec<Vec<usize>> {
    paths.paths().iter().map(|p| p.links().iter().map(|l| l.index()).collect()).collect()
}

/// One arrival as seen by the reference simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStep {
    pub admitted: Option<usize>,
    pub report: NaiveReport,
    pub br_tr: f64,
}

/// Replays a trace: departures due at or before each arrival are released
/// first, then the arrival is routed and placed first-fit.
pub struct ReferenceSimulator {
    pub node_count: usize,
    pub links: Vec<(usize, usize)>,
    pub busy: Vec<Vec<bool>>,
    pub paths: Vec<Vec<usize>>,
    active: Vec<(f64, u64, Vec<usize>, usize, usize)>,
    total: u64,
    blocked: u64,
}

impl ReferenceSimulator {
    pub fn new(t: &Topology, paths: &BetaPathSet) -> Self {
        ReferenceSimulator {
            node_count: t.node_count(),
            links: link_ends(t),
            busy: vec![vec![false; t.slice_count()]; t.link_count()],
            paths: path_link_ids(paths),
            active: Vec::new(),
            total: 0,
            blocked: 0,
        }
    }

    fn release_until(&mut self, time: f64) {
        self.active.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        while let Some(first) = self.active.first() {
            if first.0 > time {
                break;
            }
            let (_, _, route, start, width) = self.active.remove(0);
            for &l in &route {
                for j in start..start + width {
                    assert!(self.busy[l][j]);
                    self.busy[l][j] = false;
                }
            }
        }
    }

    pub fn step(&mut self, d: &Demand) -> ReferenceStep {
        self.release_until(d.arrival_time);
        self.total += 1;
        let route = reference_route(self.node_count, &self.links, d.src, d.dst);
        let s = self.busy[0].len();
        let start = (0..=s.saturating_sub(d.width))
            .filter(|_| d.width <= s)
            .find(|&a| route.iter().all(|&l| (a..a + d.width).all(|j| !self.busy[l][j])));
        match start {
            Some(a) => {
                for &l in &route {
                    for j in a..a + d.width {
                        self.busy[l][j] = true;
                    }
                }
                self.active.push((d.arrival_time + d.holding_time, d.id, route, a, d.width));
            }
            None => self.blocked += 1,
        }
        ReferenceStep {
            admitted: start,
            report: naive_report(&self.busy, &self.paths),
            br_tr: self.blocked as f64 / self.total as f64,
        }
    }

    pub fn finish(&mut self) {
        self.release_until(f64::INFINITY);
    }
}

/// Connected multigraph with `nodes` nodes: a random spanning tree plus
/// extra fibers (possibly parallel).
pub fn arb_topology(max_nodes: usize, max_slices: usize) -> impl Strategy<Value = Topology> {
    (2..=max_nodes, 1..=max_slices).prop_flat_map(move |(n, s)| {
        let tree = prop::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = prop::collection::vec((0..n, 0..n), 0..=n);
        (Just(n), Just(s), tree, extra).prop_map(|(n, s, tree, extra)| {
            let mut fibers: Vec<[usize; 2]> = tree.iter().enumerate().map(|(k, ix)| [ix.index(k + 1), k + 1]).collect();
            fibers.extend(extra.into_iter().filter(|(a, b)| a != b).map(|(a, b)| [a, b]));
            Topology::from_fibers("random", n, s, &fibers).expect("connected by construction")
        })
    })
}

/// Demands with integer times (to exercise simultaneous events) in
/// nondecreasing arrival order.
pub fn arb_trace(node_count: usize, max_width: usize, max_len: usize) -> impl Strategy<Value = Vec<Demand>> {
    prop::collection::vec((0u32..3, 0..node_count, 1..node_count, 1..=max_width, 1u32..12), 1..=max_len).prop_map(
        move |raw| {
            let mut t = 0.0;
            raw.into_iter()
                .enumerate()
                .map(|(id, (gap, src, offset, width, hold))| {
                    t += gap as f64;
                    Demand {
                        id: id as u64,
                        src,
                        dst: (src + offset) % node_count,
                        width,
                        arrival_time: t,
                        holding_time: hold as f64,
                    }
                })
                .collect()
        },
    )
}

struct Recorder(Vec<(bool, fragsim::metrics::Sample)>);

impl fragsim::engine::Observer for Recorder {
    fn after_arrival(
        &mut self,
        sim: &fragsim::engine::Simulation<'_>,
        _demand: &Demand,
        outcome: &fragsim::engine::Admission,
    ) {
        self.0.push((outcome.is_blocked(), sim.sample()));
    }
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

/// Runs `trace` through the library simulator and the reference, and
/// reports the first disagreement in admission, any metric, or the final
/// bitmaps.
pub fn replay_matches(t: &Topology, trace: &[Demand]) -> Result<(), String> {
    use fragsim::engine::{Network, Simulation};
    use fragsim::topology::{build_beta_paths, LinkId};

    let paths = build_beta_paths(t, None);
    let mut reference = ReferenceSimulator::new(t, &paths);
    let network = Network::new(t.clone(), paths);
    let mut sim = Simulation::new(&network);
    let mut recorder = Recorder(Vec::new());
    sim.run(trace.iter().cloned(), trace.len() as u64, &mut recorder);

    for (k, (d, (blocked, sample))) in trace.iter().zip(&recorder.0).enumerate() {
        let step = reference.step(d);
        if step.admitted.is_none() != *blocked {
            return Err(format!("arrival {k}: admission differs (reference {:?})", step.admitted));
        }
        let r = &sample.report;
        let n = &step.report;
        let pairs = [
            ("alpha", r.alpha, n.alpha),
            ("beta", r.beta, n.beta),
            ("vfm", r.vfm, n.vfm),
            ("nvfm", r.nvfm, n.nvfm),
            ("avfm", r.avfm, n.avfm),
            ("a_alpha", r.a_alpha, n.a_alpha),
            ("a_beta", r.a_beta, n.a_beta),
            ("lefm", r.lefm, n.lefm),
            ("utilization", r.utilization, n.utilization),
            ("br_tr", sample.br_tr, step.br_tr),
        ];
        for (name, got, want) in pairs {
            if !same(got, want) {
                return Err(format!("arrival {k}: {name} {got:?} != reference {want:?}"));
            }
        }
    }
    if recorder.0.len() != trace.len() {
        return Err(format!("processed {} of {} arrivals", recorder.0.len(), trace.len()));
    }
    for (l, row) in reference.busy.iter().enumerate() {
        for (j, &busy) in row.iter().enumerate() {
            if sim.state().is_free(LinkId(l), j) == busy {
                return Err(format!("final bitmap differs at link {l} slice {j}"));
            }
        }
    }
    sim.drain();
    reference.finish();
    if sim.state().total_free() != t.total_slices() || reference.busy.iter().flatten().any(|b| *b) {
        return Err("spectrum not empty after all departures".into());
    }
    Ok(())
}
