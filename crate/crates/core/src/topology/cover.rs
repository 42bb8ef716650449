//! Trail covers of the fiber graph used by the continuity component.
//!
//! The cover is computed over undirected fibers. Odd-degree nodes are paired
//! up with virtual edges, an Euler circuit of the augmented graph is walked,
//! and the circuit is cut at every virtual edge. This yields the minimum
//! possible number of edge-disjoint trails (half the odd-degree count, or a
//! single closed trail when every degree is even).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LinkId, Topology, TopologyError};

/// One trail: a node walk together with the directed link used for each hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaPath {
    nodes: Vec<usize>,
    links: Vec<LinkId>,
}

impl BetaPath {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn hop_count(&self) -> usize {
        self.links.len()
    }

    fn split_at(&self, hops: usize) -> (BetaPath, BetaPath) {
        let head = BetaPath { nodes: self.nodes[..=hops].to_vec(), links: self.links[..hops].to_vec() };
        let tail = BetaPath { nodes: self.nodes[hops..].to_vec(), links: self.links[hops..].to_vec() };
        (head, tail)
    }
}

/// Set when a requested path count could not be met exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverShortfall {
    pub requested: usize,
    pub achieved: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaPathSet {
    paths: Vec<BetaPath>,
    shortfall: Option<CoverShortfall>,
}

#[derive(Serialize, Deserialize)]
struct PathFile {
    paths: Vec<Vec<usize>>,
}

impl BetaPathSet {
    pub fn paths(&self) -> &[BetaPath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn hop_counts(&self) -> Vec<usize> {
        self.paths.iter().map(BetaPath::hop_count).collect()
    }

    pub fn shortfall(&self) -> Option<CoverShortfall> {
        self.shortfall
    }

    /// Path file JSON (`{"paths": [[node, ...], ...]}`), one trail per line.
    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .paths
            .iter()
            .map(|p| format!("    {}", serde_json::to_string(&p.nodes).expect("serializable")))
            .collect();
        format!("{{\n  \"paths\": [\n{}\n  ]\n}}", rows.join(",\n"))
    }

    /// Builds a set from node walks, validating each as a trail and checking
    /// that every fiber is covered.
    pub fn from_node_walks(topology: &Topology, walks: &[Vec<usize>]) -> Result<Self, TopologyError> {
        let mut covered = vec![false; topology.fiber_count()];
        let mut paths = Vec::with_capacity(walks.len());
        for (p, walk) in walks.iter().enumerate() {
            let invalid = |reason: String| TopologyError::InvalidPath { path: p, reason };
            if walk.len() < 2 {
                return Err(invalid("needs at least two nodes".into()));
            }
            if let Some(&bad) = walk.iter().find(|&&n| n >= topology.node_count()) {
                return Err(invalid(format!("node {bad} does not exist")));
            }
            let mut used = vec![false; topology.fiber_count()];
            let mut links = Vec::with_capacity(walk.len() - 1);
            for pair in walk.windows(2) {
                let (u, v) = (pair[0], pair[1]);
                let link = topology
                    .outgoing(u)
                    .iter()
                    .copied()
                    .find(|&l| topology.link(l).dst == v && !used[l.fiber()])
                    .ok_or_else(|| invalid(format!("no unused fiber between {u} and {v}")))?;
                used[link.fiber()] = true;
                covered[link.fiber()] = true;
                links.push(link);
            }
            paths.push(BetaPath { nodes: walk.clone(), links });
        }
        if let Some(fiber) = covered.iter().position(|c| !c) {
            return Err(TopologyError::UncoveredFiber(fiber));
        }
        Ok(BetaPathSet { paths, shortfall: None })
    }
}

/// Parses a path file and checks its cardinality when `expected_count` is set.
pub fn parse_beta_paths(
    topology: &Topology,
    json: &str,
    expected_count: Option<usize>,
) -> Result<BetaPathSet, TopologyError> {
    let file: PathFile = serde_json::from_str(json)?;
    let set = BetaPathSet::from_node_walks(topology, &file.paths)?;
    if let Some(expected) = expected_count {
        if set.len() != expected {
            return Err(TopologyError::InvalidPath {
                path: set.len(),
                reason: format!("file lists {} paths, configuration expects {expected}", set.len()),
            });
        }
    }
    Ok(set)
}

pub fn load_beta_paths(
    topology: &Topology,
    path: impl AsRef<Path>,
    expected_count: Option<usize>,
) -> Result<BetaPathSet, TopologyError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| TopologyError::Io { path: path.display().to_string(), source })?;
    parse_beta_paths(topology, &text, expected_count)
}

/// Minimum trail cover of all fibers, optionally split to `requested_count`
/// trails by halving the longest ones.
///
/// A shortfall is recorded (and logged) when the requested count is below
/// the minimum or above the number of fibers.
pub fn build_beta_paths(topology: &Topology, requested_count: Option<usize>) -> BetaPathSet {
    let mut paths = minimum_trail_cover(topology);
    let mut shortfall = None;
    if let Some(requested) = requested_count {
        while paths.len() < requested {
            let (idx, longest) = paths
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.hop_count().cmp(&b.1.hop_count()).then(b.0.cmp(&a.0)))
                .expect("cover is nonempty");
            if longest.hop_count() < 2 {
                break;
            }
            let (head, tail) = longest.split_at(longest.hop_count() / 2);
            paths[idx] = head;
            paths.insert(idx + 1, tail);
        }
        if paths.len() != requested {
            log::warn!("beta path cover: requested {requested} paths, achieved {}", paths.len());
            shortfall = Some(CoverShortfall { requested, achieved: paths.len() });
        }
    }
    BetaPathSet { paths, shortfall }
}

fn minimum_trail_cover(topology: &Topology) -> Vec<BetaPath> {
    let fibers = topology.fibers();
    let n = topology.node_count();

    let mut degree = vec![0usize; n];
    for &[a, b] in fibers {
        degree[a] += 1;
        degree[b] += 1;
    }
    let odd: Vec<usize> = (0..n).filter(|&v| degree[v] % 2 == 1).collect();

    // Edge list: real fibers first, then virtual edges pairing odd nodes.
    let mut edges: Vec<[usize; 2]> = fibers.to_vec();
    edges.extend(odd.chunks(2).map(|pair| [pair[0], pair[1]]));
    let real = fibers.len();

    let mut incident = vec![Vec::new(); n];
    for (e, &[a, b]) in edges.iter().enumerate() {
        incident[a].push(e);
        incident[b].push(e);
    }

    let start = odd.first().copied().unwrap_or(0);
    let circuit = euler_circuit(&edges, &incident, start);

    // Rotate so the walk begins just after a virtual edge, then cut there.
    let steps = match circuit.iter().position(|&(e, _, _)| e >= real) {
        Some(pos) => {
            let mut rotated = circuit[pos + 1..].to_vec();
            rotated.extend_from_slice(&circuit[..=pos]);
            rotated
        }
        None => circuit,
    };

    let mut trails = Vec::new();
    let mut current: Vec<(usize, usize, usize)> = Vec::new();
    for step in steps {
        if step.0 >= real {
            if !current.is_empty() {
                trails.push(std::mem::take(&mut current));
            }
        } else {
            current.push(step);
        }
    }
    if !current.is_empty() {
        trails.push(current);
    }

    trails
        .into_iter()
        .map(|steps| {
            let mut nodes = vec![steps[0].1];
            let mut links = Vec::with_capacity(steps.len());
            for (fiber, from, to) in steps {
                nodes.push(to);
                let forward = fibers[fiber] == [from, to];
                links.push(LinkId(2 * fiber + usize::from(!forward)));
            }
            BetaPath { nodes, links }
        })
        .collect()
}

/// Hierholzer's algorithm; returns `(edge, from, to)` steps in walk order.
fn euler_circuit(edges: &[[usize; 2]], incident: &[Vec<usize>], start: usize) -> Vec<(usize, usize, usize)> {
    let mut used = vec![false; edges.len()];
    let mut cursor = vec![0usize; incident.len()];
    // stack of (node, edge used to arrive)
    let mut stack: Vec<(usize, Option<usize>)> = vec![(start, None)];
    let mut reversed: Vec<(usize, usize, usize)> = Vec::with_capacity(edges.len());

    while let Some(&(node, arrived_by)) = stack.last() {
        let mut next = None;
        while cursor[node] < incident[node].len() {
            let e = incident[node][cursor[node]];
            cursor[node] += 1;
            if !used[e] {
                next = Some(e);
                break;
            }
        }
        match next {
            Some(e) => {
                used[e] = true;
                let [a, b] = edges[e];
                let other = if a == node { b } else { a };
                stack.push((other, Some(e)));
            }
            None => {
                stack.pop();
                if let (Some(e), Some(&(prev, _))) = (arrived_by, stack.last()) {
                    reversed.push((e, prev, node));
                }
            }
        }
    }
    reversed.reverse();
    reversed
}
