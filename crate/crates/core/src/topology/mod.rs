//! Network graph model.
//!
//! A topology is read as a list of bidirectional fibers. Every fiber `k`
//! expands into two directed links: `2k` runs in the listed direction and
//! `2k + 1` runs in reverse. All links carry the same number of spectrum
//! slices.

mod cover;
mod routing;

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cover::{build_beta_paths, load_beta_paths, parse_beta_paths, BetaPath, BetaPathSet, CoverShortfall};
pub use routing::{shortest_path, RouteTable};

/// Index of a directed link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

impl LinkId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    /// The fiber this link belongs to.
    #[inline]
    pub fn fiber(self) -> usize {
        self.0 / 2
    }

    /// The link running the other way on the same fiber.
    #[inline]
    pub fn reverse(self) -> LinkId {
        LinkId(self.0 ^ 1)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    pub src: usize,
    pub dst: usize,
    pub slice_count: usize,
}

/// An ordered sequence of directed links where each link starts at the node
/// the previous one ends at.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Route {
    links: Vec<LinkId>,
}

impl Route {
    /// Builds a route, checking adjacency and that no link repeats.
    pub fn new(topology: &Topology, links: Vec<LinkId>) -> Result<Self, TopologyError> {
        for (k, pair) in links.windows(2).enumerate() {
            let a = topology.link(pair[0]);
            let b = topology.link(pair[1]);
            if a.dst != b.src {
                return Err(TopologyError::BrokenRoute { position: k + 1 });
            }
        }
        for (k, id) in links.iter().enumerate() {
            if id.index() >= topology.link_count() {
                return Err(TopologyError::UnknownLink(id.index()));
            }
            if links[..k].contains(id) {
                return Err(TopologyError::RepeatedLink(id.index()));
            }
        }
        Ok(Route { links })
    }

    pub(crate) fn from_links_unchecked(links: Vec<LinkId>) -> Self {
        Route { links }
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("topology must have at least one node")]
    NoNodes,
    #[error("slice_count must be positive")]
    NoSlices,
    #[error("topology must have at least one fiber")]
    NoFibers,
    #[error("dangling node: fiber {fiber} references node {node} but only {node_count} nodes exist")]
    DanglingNode { fiber: usize, node: usize, node_count: usize },
    #[error("fiber {0} is a self-loop")]
    SelfLoop(usize),
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(usize),
    #[error("nonuniform slice_count: link {link} has {found}, expected {expected}")]
    NonuniformSlices { link: usize, found: usize, expected: usize },
    #[error("route breaks adjacency at position {position}")]
    BrokenRoute { position: usize },
    #[error("link {0} repeats within one route")]
    RepeatedLink(usize),
    #[error("unknown link id {0}")]
    UnknownLink(usize),
    #[error("invalid beta path {path}: {reason}")]
    InvalidPath { path: usize, reason: String },
    #[error("beta paths leave fiber {0} uncovered")]
    UncoveredFiber(usize),
}

/// On-disk topology description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub name: String,
    pub slice_count: usize,
    pub nodes: usize,
    pub fibers: Vec<[usize; 2]>,
}

/// Validated network graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct Topology {
    name: String,
    node_count: usize,
    slice_count: usize,
    fibers: Vec<[usize; 2]>,
    links: Vec<Link>,
    adjacency: Vec<Vec<LinkId>>,
}

impl Topology {
    pub fn from_fibers(
        name: impl Into<String>,
        node_count: usize,
        slice_count: usize,
        fibers: &[[usize; 2]],
    ) -> Result<Self, TopologyError> {
        let links = fibers
            .iter()
            .enumerate()
            .flat_map(|(k, &[a, b])| {
                [
                    Link { id: LinkId(2 * k), src: a, dst: b, slice_count },
                    Link { id: LinkId(2 * k + 1), src: b, dst: a, slice_count },
                ]
            })
            .collect();
        Self::from_parts(name.into(), node_count, fibers.to_vec(), links)
    }

    fn from_parts(
        name: String,
        node_count: usize,
        fibers: Vec<[usize; 2]>,
        links: Vec<Link>,
    ) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::NoNodes);
        }
        if fibers.is_empty() {
            return Err(TopologyError::NoFibers);
        }
        let slice_count = links[0].slice_count;
        if slice_count == 0 {
            return Err(TopologyError::NoSlices);
        }
        for link in &links {
            if link.slice_count != slice_count {
                return Err(TopologyError::NonuniformSlices {
                    link: link.id.index(),
                    found: link.slice_count,
                    expected: slice_count,
                });
            }
        }
        for (k, &[a, b]) in fibers.iter().enumerate() {
            for node in [a, b] {
                if node >= node_count {
                    return Err(TopologyError::DanglingNode { fiber: k, node, node_count });
                }
            }
            if a == b {
                return Err(TopologyError::SelfLoop(k));
            }
        }

        let mut adjacency = vec![Vec::new(); node_count];
        for link in &links {
            adjacency[link.src].push(link.id);
        }

        let topology = Topology { name, node_count, slice_count, fibers, links, adjacency };
        if let Some(node) = topology.first_unreachable() {
            return Err(TopologyError::Disconnected(node));
        }
        Ok(topology)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &id in &self.adjacency[u] {
                let v = self.links[id.index()].dst;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn from_file_description(file: &TopologyFile) -> Result<Self, TopologyError> {
        Self::from_fibers(file.name.clone(), file.nodes, file.slice_count, &file.fibers)
    }

    pub fn parse(json: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile = serde_json::from_str(json)?;
        Self::from_file_description(&file)
    }

    pub fn to_file_description(&self) -> TopologyFile {
        TopologyFile {
            name: self.name.clone(),
            slice_count: self.slice_count,
            nodes: self.node_count,
            fibers: self.fibers.clone(),
        }
    }

    /// Same topology with a different spectrum grid size.
    pub fn with_slice_count(&self, slice_count: usize) -> Result<Self, TopologyError> {
        Self::from_fibers(self.name.clone(), self.node_count, slice_count, &self.fibers)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn slice_count(&self) -> usize {
        self.slice_count
    }

    pub fn fibers(&self) -> &[[usize; 2]] {
        &self.fibers
    }

    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    /// Outgoing links of `node`, in increasing id order.
    pub fn outgoing(&self, node: usize) -> &[LinkId] {
        &self.adjacency[node]
    }

    /// Total spectrum slices across every directed link.
    pub fn total_slices(&self) -> usize {
        self.slice_count * self.links.len()
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.fibers.len() as f64 / self.node_count as f64
    }

    /// SHA-256 over the canonical JSON form, used to tag run metadata.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.to_file_description()).expect("serializable");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| TopologyError::Io { path: path.display().to_string(), source })?;
    Topology::parse(&text)
}
