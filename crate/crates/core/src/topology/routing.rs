use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{LinkId, Route, Topology};

/// Unit-cost Dijkstra from `src` to `dst`.
///
/// Ties between equal-cost predecessors go to the lowest node index, and
/// between parallel links to the lowest link id, so the result never depends
/// on heap ordering.
pub fn shortest_path(topology: &Topology, src: usize, dst: usize) -> Route {
    assert!(src != dst, "shortest_path requires distinct endpoints");
    let tree = predecessor_tree(topology, src);
    trace_route(&tree, src, dst)
}

/// Shortest-path predecessors from one source: `(dist, via)` per node.
fn predecessor_tree(topology: &Topology, src: usize) -> Vec<(usize, Option<(usize, LinkId)>)> {
    let n = topology.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut via: Vec<Option<(usize, LinkId)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0;
    heap.push(Reverse((0usize, src)));

    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &id in topology.outgoing(u) {
            let v = topology.link(id).dst;
            let candidate = d + 1;
            let better = match (candidate.cmp(&dist[v]), via[v]) {
                (std::cmp::Ordering::Less, _) => true,
                (std::cmp::Ordering::Equal, Some((p, pl))) => (u, id) < (p, pl),
                _ => false,
            };
            if better && !done[v] {
                dist[v] = candidate;
                via[v] = Some((u, id));
                heap.push(Reverse((candidate, v)));
            }
        }
    }
    dist.into_iter().zip(via).collect()
}

fn trace_route(tree: &[(usize, Option<(usize, LinkId)>)], src: usize, dst: usize) -> Route {
    let mut links = Vec::with_capacity(tree[dst].0);
    let mut node = dst;
    while node != src {
        let (prev, link) = tree[node].1.expect("topology is connected");
        links.push(link);
        node = prev;
    }
    links.reverse();
    Route::from_links_unchecked(links)
}

/// All-pairs shortest routes, computed once per topology.
#[derive(Debug, Clone)]
pub struct RouteTable {
    node_count: usize,
    routes: Vec<Route>,
}

impl RouteTable {
    pub fn new(topology: &Topology) -> Self {
        let n = topology.node_count();
        let mut routes = Vec::with_capacity(n * n);
        for src in 0..n {
            let tree = predecessor_tree(topology, src);
            for dst in 0..n {
                if src == dst {
                    routes.push(Route::default());
                } else {
                    routes.push(trace_route(&tree, src, dst));
                }
            }
        }
        RouteTable { node_count: n, routes }
    }

    pub fn route(&self, src: usize, dst: usize) -> &Route {
        &self.routes[src * self.node_count + dst]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Mean hop count over ordered node pairs.
    pub fn mean_hops(&self) -> f64 {
        let n = self.node_count;
        let total: usize = self.routes.iter().map(Route::hops).sum();
        total as f64 / (n * (n - 1)) as f64
    }
}
