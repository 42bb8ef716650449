//! Demand generation and the simulation event queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Generator family used for every stream; recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64 + set_stream";

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("{0} must be strictly positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("load {load} does not equal lambda {lambda} x holding {holding}")]
    InconsistentLoad { lambda: f64, holding: f64, load: f64 },
    #[error("max_demand must be at least 1")]
    ZeroDemand,
    #[error("max_demand {max_demand} exceeds slice count {slice_count}")]
    DemandTooWide { max_demand: usize, slice_count: usize },
    #[error("need at least two nodes to generate traffic")]
    TooFewNodes,
}

/// Traffic offered at every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    /// Requests per unit time originating at each node.
    pub arrival_rate_per_node: f64,
    pub mean_holding: f64,
    pub max_demand: usize,
    pub seed: u64,
}

fn positive(name: &'static str, v: f64) -> Result<f64, TrafficError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(TrafficError::NonPositive(name, v))
    }
}

impl DemandProfile {
    pub fn new(
        arrival_rate_per_node: f64,
        mean_holding: f64,
        max_demand: usize,
        seed: u64,
    ) -> Result<Self, TrafficError> {
        positive("arrival rate", arrival_rate_per_node)?;
        positive("mean holding time", mean_holding)?;
        if max_demand == 0 {
            return Err(TrafficError::ZeroDemand);
        }
        Ok(DemandProfile { arrival_rate_per_node, mean_holding, max_demand, seed })
    }

    /// Resolves a profile from any two of arrival rate, mean holding time and
    /// per-node load in Erlangs. With only a load, the holding time defaults
    /// to 1; with only one of the rates, the load defaults to the rate.
    pub fn resolve(
        lambda: Option<f64>,
        holding: Option<f64>,
        load: Option<f64>,
        max_demand: usize,
        seed: u64,
    ) -> Result<Self, TrafficError> {
        let (lambda, holding) = match (lambda, holding, load) {
            (Some(l), Some(h), Some(e)) => {
                if ((l * h) - e).abs() > 1e-9 * e.abs().max(1.0) {
                    return Err(TrafficError::InconsistentLoad { lambda: l, holding: h, load: e });
                }
                (l, h)
            }
            (Some(l), Some(h), None) => (l, h),
            (Some(l), None, Some(e)) => (l, e / positive("arrival rate", l)?),
            (None, Some(h), Some(e)) => (e / positive("mean holding time", h)?, h),
            (None, None, Some(e)) => (e, 1.0),
            (Some(l), None, None) => (l, 1.0),
            (None, Some(h), None) => (1.0, h),
            (None, None, None) => (1.0, 1.0),
        };
        Self::new(lambda, holding, max_demand, seed)
    }

    /// Offered load per node in Erlangs.
    pub fn load(&self) -> f64 {
        self.arrival_rate_per_node * self.mean_holding
    }

    pub fn check_grid(&self, slice_count: usize) -> Result<(), TrafficError> {
        if self.max_demand > slice_count {
            return Err(TrafficError::DemandTooWide { max_demand: self.max_demand, slice_count });
        }
        Ok(())
    }
}

/// A connection request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub width: usize,
    pub arrival_time: f64,
    pub holding_time: f64,
}

impl Demand {
    pub fn departure_time(&self) -> f64 {
        self.arrival_time + self.holding_time
    }
}

/// Independent random stream for `(seed, stream)`. ChaCha's 64-bit stream
/// selector keeps replications disjoint without reseeding tricks.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Merged Poisson arrival process over all nodes.
///
/// Inter-arrival times are exponential with rate `N * lambda`; the source is
/// uniform over nodes and the destination uniform over the other `N - 1`, so
/// each node sees its own Poisson stream of rate `lambda`. Widths are uniform
/// on `1..=max_demand`. Draw order per demand is fixed: gap, source,
/// destination, width, holding time.
#[derive(Debug, Clone)]
pub struct DemandGenerator {
    rng: ChaCha8Rng,
    gap: Exp<f64>,
    holding: Exp<f64>,
    node_count: usize,
    max_demand: usize,
    clock: f64,
    next_id: u64,
}

impl DemandGenerator {
    pub fn new(profile: &DemandProfile, node_count: usize, stream: u64) -> Result<Self, TrafficError> {
        if node_count < 2 {
            return Err(TrafficError::TooFewNodes);
        }
        let total_rate = profile.arrival_rate_per_node * node_count as f64;
        Ok(DemandGenerator {
            rng: stream_rng(profile.seed, stream),
            gap: Exp::new(total_rate).map_err(|_| TrafficError::NonPositive("arrival rate", total_rate))?,
            holding: Exp::new(1.0 / profile.mean_holding)
                .map_err(|_| TrafficError::NonPositive("mean holding time", profile.mean_holding))?,
            node_count,
            max_demand: profile.max_demand,
            clock: 0.0,
            next_id: 0,
        })
    }

    pub fn next_demand(&mut self) -> Demand {
        self.clock += self.gap.sample(&mut self.rng);
        let src = self.rng.random_range(0..self.node_count);
        let mut dst = self.rng.random_range(0..self.node_count - 1);
        if dst >= src {
            dst += 1;
        }
        let width = self.rng.random_range(1..=self.max_demand);
        let holding_time = self.holding.sample(&mut self.rng);
        let id = self.next_id;
        self.next_id += 1;
        Demand { id, src, dst, width, arrival_time: self.clock, holding_time }
    }
}

impl Iterator for DemandGenerator {
    type Item = Demand;

    fn next(&mut self) -> Option<Demand> {
        Some(self.next_demand())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Arrival(Demand),
    Departure(u64),
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::Departure(_) => 0,
            EventKind::Arrival(_) => 1,
        }
    }

    fn id(&self) -> u64 {
        match self {
            EventKind::Departure(id) => *id,
            EventKind::Arrival(d) => d.id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (f64, u8, u64) {
        (self.time, self.kind.rank(), self.kind.id())
    }
}

impl Eq for Event {}

impl Ord for Event {
    // reversed so that BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ra, ia) = self.key();
        let (tb, rb, ib) = other.key();
        tb.total_cmp(&ta).then(rb.cmp(&ra)).then(ib.cmp(&ia))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-ordered event queue. Ties go to departures, then to lower ids.
#[derive(Debug, Default, Clone)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    clock: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the last popped event.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn push(&mut self, event: Event) {
        assert!(event.time >= self.clock, "event at {} scheduled before current clock {}", event.time, self.clock);
        self.heap.push(event);
    }

    /// Earliest event, or `None` once the queue is exhausted.
    pub fn pop(&mut self) -> Option<Event> {
        let event = self.heap.pop()?;
        self.clock = event.time;
        Some(event)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Writes demands as `id,src,dst,width,arrival_time,holding_time`.
pub fn write_trace<W: Write>(writer: W, demands: &[Demand]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for d in demands {
        w.serialize(d)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<Demand>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}
