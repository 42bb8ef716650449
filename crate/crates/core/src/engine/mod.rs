//! Discrete-event simulation of dynamic traffic over a fixed topology.
//!
//! Every source/destination pair uses one precomputed shortest route and
//! first-fit slice assignment. A request that does not fit is dropped; there
//! is no alternate-route retry.

mod experiments;
pub mod stats;

use std::collections::{HashMap, VecDeque};

pub use experiments::{
    run_steady_sweep, run_transient, run_utilization_scan, ExperimentError, GridPoint, SampleClock, ScanConfig,
    ScanResult, SweepConfig, SweepPointResult, SweepResult, TransientConfig, TransientPoint, TransientResult,
    SCAN_FULL_UTILIZATION,
};

use crate::metrics::{compute_bounds, snapshot_report, MetricBounds, Sample};
use crate::spectrum::{SliceRange, SpectrumState};
use crate::topology::{BetaPathSet, Route, RouteTable, Topology};
use crate::traffic::{Demand, Event, EventKind, EventQueue};

/// Everything about a network that stays fixed during a run.
#[derive(Debug, Clone)]
pub struct Network {
    topology: Topology,
    routes: RouteTable,
    paths: BetaPathSet,
    bounds: MetricBounds,
}

impl Network {
    pub fn new(topology: Topology, paths: BetaPathSet) -> Self {
        let routes = RouteTable::new(&topology);
        let bounds = compute_bounds(&topology, &paths);
        Network { topology, routes, paths, bounds }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn routes(&self) -> &RouteTable {
        &self.routes
    }

    pub fn paths(&self) -> &BetaPathSet {
        &self.paths
    }

    pub fn bounds(&self) -> &MetricBounds {
        &self.bounds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub id: u64,
    pub route: Route,
    pub range: SliceRange,
    pub departure_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Admission {
    Admitted(Connection),
    Blocked,
}

impl Admission {
    pub fn is_blocked(&self) -> bool {
        matches!(self, Admission::Blocked)
    }
}

/// How the blocked-to-total ratio attached to samples is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockingMode {
    /// Since the start of the run.
    #[default]
    Cumulative,
    /// Over the most recent `n` arrivals.
    Windowed(usize),
}

/// Hooks called from [`Simulation::run`].
pub trait Observer {
    /// Before the event at `time` is applied.
    fn before_event(&mut self, _sim: &Simulation<'_>, _time: f64) {}
    /// After an arrival has been admitted or blocked.
    fn after_arrival(&mut self, _sim: &Simulation<'_>, _demand: &Demand, _outcome: &Admission) {}
}

impl Observer for () {}

/// One run's mutable state.
#[derive(Debug, Clone)]
pub struct Simulation<'n> {
    network: &'n Network,
    state: SpectrumState,
    active: HashMap<u64, Connection>,
    queue: EventQueue,
    clock: f64,
    total: u64,
    blocked: u64,
    blocking: BlockingMode,
    recent: VecDeque<bool>,
    recent_blocked: usize,
}

impl<'n> Simulation<'n> {
    pub fn new(network: &'n Network) -> Self {
        Self::with_blocking(network, BlockingMode::Cumulative)
    }

    pub fn with_blocking(network: &'n Network, blocking: BlockingMode) -> Self {
        Simulation {
            network,
            state: SpectrumState::for_topology(&network.topology),
            active: HashMap::new(),
            queue: EventQueue::new(),
            clock: 0.0,
            total: 0,
            blocked: 0,
            blocking,
            recent: VecDeque::new(),
            recent_blocked: 0,
        }
    }

    pub fn network(&self) -> &'n Network {
        self.network
    }

    pub fn state(&self) -> &SpectrumState {
        &self.state
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn total_requests(&self) -> u64 {
        self.total
    }

    pub fn blocked_requests(&self) -> u64 {
        self.blocked
    }

    pub fn active_connections(&self) -> impl Iterator<Item = &Connection> {
        self.active.values()
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Blocked over total requests under the configured counting mode; 0
    /// before any request.
    pub fn br_tr(&self) -> f64 {
        match self.blocking {
            BlockingMode::Cumulative if self.total > 0 => self.blocked as f64 / self.total as f64,
            BlockingMode::Windowed(_) if !self.recent.is_empty() => {
                self.recent_blocked as f64 / self.recent.len() as f64
            }
            _ => 0.0,
        }
    }

    pub fn sample(&self) -> Sample {
        self.sample_at(self.clock)
    }

    pub fn sample_at(&self, t: f64) -> Sample {
        Sample {
            t,
            arrivals: self.total,
            br_tr: self.br_tr(),
            report: snapshot_report(&self.state, &self.network.paths, &self.network.bounds),
        }
    }

    /// Routes the demand on its shortest path and assigns the first fitting
    /// slice range. On success the departure is queued.
    pub fn handle_arrival(&mut self, demand: &Demand) -> Admission {
        self.clock = self.clock.max(demand.arrival_time);
        self.total += 1;
        let route = self.network.routes.route(demand.src, demand.dst);
        let outcome = match self.state.find_first_fit(route, demand.width) {
            Some(range) => {
                self.state.allocate(route, range);
                let connection =
                    Connection { id: demand.id, route: route.clone(), range, departure_time: demand.departure_time() };
                let previous = self.active.insert(demand.id, connection.clone());
                assert!(previous.is_none(), "duplicate connection id {}", demand.id);
                self.queue.push(Event { time: connection.departure_time, kind: EventKind::Departure(demand.id) });
                Admission::Admitted(connection)
            }
            None => {
                self.blocked += 1;
                Admission::Blocked
            }
        };
        if let BlockingMode::Windowed(n) = self.blocking {
            let blocked = outcome.is_blocked();
            self.recent.push_back(blocked);
            self.recent_blocked += usize::from(blocked);
            while self.recent.len() > n.max(1) {
                if self.recent.pop_front() == Some(true) {
                    self.recent_blocked -= 1;
                }
            }
        }
        outcome
    }

    /// Releases an active connection. Panics on an unknown id.
    pub fn handle_departure(&mut self, id: u64) {
        let connection = self.active.remove(&id).unwrap_or_else(|| panic!("unknown connection id {id}"));
        self.state.release(&connection.route, connection.range);
    }

    /// Feeds demands in arrival order until `arrivals` of them have been
    /// processed (or the source runs dry and the queue empties). Departures
    /// still pending afterwards stay queued.
    pub fn run<I, O>(&mut self, demands: I, arrivals: u64, observer: &mut O) -> u64
    where
        I: IntoIterator<Item = Demand>,
        O: Observer + ?Sized,
    {
        let mut source = demands.into_iter();
        let mut processed = 0u64;
        if arrivals == 0 {
            return 0;
        }
        if let Some(d) = source.next() {
            self.queue.push(Event { time: d.arrival_time, kind: EventKind::Arrival(d) });
        }
        while let Some(event) = self.queue.pop() {
            observer.before_event(self, event.time);
            self.clock = event.time;
            match event.kind {
                EventKind::Departure(id) => self.handle_departure(id),
                EventKind::Arrival(demand) => {
                    let outcome = self.handle_arrival(&demand);
                    processed += 1;
                    observer.after_arrival(self, &demand, &outcome);
                    if processed == arrivals {
                        break;
                    }
                    if let Some(d) = source.next() {
                        self.queue.push(Event { time: d.arrival_time, kind: EventKind::Arrival(d) });
                    }
                }
            }
        }
        processed
    }

    /// Processes every pending departure.
    pub fn drain(&mut self) {
        while let Some(event) = self.queue.pop() {
            self.clock = event.time;
            match event.kind {
                EventKind::Departure(id) => self.handle_departure(id),
                EventKind::Arrival(_) => {}
            }
        }
    }
}
