//! Spectrum fragmentation analysis for elastic optical networks.
//!
//! The crate measures how fragmented the spectrum of a flex-grid network is
//! with a two-component vectored metric (contiguity inside links, continuity
//! along a trail cover of the network) and drives a dynamic-traffic
//! simulator to observe the metric over time and across load.
//!
//! * [`topology`]: graph model, shortest routes, trail cover
//! * [`spectrum`]: per-link slice bitmaps and first-fit search
//! * [`metrics`]: the fragmentation quantities
//! * [`traffic`]: Poisson demand generation and the event queue
//! * [`engine`]: the simulator and experiment drivers
//! * [`cli`]: configuration, output files and command entry points

pub mod cli;
pub mod engine;
pub mod metrics;
pub mod spectrum;
pub mod topology;
pub mod traffic;
