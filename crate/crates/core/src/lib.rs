//! Simulation laboratory and algorithm library for online multi-level
//! aggregation with linear delays under Poisson arrivals.
//!
//! Requests arrive on the vertices of an edge-weighted rooted tree; serving
//! a set of pending requests buys the minimal rooted subtree spanning their
//! locations, and waiting costs one unit per request per unit time. This
//! crate provides:
//!
//! - the tree/instance/schedule data model with exact cost accounting
//!   ([`tree`], [`instance`], [`schedule`]);
//! - seeded Poisson request generation with statistical self-tests
//!   ([`poisson`]);
//! - online schedulers: serve-on-arrival, fixed-period, greedy
//!   ([`baselines`]), the saturation-partition periodic scheduler
//!   ([`plan`]) and the combined scheduler for arbitrary instances
//!   ([`gen`]);
//! - an exhaustive offline optimum with an independent single-edge DP
//!   cross-check ([`opt`]) and closed-form bound evaluators ([`bounds`]);
//! - instance generators, a Monte-Carlo ratio-of-expectations harness and
//!   report emission ([`generate`], [`experiment`], [`report`]).

// `!(x > 0.0)` rejects NaN along with non-positive values; `x <= 0.0` would
// let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bounds;
pub mod error;
pub mod experiment;
pub mod gen;
pub mod generate;
pub mod instance;
pub mod opt;
pub mod plan;
pub mod poisson;
pub mod report;
pub mod schedule;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use instance::{Instance, InstanceClass};
pub use schedule::{CostBreakdown, Request, RequestSequence, Schedule, Service};
pub use tree::Tree;
