//! Requests, services, schedules and cost accounting.
//!
//! A schedule is valid when every request is served exactly once and never
//! before its arrival. Cost splits into delay (service time minus arrival,
//! summed over requests) and weight (minimal rooted subtree per service).
//! Comparisons use exact `<=` on stored values: schedulers place services at
//! stored arrival times, so no epsilon is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::Tree;

/// A single request: arrival time and location (never the root).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub time: f64,
    pub location: usize,
}

/// Requests over a horizon `[0, τ]`, sorted by arrival time (stable in
/// generation order).
///
/// Serializes to JSON; construction goes through [`RequestSequence::new`]
/// so deserialization is deliberately not derived.
#[derive(Debug, Clone, Serialize)]
pub struct RequestSequence {
    horizon: f64,
    requests: Vec<Request>,
}

impl RequestSequence {
    pub fn new(horizon: f64, mut requests: Vec<Request>, tree: &Tree) -> Result<RequestSequence> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        for (i, r) in requests.iter().enumerate() {
            if r.location >= tree.len() {
                return Err(Error::InvalidInput(format!(
                    "request {i} at unknown vertex {}",
                    r.location
                )));
            }
            if r.location == tree.root() {
                return Err(Error::InvalidInput(format!(
                    "request {i} arrives at the tree root"
                )));
            }
            if !(r.time >= 0.0) || r.time > horizon {
                return Err(Error::InvalidInput(format!(
                    "request {i} arrives at {} outside [0, {horizon}]",
                    r.time
                )));
            }
        }
        requests.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(RequestSequence { horizon, requests })
    }

    /// An empty sequence over the given horizon.
    pub fn empty(horizon: f64) -> RequestSequence {
        RequestSequence {
            horizon,
            requests: Vec::new(),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn get(&self, i: usize) -> Request {
        self.requests[i]
    }

    /// Keeps only requests whose location satisfies the predicate.
    pub fn restrict_to_vertices<F: Fn(usize) -> bool>(&self, keep: F) -> RequestSequence {
        RequestSequence {
            horizon: self.horizon,
            requests: self
                .requests
                .iter()
                .copied()
                .filter(|r| keep(r.location))
                .collect(),
        }
    }

    /// Keeps only requests arriving in `[from, to]` and shifts times so the
    /// interval starts at 0; the new horizon is `to - from`.
    pub fn restrict_to_interval(&self, from: f64, to: f64) -> Result<RequestSequence> {
        if !(from >= 0.0) || to > self.horizon || !(to > from) {
            return Err(Error::InvalidInput(format!(
                "interval [{from}, {to}] not inside [0, {}]",
                self.horizon
            )));
        }
        Ok(RequestSequence {
            horizon: to - from,
            requests: self
                .requests
                .iter()
                .filter(|r| r.time >= from && r.time <= to)
                .map(|r| Request {
                    time: r.time - from,
                    location: r.location,
                })
                .collect(),
        })
    }

    /// Re-homes the sequence onto another tree via a location map. Used when
    /// moving requests between an instance and a derived instance.
    pub fn map_locations<F: Fn(usize) -> usize>(&self, map: F) -> RequestSequence {
        RequestSequence {
            horizon: self.horizon,
            requests: self
                .requests
                .iter()
                .map(|r| Request {
                    time: r.time,
                    location: map(r.location),
                })
                .collect(),
        }
    }
}

/// A service: a time point and the indices of the requests it serves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub time: f64,
    pub requests: Vec<usize>,
}

/// A list of services over a request sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub services: Vec<Service>,
}

/// Cost of a schedule, split into its two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub delay: f64,
    pub weight: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(delay: f64, weight: f64) -> CostBreakdown {
        CostBreakdown {
            delay,
            weight,
            total: delay + weight,
        }
    }

    pub fn zero() -> CostBreakdown {
        CostBreakdown::new(0.0, 0.0)
    }
}

impl Schedule {
    pub fn new(services: Vec<Service>) -> Schedule {
        Schedule { services }
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }

    /// Checks validity for `sequence`: each request served exactly once and
    /// no earlier than its arrival. Errors name the offending request or
    /// service.
    pub fn validate(&self, sequence: &RequestSequence) -> Result<()> {
        let mut served = vec![false; sequence.len()];
        for (si, s) in self.services.iter().enumerate() {
            for &ri in &s.requests {
                if ri >= sequence.len() {
                    return Err(Error::InvalidSchedule(format!(
                        "service {si} references unknown request {ri}"
                    )));
                }
                if served[ri] {
                    return Err(Error::InvalidSchedule(format!(
                        "request {ri} is served more than once (again by service {si})"
                    )));
                }
                if sequence.get(ri).time > s.time {
                    return Err(Error::InvalidSchedule(format!(
                        "service {si} at time {} precedes arrival of request {ri} at {}",
                        s.time,
                        sequence.get(ri).time
                    )));
                }
                served[ri] = true;
            }
        }
        if let Some(ri) = served.iter().position(|&s| !s) {
            return Err(Error::InvalidSchedule(format!(
                "request {ri} is never served"
            )));
        }
        Ok(())
    }

    /// Delay + weight cost over `tree`; validates first. A service with an
    /// empty request set costs weight 0.
    pub fn cost(&self, tree: &Tree, sequence: &RequestSequence) -> Result<CostBreakdown> {
        self.validate(sequence)?;
        let mut delay = 0.0;
        let mut weight = 0.0;
        for s in &self.services {
            for &ri in &s.requests {
                delay += s.time - sequence.get(ri).time;
            }
            weight += tree
                .minimal_subtree_weight(s.requests.iter().map(|&ri| sequence.get(ri).location))?;
        }
        Ok(CostBreakdown::new(delay, weight))
    }

    /// Per-service costs; sums to `cost`. Used by the additivity checks.
    pub fn per_service_costs(
        &self,
        tree: &Tree,
        sequence: &RequestSequence,
    ) -> Result<Vec<CostBreakdown>> {
        self.validate(sequence)?;
        self.services
            .iter()
            .map(|s| {
                let delay: f64 = s
                    .requests
                    .iter()
                    .map(|&ri| s.time - sequence.get(ri).time)
                    .sum();
                let weight = tree.minimal_subtree_weight(
                    s.requests.iter().map(|&ri| sequence.get(ri).location),
                )?;
                Ok(CostBreakdown::new(delay, weight))
            })
            .collect()
    }
}
