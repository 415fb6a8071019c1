//! Periodic scheduler driven by an edge-saturation partition.
//!
//! Every vertex runs a saturation process against its parent edge at pace
//! λ(v)/2 · t². When an edge fills, the contributing set either joins the
//! set working above it or, if it reached an already-clustered vertex (or
//! the root), closes as a cluster whose period is the current clock. Raw
//! periods are then rounded down to power-of-two multiples of the first
//! period so that whenever a cluster is served, every cluster on its
//! root-path is due simultaneously.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::baselines::BlindRun;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{RequestSequence, Schedule, Service};

/// One cluster of the saturation partition. `members` are the vertices whose
/// parent edges the cluster owns; `root` is the vertex the saturation
/// reached (the tree root or a vertex of an earlier cluster), shared with
/// that cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cluster {
    pub root: usize,
    pub members: Vec<usize>,
    /// Raw period p: the clock time at which the cluster closed.
    pub period: f64,
    /// Total weight of the member edges.
    pub weight: f64,
    /// Total arrival rate of the members.
    pub rate: f64,
    /// Rounding exponent e with p̂ = 2^e · p₁; set by `round_periods`.
    pub exponent: Option<u32>,
    /// Rounded period p̂; set by `round_periods`.
    pub rounded_period: Option<f64>,
}

impl Cluster {
    /// Weight share a member saturated by the cluster's closing time:
    /// λ(v)/2 · p².
    pub fn saturated_share(&self, instance: &Instance, v: usize) -> f64 {
        instance.rate(v) * 0.5 * self.period * self.period
    }
}

/// The full partition, clusters in creation order (periods non-decreasing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub clusters: Vec<Cluster>,
}

impl ClusterPlan {
    pub fn is_rounded(&self) -> bool {
        self.clusters.iter().all(|c| c.rounded_period.is_some())
    }

    /// Maps every non-root vertex to the cluster owning its parent edge.
    pub fn cluster_of_vertex(&self, n: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; n];
        for (ci, c) in self.clusters.iter().enumerate() {
            for &v in &c.members {
                map[v] = Some(ci);
            }
        }
        map
    }

    /// Structural invariants: member sets partition the non-root vertices
    /// into rooted subtrees anchored at earlier clusters, periods are
    /// monotone, saturated shares conserve cluster weights, and rounded
    /// periods bracket the raw ones as power-of-two multiples of p₁.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let tree = instance.tree();
        let n = tree.len();
        if self.clusters.is_empty() {
            return Err(Error::InvalidInput("empty cluster plan".into()));
        }
        let mut owner = vec![None::<usize>; n];
        for (ci, c) in self.clusters.iter().enumerate() {
            for &v in &c.members {
                if v == tree.root() {
                    return Err(Error::InvalidInput(
                        "the tree root cannot be a member".into(),
                    ));
                }
                if owner[v].replace(ci).is_some() {
                    return Err(Error::InvalidInput(format!(
                        "vertex {v} owned by two clusters"
                    )));
                }
            }
        }
        if let Some(v) = (0..n).find(|&v| v != tree.root() && owner[v].is_none()) {
            return Err(Error::InvalidInput(format!(
                "vertex {v} not covered by any cluster"
            )));
        }
        for (ci, c) in self.clusters.iter().enumerate() {
            // Rooted subtree: every member's parent is a member or the root.
            for &v in &c.members {
                let p = tree.parent(v).expect("member is not the tree root");
                let inside = owner[p] == Some(ci) || p == c.root;
                if !inside {
                    return Err(Error::InvalidInput(format!(
                        "cluster {ci} is not a rooted subtree at vertex {v}"
                    )));
                }
            }
            // The anchor is the tree root or a member of an earlier cluster.
            let anchored = c.root == tree.root() || owner[c.root].map(|o| o < ci).unwrap_or(false);
            if !anchored {
                return Err(Error::InvalidInput(format!(
                    "cluster {ci} is rooted at {} which is not clustered earlier",
                    c.root
                )));
            }
            // Saturation conservation: Σ λ(v)/2·p² = w(cluster).
            let shares: f64 = c
                .members
                .iter()
                .map(|&v| c.saturated_share(instance, v))
                .sum();
            if (shares - c.weight).abs() > 1e-9 * c.weight.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "cluster {ci}: saturated shares {shares} != weight {}",
                    c.weight
                )));
            }
            let weight: f64 = c.members.iter().map(|&v| tree.edge_weight(v)).sum();
            if (weight - c.weight).abs() > 1e-9 * c.weight.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "cluster {ci}: stored weight mismatch"
                )));
            }
        }
        for pair in self.clusters.windows(2) {
            if pair[0].period > pair[1].period * (1.0 + 1e-12) {
                return Err(Error::InvalidInput("periods are not non-decreasing".into()));
            }
        }
        if self.is_rounded() {
            let p1 = self.clusters[0].period;
            for (ci, c) in self.clusters.iter().enumerate() {
                let e = c.exponent.unwrap();
                let hat = c.rounded_period.unwrap();
                if hat != (1u64 << e) as f64 * p1 {
                    return Err(Error::InvalidInput(format!(
                        "cluster {ci}: rounded period is not 2^e · p₁"
                    )));
                }
                let ok = hat <= c.period * (1.0 + 1e-9) && c.period < 2.0 * hat * (1.0 + 1e-9);
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "cluster {ci}: p̂ = {hat} does not bracket p = {}",
                        c.period
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A saturation front: a set of cooperating vertices filling the parent edge
/// of its top vertex.
struct Front {
    vertices: Vec<usize>,
    top: usize,
    rate: f64,
    /// Amount already saturated on the target edge...
    filled: f64,
    /// ...as of this clock time.
    clock: f64,
    version: u64,
    active: bool,
}

impl Front {
    /// Clock time at which the target edge fills, given its weight.
    fn completion(&self, target_weight: f64) -> Option<f64> {
        let residual = target_weight - self.filled;
        if residual <= 0.0 {
            return Some(self.clock);
        }
        if self.rate <= 0.0 {
            return None;
        }
        Some((self.clock * self.clock + 2.0 * residual / self.rate).sqrt())
    }

    /// Advances the lazily-tracked fill amount to `t`.
    fn advance(&mut self, t: f64) {
        self.filled += self.rate * 0.5 * (t * t - self.clock * self.clock);
        self.clock = t;
    }
}

#[derive(PartialEq)]
struct SaturationEvent {
    time: f64,
    /// Hop depth of the edge's upper endpoint; deeper edges are processed
    /// first at equal times so joins happen before cluster creation.
    parent_depth: usize,
    child: usize,
    front: usize,
    version: u64,
}

impl Eq for SaturationEvent {}

impl Ord for SaturationEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; invert time so the earliest pops first.
        other
            .time
            .total_cmp(&self.time)
            .then(self.parent_depth.cmp(&other.parent_depth))
            .then(other.child.cmp(&self.child))
    }
}

impl PartialOrd for SaturationEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the event-driven saturation on `instance` and returns the resulting
/// clusters with raw periods.
///
/// Rejects instances with a zero-rate leafward subtree (its edges would
/// never saturate). Heaviness is the analytical precondition for the cost
/// guarantee, not an algorithmic requirement; the partition itself is
/// defined for any instance that passes the rate check.
pub fn saturation_partition(instance: &Instance) -> Result<ClusterPlan> {
    let tree = instance.tree();
    let n = tree.len();
    for v in 0..n {
        if v != tree.root() && instance.subtree_rate(v) <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "subtree rooted at {v} has zero total rate; its edge would never saturate"
            )));
        }
    }

    let mut fronts: Vec<Front> = (0..n)
        .map(|v| Front {
            vertices: vec![v],
            top: v,
            rate: instance.rate(v),
            filled: 0.0,
            clock: 0.0,
            version: 0,
            active: v != tree.root(),
        })
        .collect();
    let mut front_of = (0..n).collect::<Vec<usize>>();
    let mut clustered = vec![false; n];
    let mut heap = BinaryHeap::new();

    let push_event = |heap: &mut BinaryHeap<SaturationEvent>,
                      fronts: &[Front],
                      fi: usize,
                      tree: &crate::tree::Tree| {
        let f = &fronts[fi];
        if !f.active {
            return;
        }
        if let Some(t) = f.completion(tree.edge_weight(f.top)) {
            let parent = tree
                .parent(f.top)
                .expect("active front tops a non-root vertex");
            heap.push(SaturationEvent {
                time: t,
                parent_depth: tree.hop_depth(parent),
                child: f.top,
                front: fi,
                version: f.version,
            });
        }
    };

    for v in 0..n {
        push_event(&mut heap, &fronts, v, tree);
    }

    let mut clusters: Vec<Cluster> = Vec::new();
    let mut remaining = n - 1;
    while remaining > 0 {
        let event = heap
            .pop()
            .ok_or_else(|| Error::InvalidInput("saturation stalled: no event available".into()))?;
        if !fronts[event.front].active || fronts[event.front].version != event.version {
            continue;
        }
        let top = fronts[event.front].top;
        let parent = tree.parent(top).expect("front tops a non-root vertex");
        if parent == tree.root() || clustered[parent] {
            // The front reached an anchored vertex: close it as a cluster.
            let f = &mut fronts[event.front];
            f.active = false;
            let mut members = std::mem::take(&mut f.vertices);
            members.sort_unstable();
            let weight: f64 = members.iter().map(|&v| tree.edge_weight(v)).sum();
            let rate: f64 = members.iter().map(|&v| instance.rate(v)).sum();
            for &v in &members {
                clustered[v] = true;
            }
            remaining -= members.len();
            clusters.push(Cluster {
                root: parent,
                members,
                period: event.time,
                weight,
                rate,
                exponent: None,
                rounded_period: None,
            });
        } else {
            // Merge into the front working above.
            let target = front_of[parent];
            debug_assert_ne!(target, event.front);
            fronts[target].advance(event.time);
            fronts[event.front].active = false;
            let moved = std::mem::take(&mut fronts[event.front].vertices);
            let extra_rate = fronts[event.front].rate;
            for &v in &moved {
                front_of[v] = target;
            }
            fronts[target].vertices.extend(moved);
            fronts[target].rate += extra_rate;
            fronts[target].version += 1;
            push_event(&mut heap, &fronts, target, tree);
        }
    }
    let plan = ClusterPlan { clusters };
    plan.validate(instance)?;
    Ok(plan)
}

/// Rounds each raw period down to the nearest power-of-two multiple of the
/// first period: p̂ = 2^e · p₁ with 2^e · p₁ ≤ p < 2^{e+1} · p₁.
pub fn round_periods(mut plan: ClusterPlan) -> ClusterPlan {
    let p1 = plan.clusters[0].period;
    for c in &mut plan.clusters {
        let ratio = c.period / p1;
        let mut e = ratio.log2().floor().max(0.0) as u32;
        // Snap floating-point noise around exact powers of two.
        while (1u64 << (e + 1)) as f64 <= ratio * (1.0 + 1e-12) {
            e += 1;
        }
        while e > 0 && (1u64 << e) as f64 > ratio * (1.0 + 1e-12) {
            e -= 1;
        }
        c.exponent = Some(e);
        c.rounded_period = Some(if e == 0 { p1 } else { (1u64 << e) as f64 * p1 });
    }
    plan
}

/// Tick schedule of a rounded plan over `[0, horizon]`: cluster i is due at
/// j·p̂ᵢ for j = 1.. and at the horizon when it does not divide it. Ticks
/// are indexed by integer multiples of p̂₁ so coinciding services merge
/// exactly.
fn plan_ticks(plan: &ClusterPlan, horizon: f64) -> Vec<(f64, Vec<usize>)> {
    let p1 = plan.clusters[0]
        .rounded_period
        .expect("plan must be rounded");
    let mut by_key: std::collections::BTreeMap<u64, Vec<usize>> = std::collections::BTreeMap::new();
    let mut terminal: Vec<usize> = Vec::new();
    let horizon_key = {
        let ratio = horizon / p1;
        let rounded = ratio.round();
        ((ratio - rounded).abs() <= 1e-9 * ratio.max(1.0)).then_some(rounded as u64)
    };
    for (ci, c) in plan.clusters.iter().enumerate() {
        let step = 1u64 << c.exponent.expect("plan must be rounded");
        let p_hat = c.rounded_period.unwrap();
        let count = (horizon / p_hat + 1e-9).floor() as u64;
        for j in 1..=count {
            by_key.entry(j * step).or_default().push(ci);
        }
        let aligned = count >= 1 && (horizon - count as f64 * p_hat) <= 1e-9 * p_hat;
        if !aligned {
            terminal.push(ci);
        }
    }
    let mut ticks: Vec<(f64, Vec<usize>)> = Vec::with_capacity(by_key.len() + 1);
    for (key, due) in by_key {
        ticks.push((key as f64 * p1, due));
    }
    if !terminal.is_empty() {
        match horizon_key {
            Some(key)
                if ticks
                    .last()
                    .is_some_and(|(t, _)| (key as f64 * p1 - *t).abs() == 0.0) =>
            {
                ticks.last_mut().unwrap().1.extend(terminal);
            }
            _ => ticks.push((horizon, terminal)),
        }
    }
    ticks
}

/// Serves each cluster at its rounded period's multiples (and the horizon).
/// All clusters due at one time point merge into a single service. The
/// blind account charges, per tick, the weight of the union of the due
/// clusters' subtrees; power-of-two alignment makes that union upward
/// closed, so it equals the plain sum of cluster weights at every regular
/// tick.
pub fn plan_schedule(
    sequence: &RequestSequence,
    instance: &Instance,
    plan: &ClusterPlan,
) -> Result<BlindRun> {
    if !plan.is_rounded() {
        return Err(Error::InvalidInput(
            "plan periods must be rounded first".into(),
        ));
    }
    let tree = instance.tree();
    let cluster_of = plan.cluster_of_vertex(tree.len());

    // Bucket request indices per cluster, in time order.
    let mut per_cluster: Vec<std::collections::VecDeque<usize>> =
        vec![Default::default(); plan.clusters.len()];
    for i in 0..sequence.len() {
        let loc = sequence.get(i).location;
        let ci = cluster_of[loc].ok_or_else(|| {
            Error::InvalidInput(format!("request location {loc} not covered by the plan"))
        })?;
        per_cluster[ci].push_back(i);
    }

    let mut services = Vec::new();
    let mut blind_weight = 0.0;
    // Due sets repeat tick after tick; cache their union weights.
    let mut weight_cache: std::collections::HashMap<Vec<usize>, f64> = Default::default();
    for (time, due) in plan_ticks(plan, sequence.horizon()) {
        let mut batch = Vec::new();
        for &ci in &due {
            while per_cluster[ci]
                .front()
                .is_some_and(|&i| sequence.get(i).time <= time)
            {
                batch.push(per_cluster[ci].pop_front().unwrap());
            }
        }
        batch.sort_unstable();
        blind_weight += match weight_cache.get(&due) {
            Some(&w) => w,
            None => {
                let w = tree.minimal_subtree_weight(
                    due.iter()
                        .flat_map(|&ci| plan.clusters[ci].members.iter().copied()),
                )?;
                weight_cache.insert(due.clone(), w);
                w
            }
        };
        services.push(Service {
            time,
            requests: batch,
        });
    }
    // A horizon judged tick-aligned only up to tolerance can strand requests
    // arriving inside that sliver; a final service at the horizon keeps the
    // schedule valid.
    let stragglers: Vec<usize> = {
        let mut left: Vec<usize> = per_cluster.iter_mut().flat_map(|q| q.drain(..)).collect();
        left.sort_unstable();
        left
    };
    if !stragglers.is_empty() {
        blind_weight +=
            tree.minimal_subtree_weight(stragglers.iter().map(|&i| sequence.get(i).location))?;
        services.push(Service {
            time: sequence.horizon(),
            requests: stragglers,
        });
    }
    Ok(BlindRun {
        schedule: Schedule::new(services),
        blind_weight,
    })
}
