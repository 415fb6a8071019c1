//! Baseline schedulers: serve-on-arrival, fixed-period batching, and the
//! delay-equals-weight greedy trigger.

use crate::error::{Error, Result};
use crate::schedule::{RequestSequence, Schedule, Service};
use crate::tree::Tree;

/// The period that balances expected delay against service weight on a
/// single edge: √(2w/λ).
pub fn optimal_single_edge_period(w: f64, lambda: f64) -> f64 {
    (2.0 * w / lambda).sqrt()
}

/// Serves every request the instant it arrives. Rate-oblivious; the
/// resulting schedule has zero delay cost.
pub fn instant(sequence: &RequestSequence) -> Schedule {
    Schedule::new(
        (0..sequence.len())
            .map(|i| Service {
                time: sequence.get(i).time,
                requests: vec![i],
            })
            .collect(),
    )
}

/// A schedule together with its oblivious ("blind") weight: the weight the
/// scheduler committed to paying regardless of which requests actually
/// arrived. Actual cost never exceeds delay + blind weight.
#[derive(Debug, Clone)]
pub struct BlindRun {
    pub schedule: Schedule,
    pub blind_weight: f64,
}

impl BlindRun {
    /// delay + blind weight for this run.
    pub fn blind_cost(&self, tree: &Tree, sequence: &RequestSequence) -> Result<f64> {
        let cost = self.schedule.cost(tree, sequence)?;
        Ok(cost.delay + self.blind_weight)
    }
}

/// Relative slack used when deciding whether the horizon is a whole number
/// of periods.
const TICK_EPS: f64 = 1e-9;

/// Serves all pending requests at p, 2p, …, and additionally at the horizon
/// when it is not a whole number of periods. Every tick charges the full
/// tree weight to the blind account; actual weight is charged per served
/// locations.
pub fn fixed_period(sequence: &RequestSequence, tree: &Tree, period: f64) -> Result<BlindRun> {
    if !(period > 0.0) {
        return Err(Error::InvalidInput(format!(
            "period must be positive, got {period}"
        )));
    }
    let horizon = sequence.horizon();
    let ticks = (horizon / period + TICK_EPS).floor() as u64;
    let mut times: Vec<f64> = (1..=ticks).map(|j| j as f64 * period).collect();
    let aligned = ticks >= 1 && (horizon - ticks as f64 * period) <= TICK_EPS * period;
    if !aligned {
        times.push(horizon);
    }
    let full_weight = tree.total_weight();
    let mut services = Vec::with_capacity(times.len());
    let mut next = 0usize;
    for &t in &times {
        let mut batch = Vec::new();
        while next < sequence.len() && sequence.get(next).time <= t {
            batch.push(next);
            next += 1;
        }
        services.push(Service {
            time: t,
            requests: batch,
        });
    }
    let blind_weight = full_weight * times.len() as f64;
    Ok(BlindRun {
        schedule: Schedule::new(services),
        blind_weight,
    })
}

/// Event-driven greedy: waits until the accumulated delay of the pending set
/// equals the weight of the minimal subtree spanning it, then serves the
/// whole pending set. The trigger time is solved in closed form (pending
/// delay is piecewise linear with slope equal to the pending count).
pub fn greedy(sequence: &RequestSequence, tree: &Tree) -> Schedule {
    let mut services = Vec::new();
    let mut pending: Vec<usize> = Vec::new();
    let mut accumulated = 0.0; // delay of `pending` at `clock`
    let mut clock = 0.0;
    let mut next = 0usize;
    loop {
        if pending.is_empty() {
            if next >= sequence.len() {
                break;
            }
            clock = sequence.get(next).time;
            accumulated = 0.0;
            pending.push(next);
            next += 1;
            // Simultaneous arrivals enter together.
            while next < sequence.len() && sequence.get(next).time == clock {
                pending.push(next);
                next += 1;
            }
            continue;
        }
        let target = tree
            .minimal_subtree_weight(pending.iter().map(|&i| sequence.get(i).location))
            .expect("locations are valid");
        if accumulated >= target {
            services.push(Service {
                time: clock,
                requests: std::mem::take(&mut pending),
            });
            accumulated = 0.0;
            continue;
        }
        let trigger = clock + (target - accumulated) / pending.len() as f64;
        match next < sequence.len() && sequence.get(next).time <= trigger {
            true => {
                let arrival = sequence.get(next).time;
                accumulated += pending.len() as f64 * (arrival - clock);
                clock = arrival;
                pending.push(next);
                next += 1;
            }
            false => {
                services.push(Service {
                    time: trigger,
                    requests: std::mem::take(&mut pending),
                });
                accumulated = 0.0;
                clock = trigger;
            }
        }
    }
    Schedule::new(services)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Request;

    fn seq(tree: &Tree, horizon: f64, times: &[(f64, usize)]) -> RequestSequence {
        RequestSequence::new(
            horizon,
            times
                .iter()
                .map(|&(time, location)| Request { time, location })
                .collect(),
            tree,
        )
        .unwrap()
    }

    #[test]
    fn instant_serves_each_request_alone() {
        let tree = Tree::single_edge(2.0);
        let s = seq(&tree, 1.0, &[(0.1, 1), (0.4, 1), (0.9, 1)]);
        let sched = instant(&s);
        let cost = sched.cost(&tree, &s).unwrap();
        assert_eq!(cost.delay, 0.0);
        assert_eq!(cost.weight, 3.0 * 2.0);
    }

    #[test]
    fn instant_on_empty_sequence() {
        let sched = instant(&RequestSequence::empty(1.0));
        assert!(sched.is_empty());
    }

    #[test]
    fn instant_weight_equals_sum_of_root_distances() {
        let tree = Tree::from_edges(4, 0, &[(1, 0, 1.0), (2, 1, 0.5), (3, 0, 2.0)]).unwrap();
        let s = seq(&tree, 1.0, &[(0.1, 2), (0.2, 3), (0.3, 2)]);
        let cost = instant(&s).cost(&tree, &s).unwrap();
        let expected: f64 = s
            .requests()
            .iter()
            .map(|r| tree.dist_to_root(r.location))
            .sum();
        assert!((cost.weight - expected).abs() < 1e-12);
    }

    #[test]
    fn optimal_period_example() {
        assert_eq!(optimal_single_edge_period(2.0, 1.0), 2.0);
    }

    #[test]
    fn instant_mean_cost_on_a_light_tree_is_horizon_times_heaviness() {
        use crate::instance::{Instance, InstanceClass};
        use crate::poisson::{generate, ArrivalConfig};
        use crate::stats::{derive_seed, MeanSe};
        let tree = Tree::from_edges(4, 0, &[(1, 0, 0.6), (2, 1, 0.5), (3, 0, 1.1)]).unwrap();
        let inst = Instance::new(tree, vec![0.0, 0.3, 0.25, 0.2]).unwrap();
        assert_eq!(inst.classify(), InstanceClass::Light);
        let horizon = 12.0;
        let costs: Vec<f64> = (0..20_000u64)
            .map(|i| {
                let cfg = ArrivalConfig::new(horizon, derive_seed(0x1F, i));
                let seq = generate(&inst, &cfg).unwrap();
                instant(&seq).cost(inst.tree(), &seq).unwrap().total
            })
            .collect();
        let stats = MeanSe::from_samples(&costs);
        let expected = horizon * inst.heaviness();
        assert!(
            stats.sigmas_from(expected) <= 3.0,
            "mean {} vs {expected}",
            stats.mean
        );
    }

    #[test]
    fn fixed_period_places_the_expected_ticks() {
        let tree = Tree::single_edge(1.0);
        let s = seq(&tree, 6.0, &[(0.5, 1), (2.5, 1)]);
        let run = fixed_period(&s, &tree, 2.0).unwrap();
        let times: Vec<f64> = run.schedule.services.iter().map(|sv| sv.time).collect();
        assert_eq!(times, vec![2.0, 4.0, 6.0]);
        // Horizon not a multiple: an extra service lands at the horizon.
        let s2 = seq(&tree, 5.0, &[(4.9, 1)]);
        let run2 = fixed_period(&s2, &tree, 2.0).unwrap();
        let times2: Vec<f64> = run2.schedule.services.iter().map(|sv| sv.time).collect();
        assert_eq!(times2, vec![2.0, 4.0, 5.0]);
    }

    #[test]
    fn empty_tick_costs_nothing_but_blind_charges_full_tree() {
        let tree = Tree::single_edge(3.0);
        let s = seq(&tree, 4.0, &[(3.5, 1)]);
        let run = fixed_period(&s, &tree, 2.0).unwrap();
        let cost = run.schedule.cost(&tree, &s).unwrap();
        // Only the second tick serves anything.
        assert_eq!(cost.weight, 3.0);
        assert_eq!(run.blind_weight, 2.0 * 3.0);
        assert!(run.blind_cost(&tree, &s).unwrap() >= cost.total);
    }

    #[test]
    fn blind_cost_dominates_actual_cost() {
        let tree = Tree::from_edges(3, 0, &[(1, 0, 1.0), (2, 1, 1.5)]).unwrap();
        let s = seq(&tree, 7.0, &[(0.3, 1), (1.1, 2), (4.0, 2), (6.9, 1)]);
        for period in [0.7, 1.3, 2.0, 3.1] {
            let run = fixed_period(&s, &tree, period).unwrap();
            let actual = run.schedule.cost(&tree, &s).unwrap().total;
            assert!(run.blind_cost(&tree, &s).unwrap() >= actual - 1e-12);
        }
    }

    #[test]
    fn greedy_single_request_waits_out_the_edge_weight() {
        let tree = Tree::single_edge(1.5);
        let s = seq(&tree, 10.0, &[(2.0, 1)]);
        let sched = greedy(&s, &tree);
        assert_eq!(sched.services.len(), 1);
        assert!((sched.services[0].time - 3.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_twin_requests_split_the_wait() {
        let tree = Tree::single_edge(1.0);
        let s = seq(&tree, 10.0, &[(2.0, 1), (2.0, 1)]);
        let sched = greedy(&s, &tree);
        assert_eq!(sched.services.len(), 1);
        assert!((sched.services[0].time - 2.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_on_empty_sequence() {
        assert!(greedy(&RequestSequence::empty(1.0), &Tree::single_edge(1.0)).is_empty());
    }

    #[test]
    fn greedy_trigger_matches_subtree_weight() {
        // At each issued service the accumulated delay equals the weight of
        // the minimal subtree spanning the batch.
        let tree =
            Tree::from_edges(5, 0, &[(1, 0, 0.8), (2, 1, 0.4), (3, 0, 1.2), (4, 3, 0.3)]).unwrap();
        let s = seq(
            &tree,
            20.0,
            &[
                (0.1, 2),
                (0.15, 4),
                (0.9, 1),
                (1.0, 3),
                (1.0, 2),
                (5.0, 4),
                (9.7, 1),
            ],
        );
        let sched = greedy(&s, &tree);
        sched.validate(&s).unwrap();
        for sv in &sched.services {
            let weight = tree
                .minimal_subtree_weight(sv.requests.iter().map(|&i| s.get(i).location))
                .unwrap();
            let delay: f64 = sv.requests.iter().map(|&i| sv.time - s.get(i).time).sum();
            assert!(
                (delay - weight).abs() <= 1e-9 * weight.max(1.0),
                "{delay} vs {weight}"
            );
        }
    }
}
