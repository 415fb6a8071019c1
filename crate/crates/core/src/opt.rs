//! Exact offline optimum at desk scale.
//!
//! `opt_bruteforce` enumerates every set partition of the requests
//! (restricted-growth strings, lexicographic) and places each block's
//! service at the block's latest arrival: with linear delay and
//! time-independent weight, moving a service earlier than that only adds
//! delay, and later only adds more, so the latest arrival is optimal within
//! a block. `opt_single_edge_dp` is the independent cross-check on
//! single-edge trees, where some optimal partition uses time-consecutive
//! blocks.

use crate::error::{Error, Result};
use crate::schedule::{CostBreakdown, RequestSequence, Schedule, Service};
use crate::tree::Tree;

/// Guard for the exhaustive oracle; Bell(12) ≈ 4.2 million partitions.
pub const MAX_BRUTEFORCE_REQUESTS: usize = 12;

/// Exhaustive offline optimum. Errors with a capacity hint above
/// [`MAX_BRUTEFORCE_REQUESTS`] requests.
pub fn opt_bruteforce(
    sequence: &RequestSequence,
    tree: &Tree,
) -> Result<(Schedule, CostBreakdown)> {
    let m = sequence.len();
    if m > MAX_BRUTEFORCE_REQUESTS {
        return Err(Error::Capacity(format!(
            "{m} requests exceed the exhaustive limit of {MAX_BRUTEFORCE_REQUESTS}; \
             use the single-edge DP or the bound evaluators"
        )));
    }
    if m == 0 {
        return Ok((Schedule::default(), CostBreakdown::zero()));
    }

    // Compress locations so subtree weights can be memoized per bitmask.
    let mut distinct: Vec<usize> = Vec::new();
    let loc_id: Vec<usize> = (0..m)
        .map(|i| {
            let loc = sequence.get(i).location;
            match distinct.iter().position(|&d| d == loc) {
                Some(id) => id,
                None => {
                    distinct.push(loc);
                    distinct.len() - 1
                }
            }
        })
        .collect();
    let mut weight_memo: Vec<f64> = vec![f64::NAN; 1 << distinct.len()];
    weight_memo[0] = 0.0;
    let mut weight_of = |mask: usize| -> f64 {
        if weight_memo[mask].is_nan() {
            weight_memo[mask] = tree
                .minimal_subtree_weight(
                    distinct
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| mask >> i & 1 == 1)
                        .map(|(_, &l)| l),
                )
                .expect("locations validated at sequence construction");
        }
        weight_memo[mask]
    };

    let times: Vec<f64> = (0..m).map(|i| sequence.get(i).time).collect();
    // Restricted-growth string enumeration.
    let mut assignment = vec![0usize; m];
    let mut best_cost = f64::INFINITY;
    let mut best_assignment = vec![0usize; m];
    let mut block_mask = vec![0usize; m];
    let mut block_last = vec![0f64; m];
    let mut block_delay_base = vec![0f64; m];
    let mut block_count = vec![0usize; m];
    loop {
        let blocks = assignment.iter().copied().max().unwrap() + 1;
        for b in 0..blocks {
            block_mask[b] = 0;
            block_last[b] = f64::NEG_INFINITY;
            block_delay_base[b] = 0.0;
            block_count[b] = 0;
        }
        for i in 0..m {
            let b = assignment[i];
            block_mask[b] |= 1 << loc_id[i];
            // Requests are time-sorted, so the last index in a block has
            // the latest arrival.
            block_last[b] = times[i];
            block_delay_base[b] += times[i];
            block_count[b] += 1;
        }
        let mut cost = 0.0;
        for b in 0..blocks {
            cost += weight_of(block_mask[b]);
            cost += block_count[b] as f64 * block_last[b] - block_delay_base[b];
        }
        if cost < best_cost {
            best_cost = cost;
            best_assignment.copy_from_slice(&assignment);
        }
        if !next_restricted_growth(&mut assignment) {
            break;
        }
    }

    let blocks = best_assignment.iter().copied().max().unwrap() + 1;
    let mut services: Vec<Service> = (0..blocks)
        .map(|_| Service {
            time: f64::NEG_INFINITY,
            requests: Vec::new(),
        })
        .collect();
    for i in 0..m {
        let b = best_assignment[i];
        services[b].time = services[b].time.max(times[i]);
        services[b].requests.push(i);
    }
    services.sort_by(|a, b| a.time.total_cmp(&b.time));
    let schedule = Schedule::new(services);
    let cost = schedule.cost(tree, sequence)?;
    debug_assert!((cost.total - best_cost).abs() <= 1e-9 * best_cost.max(1.0));
    Ok((schedule, cost))
}

/// Advances a restricted-growth string to the next set partition; false when
/// exhausted.
fn next_restricted_growth(a: &mut [usize]) -> bool {
    let m = a.len();
    for i in (1..m).rev() {
        let max_prefix = a[..i].iter().copied().max().unwrap();
        if a[i] <= max_prefix {
            a[i] += 1;
            for v in a[i + 1..].iter_mut() {
                *v = 0;
            }
            return true;
        }
    }
    false
}

/// O(m²) interval DP over consecutive groupings, valid on single-edge trees.
pub fn opt_single_edge_dp(sequence: &RequestSequence, tree: &Tree) -> Result<f64> {
    if tree.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "single-edge DP needs a two-vertex tree, got {} vertices",
            tree.len()
        )));
    }
    let leaf = if tree.root() == 0 { 1 } else { 0 };
    let w = tree.edge_weight(leaf);
    let m = sequence.len();
    if m == 0 {
        return Ok(0.0);
    }
    let times: Vec<f64> = (0..m).map(|i| sequence.get(i).time).collect();
    let mut prefix = vec![0.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] + times[i];
    }
    let mut dp = vec![f64::INFINITY; m + 1];
    dp[0] = 0.0;
    for i in 1..=m {
        for j in 0..i {
            // One service at t_{i-1} covering requests j..i.
            let delay = (i - j) as f64 * times[i - 1] - (prefix[i] - prefix[j]);
            dp[i] = dp[i].min(dp[j] + w + delay);
        }
    }
    Ok(dp[m])
}
