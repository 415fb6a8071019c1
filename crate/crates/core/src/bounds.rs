//! Closed-form lower and upper bounds on expected schedule costs.
//!
//! Pure arithmetic over instance structure; no randomness. Each evaluator
//! checks its structural precondition and errors with the failed predicate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::GenPlanner;
use crate::instance::Instance;
use crate::plan::{round_periods, saturation_partition, ClusterPlan};

/// RoE guarantee of the on-arrival strategy on light instances,
/// 16 / (3 − 3e⁻¹) ≈ 8.44.
pub fn instant_light_roe_bound() -> f64 {
    16.0 / (3.0 * (1.0 - (-1.0f64).exp()))
}

/// RoE guarantee of the periodic strategy on heavy instances, 64/3.
pub fn plan_heavy_roe_bound() -> f64 {
    64.0 / 3.0
}

/// RoE guarantee of the combined strategy on arbitrary instances.
pub fn gen_roe_bound() -> f64 {
    210.0
}

fn single_edge_params(instance: &Instance) -> Result<(f64, f64)> {
    let tree = instance.tree();
    if tree.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "single-edge bound on a {}-vertex tree",
            tree.len()
        )));
    }
    let leaf = if tree.root() == 0 { 1 } else { 0 };
    Ok((tree.edge_weight(leaf), instance.rate(leaf)))
}

/// Lower bound on E[OPT] for a light single edge: ½ · (1 − e⁻¹) · τ · π.
pub fn lower_bound_single_edge_light(instance: &Instance, tau: f64) -> Result<f64> {
    let (w, lambda) = single_edge_params(instance)?;
    let pi = w * lambda;
    if pi > 1.0 {
        return Err(Error::InvalidInput(format!(
            "heaviness π = {pi} > 1: not a light edge"
        )));
    }
    Ok(0.5 * (1.0 - (-1.0f64).exp()) * tau * pi)
}

/// Lower bound on E[OPT] for a heavy single edge: 3/(8√2) · τ · √π.
pub fn lower_bound_single_edge_heavy(instance: &Instance, tau: f64) -> Result<f64> {
    let (w, lambda) = single_edge_params(instance)?;
    let pi = w * lambda;
    if pi <= 1.0 {
        return Err(Error::InvalidInput(format!(
            "heaviness π = {pi} <= 1: not a heavy edge"
        )));
    }
    Ok(3.0 / (8.0 * 2.0f64.sqrt()) * tau * pi.sqrt())
}

/// Lower bound on E[OPT] for a light instance:
/// 3/16 · (1 − e⁻¹) · τ · π(T, λ).
pub fn lower_bound_light(instance: &Instance, tau: f64) -> Result<f64> {
    let pi = instance.heaviness();
    if pi > 1.0 {
        return Err(Error::InvalidInput(format!(
            "heaviness π = {pi} > 1: instance is not light"
        )));
    }
    Ok(3.0 / 16.0 * (1.0 - (-1.0f64).exp()) * tau * pi)
}

/// Lower bound on E[OPT] from a saturation partition:
/// Σ 3/16 · w(Tᵢ) · τ/pᵢ over the clusters (raw periods).
pub fn lower_bound_heavy_cluster(plan: &ClusterPlan, tau: f64) -> f64 {
    plan.clusters
        .iter()
        .map(|c| 3.0 / 16.0 * c.weight * tau / c.period)
        .sum()
}

/// Lower bound on E[OPT] from a balanced partition:
/// 3/16 · (1 − e⁻¹) · τ · Σ π′(U). Sums over every branch of the planner.
pub fn lower_bound_gen_combined(planner: &GenPlanner, tau: f64) -> f64 {
    3.0 / 16.0 * (1.0 - (-1.0f64).exp()) * tau * planner.pi_prime_sum()
}

/// Expected cost of the on-arrival strategy on a light instance: τ · π.
pub fn upper_bound_instant_light(instance: &Instance, tau: f64) -> Result<f64> {
    let pi = instance.heaviness();
    if pi > 1.0 {
        return Err(Error::InvalidInput(format!(
            "heaviness π = {pi} > 1: instance is not light"
        )));
    }
    Ok(tau * pi)
}

/// Closed-form bound on the blind periodic cost: 2 Σ (τ/p̂ᵢ) · w(Tᵢ).
/// Equals the expectation exactly when every rounded period matches its raw
/// period; otherwise the per-period delay is smaller and this is an upper
/// bound (see [`plan_blind_expected_cost`]).
pub fn upper_bound_plan_heavy(plan: &ClusterPlan, tau: f64) -> Result<f64> {
    if !plan.is_rounded() {
        return Err(Error::InvalidInput(
            "plan periods must be rounded first".into(),
        ));
    }
    Ok(plan
        .clusters
        .iter()
        .map(|c| 2.0 * tau / c.rounded_period.unwrap() * c.weight)
        .sum())
}

/// Exact expectation of the blind periodic cost when τ is a whole number of
/// every rounded period: Σ (τ/p̂ᵢ) · (w(Tᵢ) + λ(Tᵢ)/2 · p̂ᵢ²).
pub fn plan_blind_expected_cost(plan: &ClusterPlan, tau: f64) -> Result<f64> {
    if !plan.is_rounded() {
        return Err(Error::InvalidInput(
            "plan periods must be rounded first".into(),
        ));
    }
    Ok(plan
        .clusters
        .iter()
        .map(|c| {
            let p_hat = c.rounded_period.unwrap();
            tau / p_hat * (c.weight + 0.5 * c.rate * p_hat * p_hat)
        })
        .sum())
}

/// Expected-cost bound for the combined strategy: the periodic bound on the
/// augmented instance plus τ · Σ π′(U) over all parts. With no periodic
/// parts this collapses to the on-arrival value τ · π(T).
pub fn upper_bound_gen(planner: &GenPlanner, tau: f64) -> Result<f64> {
    let mut total = tau * planner.pi_prime_sum();
    for b in 0..planner.branch_count() {
        if let Some((_, plan)) = planner.branch_plan(b) {
            total += upper_bound_plan_heavy(plan, tau)?;
        }
    }
    Ok(total)
}

/// Bound selector for the command-line surface. `HeavyCluster` and `Gen*`
/// build the needed partition structures from the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    SingleEdgeLight,
    SingleEdgeHeavy,
    Light,
    HeavyCluster,
    GenCombined,
    InstantLight,
    PlanHeavy,
    PlanBlindExact,
    Gen,
}

impl BoundKind {
    pub fn all() -> &'static [BoundKind] {
        &[
            BoundKind::SingleEdgeLight,
            BoundKind::SingleEdgeHeavy,
            BoundKind::Light,
            BoundKind::HeavyCluster,
            BoundKind::GenCombined,
            BoundKind::InstantLight,
            BoundKind::PlanHeavy,
            BoundKind::PlanBlindExact,
            BoundKind::Gen,
        ]
    }

    pub fn parse(name: &str) -> Result<BoundKind> {
        match name {
            "single-edge-light" => Ok(BoundKind::SingleEdgeLight),
            "single-edge-heavy" => Ok(BoundKind::SingleEdgeHeavy),
            "light" => Ok(BoundKind::Light),
            "heavy-cluster" => Ok(BoundKind::HeavyCluster),
            "gen-combined" => Ok(BoundKind::GenCombined),
            "instant-light" => Ok(BoundKind::InstantLight),
            "plan-heavy" => Ok(BoundKind::PlanHeavy),
            "plan-blind-exact" => Ok(BoundKind::PlanBlindExact),
            "gen" => Ok(BoundKind::Gen),
            other => Err(Error::InvalidInput(format!("unknown bound kind {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::SingleEdgeLight => "single-edge-light",
            BoundKind::SingleEdgeHeavy => "single-edge-heavy",
            BoundKind::Light => "light",
            BoundKind::HeavyCluster => "heavy-cluster",
            BoundKind::GenCombined => "gen-combined",
            BoundKind::InstantLight => "instant-light",
            BoundKind::PlanHeavy => "plan-heavy",
            BoundKind::PlanBlindExact => "plan-blind-exact",
            BoundKind::Gen => "gen",
        }
    }
}

/// Evaluates a bound by kind, deriving partitions where needed.
pub fn evaluate_bound(kind: BoundKind, instance: &Instance, tau: f64) -> Result<f64> {
    match kind {
        BoundKind::SingleEdgeLight => lower_bound_single_edge_light(instance, tau),
        BoundKind::SingleEdgeHeavy => lower_bound_single_edge_heavy(instance, tau),
        BoundKind::Light => lower_bound_light(instance, tau),
        BoundKind::HeavyCluster => Ok(lower_bound_heavy_cluster(
            &saturation_partition(instance)?,
            tau,
        )),
        BoundKind::GenCombined => Ok(lower_bound_gen_combined(&GenPlanner::new(instance)?, tau)),
        BoundKind::InstantLight => upper_bound_instant_light(instance, tau),
        BoundKind::PlanHeavy => {
            upper_bound_plan_heavy(&round_periods(saturation_partition(instance)?), tau)
        }
        BoundKind::PlanBlindExact => {
            plan_blind_expected_cost(&round_periods(saturation_partition(instance)?), tau)
        }
        BoundKind::Gen => upper_bound_gen(&GenPlanner::new(instance)?, tau),
    }
}
