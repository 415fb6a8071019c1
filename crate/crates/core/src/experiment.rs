//! Monte-Carlo experiment harness: run schedulers over random request
//! sequences, estimate the ratio of expectations against an exact optimum or
//! a closed-form bound, and tabulate the star-family separation experiment.
//!
//! Ratios are estimated as ratio of means (matching the ratio-of-
//! expectations target), not as mean of per-trial ratios; the two differ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fixed_period, greedy, instant};
use crate::bounds::{self, BoundKind};
use crate::error::{Error, Result};
use crate::gen::GenPlanner;
use crate::generate::{generate_instance, InstanceKind};
use crate::instance::Instance;
use crate::opt::{opt_bruteforce, MAX_BRUTEFORCE_REQUESTS};
use crate::plan::{plan_schedule, round_periods, saturation_partition, ClusterPlan};
use crate::poisson::{generate, ArrivalConfig, ArrivalMode};
use crate::schedule::RequestSequence;
use crate::stats::{derive_seed, ratio_of_means, MeanSe};

/// Expected-request guard for the brute-force denominator.
pub const BRUTEFORCE_LOAD_LIMIT: f64 = 8.0;

/// Scheduler selection, parsable from the command-line names
/// `instant | periodic:<p> | greedy | plan | plan-blind | gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SchedulerSpec {
    Instant,
    Periodic {
        period: f64,
    },
    /// Fixed-period run costed with the oblivious full-tree weight.
    PeriodicBlind {
        period: f64,
    },
    Greedy,
    Plan,
    PlanBlind,
    Gen,
}

impl SchedulerSpec {
    pub fn parse(name: &str) -> Result<SchedulerSpec> {
        if let Some(p) = name.strip_prefix("periodic:") {
            let period: f64 = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad period in {name:?}")))?;
            return Ok(SchedulerSpec::Periodic { period });
        }
        if let Some(p) = name.strip_prefix("periodic-blind:") {
            let period: f64 = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad period in {name:?}")))?;
            return Ok(SchedulerSpec::PeriodicBlind { period });
        }
        match name {
            "instant" => Ok(SchedulerSpec::Instant),
            "greedy" => Ok(SchedulerSpec::Greedy),
            "plan" => Ok(SchedulerSpec::Plan),
            "plan-blind" => Ok(SchedulerSpec::PlanBlind),
            "gen" => Ok(SchedulerSpec::Gen),
            other => Err(Error::InvalidInput(format!("unknown scheduler {other:?}"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SchedulerSpec::Instant => "instant".into(),
            SchedulerSpec::Periodic { period } => format!("periodic:{period}"),
            SchedulerSpec::PeriodicBlind { period } => format!("periodic-blind:{period}"),
            SchedulerSpec::Greedy => "greedy".into(),
            SchedulerSpec::Plan => "plan".into(),
            SchedulerSpec::PlanBlind => "plan-blind".into(),
            SchedulerSpec::Gen => "gen".into(),
        }
    }

    /// The proven RoE guarantee for context, where one applies.
    pub fn known_roe_bound(&self) -> Option<f64> {
        match self {
            SchedulerSpec::Instant => Some(bounds::instant_light_roe_bound()),
            SchedulerSpec::Plan | SchedulerSpec::PlanBlind => Some(bounds::plan_heavy_roe_bound()),
            SchedulerSpec::Gen => Some(bounds::gen_roe_bound()),
            _ => None,
        }
    }
}

/// Denominator of the ratio estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DenominatorMode {
    /// Per-trial exhaustive optimum; requires λ(T)·τ ≤ 8 so the request
    /// count stays within the enumeration guard.
    BruteForceOpt,
    /// A closed-form bound evaluated once.
    LowerBoundFormula(BoundKind),
}

/// Instance source plus run parameters; fully determines an experiment
/// together with the master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub horizon: f64,
    pub trials: usize,
    pub seed: u64,
    pub schedulers: Vec<SchedulerSpec>,
    pub denominator: DenominatorMode,
    #[serde(default = "default_mode")]
    pub arrival_mode: ArrivalMode,
}

fn default_mode() -> ArrivalMode {
    ArrivalMode::Distributed
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub costs: Vec<f64>,
    pub denominator: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchedulerOutcome {
    pub scheduler: String,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    /// Proven RoE guarantee for context, when one exists for the scheduler.
    pub known_roe_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoeReport {
    pub trials: usize,
    /// Trials regenerated because the request count exceeded the
    /// brute-force guard.
    pub resampled_trials: usize,
    pub denominator_label: String,
    pub denominator_mean: f64,
    pub denominator_se: f64,
    pub schedulers: Vec<SchedulerOutcome>,
    pub per_trial: Vec<TrialRecord>,
}

/// Reusable per-instance scheduler state (plans are deterministic, so they
/// are built once and shared across trials).
pub struct SchedulerBench {
    pub instance: Instance,
    specs: Vec<SchedulerSpec>,
    plan: Option<ClusterPlan>,
    gen: Option<GenPlanner>,
}

/// One scheduler execution: the schedule plus the blind weight when the
/// spec uses oblivious accounting.
pub struct SchedulerRun {
    pub schedule: crate::schedule::Schedule,
    pub blind_weight: Option<f64>,
}

impl SchedulerBench {
    pub fn new(instance: Instance, specs: &[SchedulerSpec]) -> Result<SchedulerBench> {
        let needs_plan = specs
            .iter()
            .any(|s| matches!(s, SchedulerSpec::Plan | SchedulerSpec::PlanBlind));
        let needs_gen = specs.iter().any(|s| matches!(s, SchedulerSpec::Gen));
        let plan = needs_plan
            .then(|| saturation_partition(&instance).map(round_periods))
            .transpose()?;
        let gen = needs_gen.then(|| GenPlanner::new(&instance)).transpose()?;
        Ok(SchedulerBench {
            instance,
            specs: specs.to_vec(),
            plan,
            gen,
        })
    }

    pub fn plan(&self) -> Option<&ClusterPlan> {
        self.plan.as_ref()
    }

    pub fn gen_planner(&self) -> Option<&GenPlanner> {
        self.gen.as_ref()
    }

    /// Horizon quantum matching the periodic schedulers in play: twice the
    /// largest rounded period over all prepared plans.
    pub fn period_quantum(&self) -> Option<f64> {
        let mut quantum: Option<f64> = None;
        let mut bump = |p: f64| quantum = Some(quantum.map_or(p, |q: f64| q.max(p)));
        if let Some(plan) = &self.plan {
            for c in &plan.clusters {
                bump(2.0 * c.rounded_period.expect("prepared plans are rounded"));
            }
        }
        if let Some(gen) = &self.gen {
            for b in 0..gen.branch_count() {
                if let Some((_, plan)) = gen.branch_plan(b) {
                    for c in &plan.clusters {
                        bump(2.0 * c.rounded_period.expect("prepared plans are rounded"));
                    }
                }
            }
        }
        quantum
    }

    /// Runs the scheduler at `idx` on one sequence.
    pub fn execute(&self, idx: usize, sequence: &RequestSequence) -> Result<SchedulerRun> {
        let tree = self.instance.tree();
        Ok(match &self.specs[idx] {
            SchedulerSpec::Instant => SchedulerRun {
                schedule: instant(sequence),
                blind_weight: None,
            },
            SchedulerSpec::Periodic { period } => SchedulerRun {
                schedule: fixed_period(sequence, tree, *period)?.schedule,
                blind_weight: None,
            },
            SchedulerSpec::PeriodicBlind { period } => {
                let run = fixed_period(sequence, tree, *period)?;
                SchedulerRun {
                    schedule: run.schedule,
                    blind_weight: Some(run.blind_weight),
                }
            }
            SchedulerSpec::Greedy => SchedulerRun {
                schedule: greedy(sequence, tree),
                blind_weight: None,
            },
            SchedulerSpec::Plan => {
                let plan = self.plan.as_ref().expect("plan prepared in new()");
                SchedulerRun {
                    schedule: plan_schedule(sequence, &self.instance, plan)?.schedule,
                    blind_weight: None,
                }
            }
            SchedulerSpec::PlanBlind => {
                let plan = self.plan.as_ref().expect("plan prepared in new()");
                let run = plan_schedule(sequence, &self.instance, plan)?;
                SchedulerRun {
                    schedule: run.schedule,
                    blind_weight: Some(run.blind_weight),
                }
            }
            SchedulerSpec::Gen => {
                let planner = self.gen.as_ref().expect("planner prepared in new()");
                SchedulerRun {
                    schedule: planner.schedule(sequence)?,
                    blind_weight: None,
                }
            }
        })
    }

    /// Costs one request sequence under every configured scheduler.
    pub fn run(&self, sequence: &RequestSequence) -> Result<Vec<f64>> {
        let tree = self.instance.tree();
        (0..self.specs.len())
            .map(|idx| -> Result<f64> {
                let run = self.execute(idx, sequence)?;
                let cost = run.schedule.cost(tree, sequence)?;
                Ok(match run.blind_weight {
                    Some(blind) => cost.delay + blind,
                    None => cost.total,
                })
            })
            .collect()
    }
}

/// Draws a sequence for the trial, regenerating (with fresh sub-seeds) while
/// the request count exceeds the brute-force guard. Returns the sequence and
/// the number of regenerations.
fn draw_guarded(
    instance: &Instance,
    horizon: f64,
    mode: ArrivalMode,
    seed: u64,
    cap: Option<usize>,
) -> (RequestSequence, usize) {
    let mut resamples = 0;
    loop {
        let config = ArrivalConfig {
            horizon,
            seed: derive_seed(seed, resamples as u64),
            mode,
        };
        let seq = generate(instance, &config).expect("experiment instance is valid");
        match cap {
            Some(cap) if seq.len() > cap => resamples += 1,
            _ => return (seq, resamples),
        }
    }
}

/// Runs the full Monte-Carlo experiment for one instance.
pub fn run_experiment(instance: &Instance, config: &ExperimentConfig) -> Result<RoeReport> {
    if config.trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let load = instance.total_rate() * config.horizon;
    let (cap, denominator_label, fixed_denominator) = match &config.denominator {
        DenominatorMode::BruteForceOpt => {
            if load > BRUTEFORCE_LOAD_LIMIT {
                return Err(Error::Config(format!(
                    "λ(T)·τ = {load:.3} exceeds the brute-force guard {BRUTEFORCE_LOAD_LIMIT}"
                )));
            }
            (
                Some(MAX_BRUTEFORCE_REQUESTS),
                "brute-force-opt".to_string(),
                None,
            )
        }
        DenominatorMode::LowerBoundFormula(kind) => {
            let value = bounds::evaluate_bound(*kind, instance, config.horizon)?;
            if !(value > 0.0) {
                return Err(Error::Config(format!(
                    "bound {} evaluates to {value}; cannot form a ratio",
                    kind.name()
                )));
            }
            (None, format!("bound:{}", kind.name()), Some(value))
        }
    };

    let bench = SchedulerBench::new(instance.clone(), &config.schedulers)?;
    let records: Vec<Result<(TrialRecord, usize)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(config.seed, trial as u64);
            let (seq, resamples) = draw_guarded(
                instance,
                config.horizon,
                config.arrival_mode,
                trial_seed,
                cap,
            );
            let costs = bench.run(&seq)?;
            let denominator = match fixed_denominator {
                Some(v) => v,
                None => opt_bruteforce(&seq, instance.tree())?.1.total,
            };
            Ok((
                TrialRecord {
                    trial,
                    costs,
                    denominator,
                },
                resamples,
            ))
        })
        .collect();

    let mut per_trial = Vec::with_capacity(config.trials);
    let mut resampled_trials = 0;
    for r in records {
        let (record, resamples) = r?;
        resampled_trials += resamples;
        per_trial.push(record);
    }

    let denominators: Vec<f64> = per_trial.iter().map(|t| t.denominator).collect();
    let den_stats = MeanSe::from_samples(&denominators);
    let schedulers = config
        .schedulers
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let costs: Vec<f64> = per_trial.iter().map(|t| t.costs[i]).collect();
            let stats = MeanSe::from_samples(&costs);
            let (ratio, ratio_se) = match fixed_denominator {
                // A constant denominator has no sampling error.
                Some(v) => (stats.mean / v, stats.se / v),
                None => ratio_of_means(&costs, &denominators),
            };
            SchedulerOutcome {
                scheduler: spec.name(),
                mean_cost: stats.mean,
                se_cost: stats.se,
                ratio,
                ratio_se,
                known_roe_bound: spec.known_roe_bound(),
            }
        })
        .collect();

    Ok(RoeReport {
        trials: config.trials,
        resampled_trials,
        denominator_label,
        denominator_mean: den_stats.mean,
        denominator_se: den_stats.se,
        schedulers,
        per_trial,
    })
}

/// One row of the separation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationRow {
    pub n: usize,
    pub horizon: f64,
    pub plan_period: f64,
    pub instant_mean: f64,
    pub instant_se: f64,
    /// (√n + 1) · τ.
    pub instant_expected: f64,
    pub plan_mean: f64,
    pub plan_se: f64,
    /// √(2(n + √n)) · τ.
    pub plan_expected: f64,
    pub hybrid_mean: f64,
    pub hybrid_se: f64,
    /// (1.5√n + n^¼) · τ / n^¼, the trunk-periodic reference strategy.
    pub hybrid_expected: f64,
    pub ratio_instant_hybrid: f64,
    pub ratio_plan_hybrid: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationTable {
    pub trials: usize,
    pub rows: Vec<SeparationRow>,
}

/// Cost of the hand-tuned star strategy: buy the trunk every `period`
/// (obliviously) and serve all pending requests at each tick, paying each
/// pending leaf edge.
fn star_trunk_periodic_cost(
    sequence: &RequestSequence,
    tree: &crate::tree::Tree,
    period: f64,
) -> f64 {
    let horizon = sequence.horizon();
    let ticks = (horizon / period + 1e-9).floor() as u64;
    let mut times: Vec<f64> = (1..=ticks).map(|j| j as f64 * period).collect();
    let aligned = ticks >= 1 && (horizon - ticks as f64 * period) <= 1e-9 * period;
    if !aligned {
        times.push(horizon);
    }
    let trunk_weight = tree.edge_weight(1);
    let mut cost = trunk_weight * times.len() as f64;
    let mut next = 0usize;
    let mut pending_leaves: std::collections::HashSet<usize> = Default::default();
    for &t in &times {
        while next < sequence.len() && sequence.get(next).time <= t {
            let r = sequence.get(next);
            cost += t - r.time;
            pending_leaves.insert(r.location);
            next += 1;
        }
        cost += pending_leaves.len() as f64; // unit leaf edges
        pending_leaves.clear();
    }
    cost
}

/// Runs the star-family separation experiment: empirical means for the
/// on-arrival and periodic strategies against the trunk-periodic reference,
/// for each star size.
pub fn separation_experiment(
    star_sizes: &[usize],
    period_multiplier: f64,
    trials: usize,
    seed: u64,
) -> Result<SeparationTable> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let mut rows = Vec::with_capacity(star_sizes.len());
    for &n in star_sizes {
        let instance = generate_instance(&InstanceKind::SeparationStar { n }, 0)?;
        let plan = round_periods(saturation_partition(&instance)?);
        let plan_period = plan.clusters[0].rounded_period.unwrap();
        let horizon = period_multiplier * plan_period;
        let trunk_period = (n as f64).powf(0.25);
        let nf = n as f64;

        let samples: Vec<[f64; 3]> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let cfg = ArrivalConfig {
                    horizon,
                    seed: derive_seed(derive_seed(seed, n as u64), trial as u64),
                    mode: ArrivalMode::Distributed,
                };
                let seq = generate(&instance, &cfg).expect("star instance is valid");
                // On-arrival cost is (√n + 1) per request; computing it
                // directly avoids building a huge schedule.
                let instant_cost = seq.len() as f64 * (nf.sqrt() + 1.0);
                let plan_cost = plan_schedule(&seq, &instance, &plan)
                    .and_then(|run| run.blind_cost(instance.tree(), &seq))
                    .expect("plan run succeeds");
                let hybrid_cost = star_trunk_periodic_cost(&seq, instance.tree(), trunk_period);
                [instant_cost, plan_cost, hybrid_cost]
            })
            .collect();

        let instants: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        let plans: Vec<f64> = samples.iter().map(|s| s[1]).collect();
        let hybrids: Vec<f64> = samples.iter().map(|s| s[2]).collect();
        let si = MeanSe::from_samples(&instants);
        let sp = MeanSe::from_samples(&plans);
        let sh = MeanSe::from_samples(&hybrids);
        rows.push(SeparationRow {
            n,
            horizon,
            plan_period,
            instant_mean: si.mean,
            instant_se: si.se,
            instant_expected: (nf.sqrt() + 1.0) * horizon,
            plan_mean: sp.mean,
            plan_se: sp.se,
            plan_expected: (2.0 * (nf + nf.sqrt())).sqrt() * horizon,
            hybrid_mean: sh.mean,
            hybrid_se: sh.se,
            hybrid_expected: (1.5 * nf.sqrt() + trunk_period) * horizon / trunk_period,
            ratio_instant_hybrid: si.mean / sh.mean,
            ratio_plan_hybrid: sp.mean / sh.mean,
        });
    }
    Ok(SeparationTable { trials, rows })
}
