//! Random request generation under the Poisson arrival model.
//!
//! Two equivalent formulations are provided: a distributed one (independent
//! exponential clocks per vertex) and a centralized one (global exponential
//! gaps, locations drawn proportionally to the rates). Exponentials are
//! sampled by inverse CDF, −ln(1−U)/λ, from a seeded ChaCha12 stream, so a
//! fixed seed reproduces the sequence byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{Request, RequestSequence};
use crate::stats::{derive_seed, ks_pvalue, ks_statistic_uniform, MeanSe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrivalMode {
    Distributed,
    Centralized,
}

/// Parameters of one random generation run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArrivalConfig {
    pub horizon: f64,
    pub seed: u64,
    pub mode: ArrivalMode,
}

impl ArrivalConfig {
    pub fn new(horizon: f64, seed: u64) -> ArrivalConfig {
        ArrivalConfig {
            horizon,
            seed,
            mode: ArrivalMode::Distributed,
        }
    }
}

fn exponential(rng: &mut ChaCha12Rng, lambda: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / lambda
}

/// Draws one request sequence for `instance` under `config`.
///
/// Arrivals drawn exactly at the horizon are kept (closed interval); the
/// first arrival strictly past the horizon is discarded, which realizes the
/// conditioning of the last waiting time on exceeding the remaining window.
pub fn generate(instance: &Instance, config: &ArrivalConfig) -> Result<RequestSequence> {
    if !(config.horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {}",
            config.horizon
        )));
    }
    let total = instance.total_rate();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("total arrival rate is zero".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut requests = Vec::new();
    match config.mode {
        ArrivalMode::Distributed => {
            for u in 0..instance.tree().len() {
                let lambda = instance.rate(u);
                if lambda <= 0.0 {
                    continue;
                }
                let mut t = 0.0;
                loop {
                    t += exponential(&mut rng, lambda);
                    if t > config.horizon {
                        break;
                    }
                    requests.push(Request {
                        time: t,
                        location: u,
                    });
                }
            }
        }
        ArrivalMode::Centralized => {
            let mut t = 0.0;
            loop {
                t += exponential(&mut rng, total);
                if t > config.horizon {
                    break;
                }
                let mut pick: f64 = rng.random::<f64>() * total;
                let mut location = instance.tree().root();
                for u in 0..instance.tree().len() {
                    let lambda = instance.rate(u);
                    if lambda <= 0.0 {
                        continue;
                    }
                    location = u;
                    pick -= lambda;
                    if pick <= 0.0 {
                        break;
                    }
                }
                requests.push(Request { time: t, location });
            }
        }
    }
    RequestSequence::new(config.horizon, requests, instance.tree())
}

/// Outcome of one self-test check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// False when the sample is too small for the significance to mean
    /// anything (a single trial has no standard error).
    pub significant: bool,
}

/// Per-trial summaries collected during the self-test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryStats {
    pub trials: usize,
    pub per_trial_counts: Vec<u64>,
    pub per_trial_terminal_delay: Vec<f64>,
    pub count_stats: MeanSe,
    pub terminal_delay_stats: MeanSe,
}

/// Report of the arrival-model self-test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub summary: SummaryStats,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

/// Tolerances for the self-test: means at `mean_sigmas` standard errors,
/// KS at significance `ks_alpha`.
#[derive(Debug, Clone, Copy)]
pub struct SelfTestConfig {
    pub mean_sigmas: f64,
    pub ks_alpha: f64,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        SelfTestConfig {
            mean_sigmas: 3.0,
            ks_alpha: 0.01,
        }
    }
}

/// Statistical self-test of the generator against the model's closed-form
/// consequences: E[N] = λ(T)·τ, terminal delay mass ½·λ(T)·τ², uniformity of
/// arrival times, and P(N ≥ λ(T)·τ) ≥ ½ when λ(T)·τ ≥ 1.
pub fn statistical_selftest(
    instance: &Instance,
    horizon: f64,
    trials: usize,
    seed: u64,
    config: &SelfTestConfig,
) -> Result<SelfTestReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let per_trial: Vec<(f64, f64, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let cfg = ArrivalConfig {
                horizon,
                seed: derive_seed(seed, i as u64),
                mode: ArrivalMode::Distributed,
            };
            let seq = generate(instance, &cfg).expect("valid config");
            let count = seq.len() as f64;
            let terminal: f64 = seq.requests().iter().map(|r| horizon - r.time).sum();
            let times: Vec<f64> = seq.requests().iter().map(|r| r.time).collect();
            (count, terminal, times)
        })
        .collect();

    let counts: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let terminals: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
    let mut all_times: Vec<f64> = per_trial.iter().flat_map(|t| t.2.iter().copied()).collect();

    let count_stats = MeanSe::from_samples(&counts);
    let terminal_stats = MeanSe::from_samples(&terminals);
    let rate = instance.total_rate();
    let expected_count = rate * horizon;
    let expected_terminal = 0.5 * rate * horizon * horizon;
    let significant = trials > 1;

    let mut checks = Vec::new();
    checks.push(CheckResult {
        name: "mean request count".into(),
        observed: count_stats.mean,
        expected: expected_count,
        tolerance: config.mean_sigmas * count_stats.se,
        pass: !significant || count_stats.sigmas_from(expected_count) <= config.mean_sigmas,
        significant,
    });
    checks.push(CheckResult {
        name: "mean terminal delay mass".into(),
        observed: terminal_stats.mean,
        expected: expected_terminal,
        tolerance: config.mean_sigmas * terminal_stats.se,
        pass: !significant || terminal_stats.sigmas_from(expected_terminal) <= config.mean_sigmas,
        significant,
    });

    if all_times.is_empty() {
        checks.push(CheckResult {
            name: "KS uniformity of arrival times".into(),
            observed: f64::NAN,
            expected: 0.0,
            tolerance: config.ks_alpha,
            pass: false,
            significant: false,
        });
    } else {
        let d = ks_statistic_uniform(&mut all_times, 0.0, horizon);
        let p = ks_pvalue(all_times.len(), d);
        checks.push(CheckResult {
            name: "KS uniformity of arrival times".into(),
            observed: p,
            expected: config.ks_alpha,
            tolerance: 0.0,
            pass: p >= config.ks_alpha,
            significant: all_times.len() > 1,
        });
    }

    if expected_count >= 1.0 {
        let hits = counts.iter().filter(|&&c| c >= expected_count).count() as f64;
        let p_hat = hits / trials as f64;
        let se = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
        checks.push(CheckResult {
            name: "P(N >= E[N]) >= 1/2".into(),
            observed: p_hat,
            expected: 0.5,
            tolerance: config.mean_sigmas * se,
            pass: !significant || p_hat >= 0.5 - config.mean_sigmas * se,
            significant,
        });
    }

    let all_pass = checks.iter().all(|c| c.pass || !c.significant);
    Ok(SelfTestReport {
        summary: SummaryStats {
            trials,
            per_trial_counts: counts.iter().map(|&c| c as u64).collect(),
            per_trial_terminal_delay: terminals,
            count_stats,
            terminal_delay_stats: terminal_stats,
        },
        checks,
        all_pass,
    })
}
