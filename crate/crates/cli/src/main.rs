use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mla_core::bounds::{evaluate_bound, BoundKind};
use mla_core::error::Error as CoreError;
use mla_core::experiment::{
    run_experiment, separation_experiment, DenominatorMode, ExperimentConfig, SchedulerBench,
    SchedulerSpec,
};
use mla_core::gen::GenPlanner;
use mla_core::generate::{generate_instance, InstanceKind};
use mla_core::instance::Instance;
use mla_core::opt::opt_bruteforce;
use mla_core::plan::{round_periods, saturation_partition};
use mla_core::poisson::{self, ArrivalConfig, ArrivalMode, SelfTestConfig};
use mla_core::report;
use mla_core::stats::derive_seed;

/// Simulation lab for online multi-level aggregation with linear delays.
#[derive(Parser)]
#[command(name = "mla-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceSource {
    /// Instance JSON file.
    #[arg(long, conflicts_with = "kind")]
    instance: Option<PathBuf>,
    /// Generator kind: single-edge | separation-star | random-tree |
    /// light-random | heavy-random.
    #[arg(long)]
    kind: Option<String>,
    /// Vertex count for random generators / leaf count for the star.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Maximum depth for random generators.
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    /// Edge weight for single-edge.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Leaf rate for single-edge.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
}

impl InstanceSource {
    fn kind(&self) -> anyhow::Result<InstanceKind> {
        let name = self.kind.as_deref().unwrap_or("single-edge");
        Ok(match name {
            "single-edge" => InstanceKind::SingleEdge {
                weight: self.weight,
                rate: self.rate,
            },
            "separation-star" => InstanceKind::SeparationStar { n: self.n },
            "random-tree" => InstanceKind::RandomTree {
                vertices: self.n,
                max_depth: self.max_depth,
                weight_range: (0.2, 2.0),
                rate_range: (0.0, 1.5),
                single_child_root: false,
            },
            "light-random" => InstanceKind::LightRandom {
                vertices: self.n,
                max_depth: self.max_depth,
            },
            "heavy-random" => InstanceKind::HeavyRandom {
                vertices: self.n,
                max_depth: self.max_depth,
            },
            other => {
                return Err(
                    CoreError::InvalidInput(format!("unknown generator kind {other:?}")).into(),
                )
            }
        })
    }

    fn load(&self, seed: u64) -> anyhow::Result<Instance> {
        match &self.instance {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(Instance::from_json(&text)?)
            }
            None => Ok(generate_instance(&self.kind()?, seed)?),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it as JSON.
    GenInstance {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scheduler over generated request sequences and report costs.
    Simulate {
        #[command(flatten)]
        source: InstanceSource,
        /// Scheduler: instant | periodic:<p> | greedy | plan | plan-blind | gen.
        #[arg(long, default_value = "instant")]
        scheduler: String,
        /// Horizon in time units.
        #[arg(
            long,
            required_unless_present = "tau_periods",
            conflicts_with = "tau_periods"
        )]
        tau: Option<f64>,
        /// Horizon as a multiple of the periodic scheduler's alignment
        /// quantum (twice the largest rounded period).
        #[arg(long)]
        tau_periods: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dump the first trial's schedule JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump the first trial's request sequence CSV here.
        #[arg(long)]
        dump_sequence: Option<PathBuf>,
    },
    /// Exact offline optimum of one generated sequence.
    Opt {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Refuse sequences with more requests than this.
        #[arg(long, default_value_t = mla_core::opt::MAX_BRUTEFORCE_REQUESTS)]
        max_requests: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the periodic or combined partition structures.
    Partition {
        #[command(flatten)]
        source: InstanceSource,
        /// plan | gen.
        #[arg(long, default_value = "plan")]
        algorithm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate closed-form bounds by kind name (or all that apply).
    Bounds {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long)]
        tau: f64,
        /// Bound kind; evaluates every applicable kind when omitted.
        #[arg(long)]
        bound: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate ratios of expectations for a set of schedulers.
    Roe {
        #[command(flatten)]
        source: InstanceSource,
        /// Full experiment configuration as JSON (overrides the scheduler,
        /// denominator, horizon, trial and seed flags).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated scheduler list.
        #[arg(long, default_value = "instant,greedy")]
        schedulers: String,
        /// brute-force | bound:<kind>.
        #[arg(long, default_value = "brute-force")]
        denominator: String,
        /// Horizon in time units.
        #[arg(
            long,
            required_unless_present_any = ["tau_periods", "config"],
            conflicts_with = "tau_periods"
        )]
        tau: Option<f64>,
        /// Horizon as a multiple of the periodic scheduler's alignment
        /// quantum (twice the largest rounded period).
        #[arg(long)]
        tau_periods: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write <prefix>.json, <prefix>.csv and <prefix>.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star-family separation experiment across instance sizes.
    AppendixB {
        /// Comma-separated star sizes.
        #[arg(long, default_value = "16,256,4096")]
        n: String,
        /// Horizon as a multiple of the periodic scheduler's period.
        #[arg(long, default_value_t = 100.0)]
        tau_periods: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statistical self-test of the arrival-model generator.
    Selftest {
        #[command(flatten)]
        source: InstanceSource,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: String, out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn resolve_horizon(
    bench: &SchedulerBench,
    tau: Option<f64>,
    tau_periods: Option<f64>,
) -> anyhow::Result<f64> {
    match (tau, tau_periods) {
        (Some(t), None) => Ok(t),
        (None, Some(k)) => {
            let quantum = bench.period_quantum().ok_or_else(|| {
                CoreError::Config(
                    "--tau-periods needs a periodic scheduler (plan, plan-blind or gen)".into(),
                )
            })?;
            Ok(k * quantum)
        }
        _ => Err(CoreError::Config("pass exactly one of --tau and --tau-periods".into()).into()),
    }
}

fn parse_denominator(name: &str) -> anyhow::Result<DenominatorMode> {
    if name == "brute-force" {
        return Ok(DenominatorMode::BruteForceOpt);
    }
    if let Some(kind) = name.strip_prefix("bound:") {
        return Ok(DenominatorMode::LowerBoundFormula(BoundKind::parse(kind)?));
    }
    Err(CoreError::InvalidInput(format!("unknown denominator {name:?}")).into())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenInstance { source, seed, out } => {
            let instance = source.load(seed)?;
            let mut text = instance.to_json();
            text.push('\n');
            emit(text, &out)?;
        }
        Command::Simulate {
            source,
            scheduler,
            tau,
            tau_periods,
            trials,
            seed,
            out,
            dump_sequence,
        } => {
            let instance = source.load(seed)?;
            let spec = SchedulerSpec::parse(&scheduler)?;
            let bench = SchedulerBench::new(instance.clone(), std::slice::from_ref(&spec))?;
            let tau = resolve_horizon(&bench, tau, tau_periods)?;
            let mut costs = Vec::with_capacity(trials);
            for trial in 0..trials {
                let cfg = ArrivalConfig::new(tau, derive_seed(seed, trial as u64));
                let seq = poisson::generate(&instance, &cfg)?;
                costs.push(bench.run(&seq)?[0]);
                if trial == 0 {
                    if let Some(path) = &out {
                        report::write_json(&bench.execute(0, &seq)?.schedule, path)?;
                    }
                    if let Some(path) = &dump_sequence {
                        std::fs::write(path, report::sequence_csv(&seq))?;
                    }
                }
            }
            let stats = mla_core::stats::MeanSe::from_samples(&costs);
            let summary = serde_json::json!({
                "scheduler": spec.name(),
                "tau": tau,
                "trials": trials,
                "mean_cost": stats.mean,
                "se": if stats.se.is_nan() { None } else { Some(stats.se) },
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Opt {
            source,
            tau,
            seed,
            max_requests,
            out,
        } => {
            let instance = source.load(seed)?;
            let seq = poisson::generate(&instance, &ArrivalConfig::new(tau, seed))?;
            if seq.len() > max_requests {
                return Err(CoreError::Capacity(format!(
                    "sequence has {} requests, above --max-requests {max_requests}",
                    seq.len()
                ))
                .into());
            }
            let (schedule, cost) = opt_bruteforce(&seq, instance.tree())?;
            let value = serde_json::json!({
                "requests": seq.len(),
                "cost": cost,
                "schedule": schedule,
            });
            let mut text = serde_json::to_string_pretty(&value)?;
            text.push('\n');
            emit(text, &out)?;
        }
        Command::Partition {
            source,
            algorithm,
            seed,
            out,
        } => {
            let instance = source.load(seed)?;
            let value = match algorithm.as_str() {
                "plan" => {
                    let plan = round_periods(saturation_partition(&instance)?);
                    plan_dump(&instance, &plan)
                }
                "gen" => {
                    let planner = GenPlanner::new(&instance)?;
                    gen_dump(&planner)
                }
                other => {
                    return Err(
                        CoreError::InvalidInput(format!("unknown algorithm {other:?}")).into(),
                    )
                }
            };
            let mut text = serde_json::to_string_pretty(&value)?;
            text.push('\n');
            emit(text, &out)?;
        }
        Command::Bounds {
            source,
            tau,
            bound,
            seed,
            out,
        } => {
            let instance = source.load(seed)?;
            let kinds: Vec<BoundKind> = match bound {
                Some(name) => vec![BoundKind::parse(&name)?],
                None => BoundKind::all().to_vec(),
            };
            let mut entries = serde_json::Map::new();
            for kind in kinds {
                match evaluate_bound(kind, &instance, tau) {
                    Ok(v) => {
                        entries.insert(kind.name().into(), serde_json::json!(v));
                    }
                    Err(e) => {
                        entries.insert(
                            kind.name().into(),
                            serde_json::json!({ "inapplicable": e.to_string() }),
                        );
                    }
                }
            }
            let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(entries))?;
            text.push('\n');
            emit(text, &out)?;
        }
        Command::Roe {
            source,
            config,
            schedulers,
            denominator,
            tau,
            tau_periods,
            trials,
            seed,
            out,
        } => {
            let instance = source.load(seed)?;
            let config = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    serde_json::from_str::<ExperimentConfig>(&text)?
                }
                None => {
                    let specs: Vec<SchedulerSpec> = schedulers
                        .split(',')
                        .map(|s| SchedulerSpec::parse(s.trim()))
                        .collect::<Result<_, _>>()?;
                    let horizon = {
                        let bench = SchedulerBench::new(instance.clone(), &specs)?;
                        resolve_horizon(&bench, tau, tau_periods)?
                    };
                    ExperimentConfig {
                        horizon,
                        trials,
                        seed,
                        schedulers: specs,
                        denominator: parse_denominator(&denominator)?,
                        arrival_mode: ArrivalMode::Distributed,
                    }
                }
            };
            let result = run_experiment(&instance, &config)?;
            print!("{}", report::roe_table(&result));
            if let Some(prefix) = out {
                let names: Vec<String> = config.schedulers.iter().map(|s| s.name()).collect();
                report::write_json(&result, &prefix.with_extension("json"))?;
                std::fs::write(
                    prefix.with_extension("csv"),
                    report::roe_trials_csv(&result, &names),
                )?;
                std::fs::write(prefix.with_extension("txt"), report::roe_table(&result))?;
            }
        }
        Command::AppendixB {
            n,
            tau_periods,
            trials,
            seed,
            out,
        } => {
            let sizes: Vec<usize> = n
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| CoreError::InvalidInput(format!("bad star size list: {e}")))?;
            let table = separation_experiment(&sizes, tau_periods, trials, seed)?;
            print!("{}", report::separation_table_text(&table));
            if let Some(prefix) = out {
                report::write_json(&table, &prefix.with_extension("json"))?;
                std::fs::write(prefix.with_extension("csv"), report::separation_csv(&table))?;
            }
        }
        Command::Selftest {
            source,
            tau,
            trials,
            seed,
            out,
        } => {
            let instance = source.load(seed)?;
            let report_value = poisson::statistical_selftest(
                &instance,
                tau,
                trials,
                seed,
                &SelfTestConfig::default(),
            )?;
            let mut text = serde_json::to_string_pretty(&report_value)?;
            text.push('\n');
            emit(text, &out)?;
        }
    }
    Ok(())
}

fn plan_dump(instance: &Instance, plan: &mla_core::plan::ClusterPlan) -> serde_json::Value {
    let clusters: Vec<serde_json::Value> = plan
        .clusters
        .iter()
        .map(|c| {
            let shares: serde_json::Map<String, serde_json::Value> = c
                .members
                .iter()
                .map(|&v| {
                    (
                        v.to_string(),
                        serde_json::json!(c.saturated_share(instance, v)),
                    )
                })
                .collect();
            serde_json::json!({
                "root": c.root,
                "members": c.members,
                "period": c.period,
                "exponent": c.exponent,
                "rounded_period": c.rounded_period,
                "weight": c.weight,
                "rate": c.rate,
                "saturated_shares": shares,
            })
        })
        .collect();
    serde_json::json!({ "clusters": clusters })
}

fn gen_dump(planner: &GenPlanner) -> serde_json::Value {
    let branches: Vec<serde_json::Value> = (0..planner.branch_count())
        .map(|b| {
            let partition = planner.branch_partition(b);
            let parts: Vec<serde_json::Value> = partition
                .parts
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    serde_json::json!({
                        "vertices": p.vertices,
                        "root": p.root,
                        "kind": p.kind,
                        "pi": p.pi,
                        "pi_prime": partition.pi_prime(i),
                        "rate": p.rate,
                        "is_root_part": i == partition.root_part,
                    })
                })
                .collect();
            let augmented = planner.branch_augmented(b).map(|aug| {
                serde_json::json!({
                    "instance": aug.instance.to_file(),
                    "pendant_of_part": aug.pendant_of_part,
                    "attach_of_part": aug.attach_of_part,
                })
            });
            let periods = planner
                .branch_plan(b)
                .map(|(pruned, plan)| plan_dump(pruned, plan));
            serde_json::json!({
                "parts": parts,
                "augmented": augmented,
                "periods": periods,
            })
        })
        .collect();
    serde_json::json!({ "branches": branches })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<CoreError>() {
                Some(CoreError::Capacity(_)) => ExitCode::from(3),
                Some(CoreError::InvalidInput(_))
                | Some(CoreError::InvalidSchedule(_))
                | Some(CoreError::Config(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
