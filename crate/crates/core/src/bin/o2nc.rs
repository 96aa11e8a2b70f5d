//! Experiment runner CLI.
//!
//! Subcommands: `run` a configured experiment, `sweep` a parameter and fit
//! the rate exponent, `verify-identity` for the exact decrease identity,
//! `verify-regret` for per-sequence regret bounds, and `hard-instance` for
//! zero-chain stress runs. Setting `O2NC_BASE_SEED` remixes every configured
//! trial seed, overriding the files without editing them.

use std::error::Error;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use o2nc::hardinstance::{
    make_hard_instance, make_nonsmooth_hard_instance, stress_run, HardInstanceConfig,
    StressOptimizer,
};
use o2nc::harness::{
    self, regret_battery, run_experiment, sweep, verify_identity, verify_regret, ExperimentConfig,
    RegretLearner, SweepParam,
};
use o2nc::rng::stream_seed;

const SEED_ENV: &str = "O2NC_BASE_SEED";

#[derive(Parser)]
#[command(
    name = "o2nc",
    version,
    about = "Online-to-non-convex conversion experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment across its trial seeds.
    Run { config: PathBuf },
    /// Run the experiment per parameter value and fit a log-log rate.
    Sweep {
        config: PathBuf,
        /// Parameter to vary: N or delta.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Check the exact decrease identity on the configured runs.
    VerifyIdentity {
        config: PathBuf,
        /// Quadrature nodes for the segment-averaged gradient.
        #[arg(long, default_value_t = 16)]
        nodes: usize,
        /// Maximum relative error accepted.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Check per-sequence regret bounds over a battery of sequences.
    VerifyRegret { battery: PathBuf },
    /// Build a hard instance and stress it with an optimizer.
    HardInstance {
        descriptor: PathBuf,
        /// Optimizer: sgd or momentum.
        #[arg(long, default_value = "sgd")]
        stress: String,
        #[arg(long, default_value_t = 10_000)]
        queries: usize,
        /// Optimizer step size (default 1 / smoothness).
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-query trace as a run-record CSV.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

/// Battery description for `verify-regret`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryConfig {
    schema: String,
    dim: usize,
    g_bound: f64,
    t_max: usize,
    n_random: usize,
    #[serde(default)]
    seed: u64,
    learner: BatteryLearner,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryLearner {
    kind: String,
    radius: f64,
    eta: Option<f64>,
}

/// Instance description for `hard-instance`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardDescriptor {
    schema: String,
    /// "smooth" (gap/smoothness/eps/sigma) or "nonsmooth"
    /// (delta/eps/gap/g_bound).
    kind: String,
    gap: f64,
    eps: f64,
    #[serde(default)]
    smoothness: Option<f64>,
    #[serde(default)]
    sigma: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    g_bound: Option<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    dim: Option<usize>,
}

fn seed_override(seeds: &[u64]) -> Vec<u64> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => {
            let base: u64 = raw.parse().unwrap_or_else(|_| {
                eprintln!("warning: {SEED_ENV}={raw} is not an integer; ignoring");
                0
            });
            seeds
                .iter()
                .map(|s| stream_seed(base, "trial-override", *s))
                .collect()
        }
        Err(_) => seeds.to_vec(),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Box<dyn Error>> {
    let mut config = ExperimentConfig::from_toml_file(path)?;
    config.trial_seeds = seed_override(&config.trial_seeds);
    Ok(config)
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let (summary, _) = run_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let config = load_config(&config)?;
            let param = match param.as_str() {
                "N" | "n" => SweepParam::N,
                "delta" => SweepParam::Delta,
                other => return Err(format!("unknown sweep parameter `{other}`").into()),
            };
            let result = sweep(&config, param, &values)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            match &result.fit {
                Some(fit) => println!(
                    "fitted exponent {:.4} (r2 = {:.4}) over {} values of {}",
                    fit.slope,
                    fit.r2,
                    result.values.len(),
                    result.param
                ),
                None => println!("no fit: {}", result.fit_note),
            }
        }
        Command::VerifyIdentity {
            config,
            nodes,
            tolerance,
        } => {
            let config = load_config(&config)?;
            let prepared = harness::prepare(&config)?;
            let mut worst: f64 = 0.0;
            for seed in &prepared.trial_seeds {
                let record = prepared.run_trial(*seed)?;
                let err = verify_identity(&prepared.objective, &record, nodes);
                println!("trial {seed}: relative identity error {err:.3e}");
                worst = worst.max(err);
            }
            println!("worst relative error {worst:.3e} (tolerance {tolerance:.1e})");
            if worst > tolerance {
                return Err("identity verification failed".into());
            }
        }
        Command::VerifyRegret { battery } => {
            let text = std::fs::read_to_string(&battery)?;
            let spec: BatteryConfig = toml::from_str(&text)?;
            if spec.schema != "o2nc-battery/v1" {
                return Err(format!("unknown battery schema `{}`", spec.schema).into());
            }
            let cases =
                regret_battery(spec.dim, spec.g_bound, spec.t_max, spec.n_random, spec.seed);
            let learner = match spec.learner.kind.as_str() {
                "ogd" => RegretLearner::Ogd {
                    radius: spec.learner.radius,
                    eta: spec.learner.eta,
                },
                "omd" => RegretLearner::Omd {
                    radius: spec.learner.radius,
                    eta: spec
                        .learner
                        .eta
                        .ok_or("omd battery requires an explicit eta")?,
                },
                other => return Err(format!("unknown battery learner `{other}`").into()),
            };
            let verdict = verify_regret(learner, &cases, spec.g_bound, spec.seed)?;
            println!(
                "{} cases, worst slack {:.6e} ({}), verdict {}",
                verdict.cases,
                verdict.worst_slack,
                verdict.worst_case,
                if verdict.pass { "PASS" } else { "FAIL" }
            );
            if !verdict.pass {
                return Err("regret verification failed".into());
            }
        }
        Command::HardInstance {
            descriptor,
            stress,
            queries,
            step,
            seed,
            records,
        } => {
            let text = std::fs::read_to_string(&descriptor)?;
            let spec: HardDescriptor = toml::from_str(&text)?;
            if spec.schema != "o2nc-hard/v1" {
                return Err(format!("unknown hard-instance schema `{}`", spec.schema).into());
            }
            let instance = match spec.kind.as_str() {
                "smooth" => make_hard_instance(&HardInstanceConfig {
                    gap: spec.gap,
                    smoothness: spec.smoothness.ok_or("smooth kind requires smoothness")?,
                    eps: spec.eps,
                    sigma: spec.sigma.ok_or("smooth kind requires sigma")?,
                    seed: spec.seed,
                    dim: spec.dim,
                })?,
                "nonsmooth" => make_nonsmooth_hard_instance(
                    spec.delta.ok_or("nonsmooth kind requires delta")?,
                    spec.eps,
                    spec.gap,
                    spec.g_bound.ok_or("nonsmooth kind requires g_bound")?,
                    spec.seed,
                    spec.dim,
                )?,
                other => return Err(format!("unknown hard-instance kind `{other}`").into()),
            };
            println!(
                "instance: {}",
                serde_json::to_string(&instance.descriptor())?
            );
            let step = step.unwrap_or(1.0 / o2nc::hardinstance::COMPOSITE_SMOOTHNESS);
            let optimizer = match stress.as_str() {
                "sgd" => StressOptimizer::Sgd { step },
                "momentum" => StressOptimizer::ClippedMomentum {
                    step,
                    radius: 10.0 * step,
                },
                other => return Err(format!("unknown stress optimizer `{other}`").into()),
            };
            let report = stress_run(&instance, optimizer, queries, seed);
            if let Some(path) = records {
                let mut buf = Vec::new();
                report.write_rounds_csv(&mut buf)?;
                std::fs::write(&path, buf)?;
                println!("trace written to {}", path.display());
            }
            println!(
                "queries {} | zero-chain asserted on every call | pinned iterates {} \
                 (violations {}) | min pinned gradient {:.4} vs threshold {:.4} | \
                 final chain progress {}/{}",
                report.queries,
                report.pinning_checked,
                report.pinning_violations,
                report.min_pinned_grad,
                report.pin_threshold,
                report.final_progress,
                instance.t_chain()
            );
            if report.pinning_violations > 0 {
                return Err("pinning verification failed".into());
            }
        }
    }
    Ok(())
}
