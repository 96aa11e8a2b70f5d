//! Experiment configuration: a versioned TOML file resolved into runnable
//! pieces (objective, oracle, learner, epoch schedule).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use super::HarnessError;
use crate::conversion::{
    recommended_delta_second_order, run_o2nc, schedule_det_smooth, schedule_nonsmooth,
    schedule_second_order, DirectionalOracle, NoisyOracle, Oracle, RunConfig, RunRecord, SMode,
    SmoothedOracle,
};
use crate::hardinstance::{make_hard_instance, HardInstance, HardInstanceConfig};
use crate::learners::{
    careful_hints_default_step, ogd_default_step, percoord_default_steps, CarefulHintsLearner,
    OgdLearner, OmdLearner, OnlineLearner, PercoordLearner, ResetWrapper,
};
use crate::objective::{make_test_function, smoothed_objective, NoiseModel, Objective};

/// Schema identifier every config file must carry.
pub const CONFIG_SCHEMA: &str = "o2nc-config/v1";

/// Seed of the fixed Monte-Carlo draw set used by smoothed objectives, so
/// the smoothed value function is one deterministic function per experiment.
pub const SMOOTHING_DRAW_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// Catalogue key, or `"hard_instance"`.
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// `"none" | "gaussian" | "sphere" | "directional" | "smoothed"`.
    /// Hard instances always use their own zero-chain oracle.
    pub kind: String,
    pub sigma: Option<f64>,
    /// Smoothing radius (smoothed oracle only).
    pub p: Option<f64>,
    /// Draw count of the smoothed value estimator (default 64).
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    /// `"ogd" | "percoord" | "omd" | "careful_hints"`.
    pub kind: String,
    /// Step-size override; defaults follow the schedule tuning.
    pub eta: Option<f64>,
    /// Hint iteration count override (careful hints only).
    pub q: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// `"explicit" | "nonsmooth" | "det_smooth" | "second_order"`.
    pub kind: String,
    /// Epoch length (explicit schedule).
    pub t: Option<usize>,
    /// Offset radius override (explicit schedule; default `delta / T`).
    pub d_radius: Option<f64>,
    /// Gradient-bound override; default is the objective's Lipschitz
    /// constant.
    pub g_bound: Option<f64>,
    /// Value-gap override; default is `F(x0) - F*` from metadata.
    pub gap: Option<f64>,
    /// Optimistic regret constant of the det-smooth schedule (default 1).
    pub c_regret: Option<f64>,
}

/// One experiment: objective, oracle, learner, schedule, budget, trials.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    /// Gradient-evaluation budget `N`.
    pub n: usize,
    /// Stationarity radius `delta`; optional only for the second-order
    /// schedule, which can derive its recommended value.
    pub delta: Option<f64>,
    pub trial_seeds: Vec<u64>,
    /// Initial point; defaults to the objective's own default.
    pub x0: Option<Vec<f64>>,
    /// Where records and summaries are written; nothing is written when
    /// absent.
    pub output_dir: Option<PathBuf>,
    pub objective: ObjectiveSpec,
    pub oracle: OracleSpec,
    pub learner: LearnerSpec,
    pub schedule: ScheduleSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        if config.schema != CONFIG_SCHEMA {
            return Err(HarnessError::SchemaMismatch {
                expected: CONFIG_SCHEMA,
                got: config.schema,
            });
        }
        if config.trial_seeds.is_empty() {
            return Err(HarnessError::Invalid("trial_seeds must be nonempty".into()));
        }
        Ok(config)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self, HarnessError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerKind {
    Ogd,
    Percoord,
    Omd,
    CarefulHints,
}

enum PreparedOracle {
    Noisy(NoiseModel),
    Directional,
    Smoothed { noise: NoiseModel, p: f64 },
    Hard,
}

/// The epoch structure and tuning an experiment resolved to.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ResolvedSchedule {
    pub delta: f64,
    pub radius: f64,
    pub epoch_len: usize,
    pub epochs: usize,
    pub eta: f64,
    pub q: Option<usize>,
    pub g_bound: Option<f64>,
    pub gap: Option<f64>,
}

/// A validated, resolved experiment ready to run trials.
pub struct PreparedExperiment {
    /// The objective the conversion optimizes (the smoothed wrapper when the
    /// oracle is smoothed).
    pub objective: Arc<Objective>,
    /// The raw objective behind a smoothed oracle.
    base_objective: Option<Arc<Objective>>,
    pub hard: Option<Arc<HardInstance>>,
    oracle: PreparedOracle,
    pub learner_kind: LearnerKind,
    pub resolved: ResolvedSchedule,
    pub s_mode: SMode,
    pub n: usize,
    pub x0: Vec<f64>,
    pub trial_seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
}

fn param_u64(params: &BTreeMap<String, f64>, key: &str, default: u64) -> u64 {
    params.get(key).map(|v| *v as u64).unwrap_or(default)
}

/// Resolve a config: build the objective, check metadata availability,
/// resolve the schedule to concrete `(D, T, K)` plus step sizes.
pub fn prepare(config: &ExperimentConfig) -> Result<PreparedExperiment, HarnessError> {
    // objective
    let mut hard = None;
    let mut base_objective = None;
    let (objective, oracle) = match config.objective.kind.as_str() {
        "hard_instance" => {
            let params = &config.objective.params;
            let need = |key: &'static str| -> Result<f64, HarnessError> {
                params
                    .get(key)
                    .copied()
                    .ok_or(HarnessError::MissingField(key))
            };
            let instance = Arc::new(make_hard_instance(&HardInstanceConfig {
                gap: need("gap")?,
                smoothness: need("smoothness")?,
                eps: need("eps")?,
                sigma: need("sigma")?,
                seed: param_u64(params, "seed", 0),
                dim: params.get("dim").map(|v| *v as usize),
            })?);
            let objective = Arc::new(instance.objective());
            hard = Some(instance);
            (objective, PreparedOracle::Hard)
        }
        kind => {
            let inner = Arc::new(make_test_function(kind, &config.objective.params)?);
            let noise = |sigma: Option<f64>, model: &str| -> Result<NoiseModel, HarnessError> {
                let sigma = sigma.ok_or(HarnessError::MissingField("oracle.sigma"))?;
                Ok(match model {
                    "gaussian" => NoiseModel::Gaussian { sigma },
                    _ => NoiseModel::Sphere { sigma },
                })
            };
            match config.oracle.kind.as_str() {
                "none" => (inner, PreparedOracle::Noisy(NoiseModel::None)),
                "gaussian" => {
                    let model = noise(config.oracle.sigma, "gaussian")?;
                    (inner, PreparedOracle::Noisy(model))
                }
                "sphere" => {
                    let model = noise(config.oracle.sigma, "sphere")?;
                    (inner, PreparedOracle::Noisy(model))
                }
                "directional" => {
                    if !inner.supports_directional() {
                        return Err(HarnessError::Invalid(
                            "objective has no directional-derivative oracle".into(),
                        ));
                    }
                    (inner, PreparedOracle::Directional)
                }
                "smoothed" => {
                    let p = config
                        .oracle
                        .p
                        .ok_or(HarnessError::MissingField("oracle.p"))?;
                    let mc = config.oracle.mc_samples.unwrap_or(64);
                    let noise_model = match config.oracle.sigma {
                        Some(sigma) => NoiseModel::Gaussian { sigma },
                        None => NoiseModel::None,
                    };
                    let smoothed = Arc::new(smoothed_objective(
                        Arc::clone(&inner),
                        p,
                        mc,
                        SMOOTHING_DRAW_SEED,
                    )?);
                    base_objective = Some(inner);
                    (
                        smoothed,
                        PreparedOracle::Smoothed {
                            noise: noise_model,
                            p,
                        },
                    )
                }
                other => return Err(HarnessError::UnknownKind("oracle", other.to_string())),
            }
        }
    };

    let learner_kind = match config.learner.kind.as_str() {
        "ogd" => LearnerKind::Ogd,
        "percoord" => LearnerKind::Percoord,
        "omd" => LearnerKind::Omd,
        "careful_hints" => LearnerKind::CarefulHints,
        other => return Err(HarnessError::UnknownKind("learner", other.to_string())),
    };

    let x0 = match &config.x0 {
        Some(x0) => {
            if x0.len() != objective.dim() {
                return Err(HarnessError::Invalid(format!(
                    "x0 has dimension {}, objective has {}",
                    x0.len(),
                    objective.dim()
                )));
            }
            x0.clone()
        }
        None => objective.x0_default(),
    };

    let meta = objective.metadata().clone();
    // resolved lazily: only schedules and default tunings need them
    let g_bound_opt = config.schedule.g_bound.or(meta.lipschitz);
    let need_g = || -> Result<f64, HarnessError> {
        g_bound_opt.ok_or_else(|| {
            HarnessError::Invalid(
                "no gradient bound: objective lacks a Lipschitz constant and \
                 schedule.g_bound is absent"
                    .into(),
            )
        })
    };
    let gap_opt = match config.schedule.gap {
        Some(gap) => Some(gap),
        None => meta.infimum.map(|inf| objective.value(&x0) - inf),
    };
    let need_gap = || -> Result<f64, HarnessError> {
        gap_opt.ok_or_else(|| {
            HarnessError::Invalid(
                "no value gap: objective lacks a known infimum and schedule.gap is absent".into(),
            )
        })
    };

    // delta, possibly derived
    let delta = match (config.delta, config.schedule.kind.as_str()) {
        (Some(delta), _) => delta,
        (None, "second_order") => {
            let h = meta
                .smoothness
                .ok_or(HarnessError::MissingField("objective smoothness"))?;
            let j = meta
                .second_order
                .ok_or(HarnessError::MissingField("objective second_order"))?;
            recommended_delta_second_order(h, j, need_gap()?, config.n)?
        }
        (None, _) => return Err(HarnessError::MissingField("delta")),
    };

    // epoch structure
    let (radius, epoch_len, epochs, schedule_eta, schedule_q) = match config.schedule.kind.as_str()
    {
        "explicit" => {
            let t = config
                .schedule
                .t
                .ok_or(HarnessError::MissingField("schedule.t"))?;
            if t == 0 || t > config.n {
                return Err(HarnessError::Invalid(format!(
                    "explicit epoch length {t} incompatible with budget {}",
                    config.n
                )));
            }
            let radius = config.schedule.d_radius.unwrap_or(delta / t as f64);
            (radius, t, config.n / t, None, None)
        }
        "nonsmooth" => {
            let s = schedule_nonsmooth(need_g()?, need_gap()?, config.n, delta)?;
            (s.radius, s.epoch_len, s.epochs, None, None)
        }
        "det_smooth" => {
            let h = meta
                .smoothness
                .ok_or(HarnessError::MissingField("objective smoothness"))?;
            let c = config.schedule.c_regret.unwrap_or(1.0);
            let s = schedule_det_smooth(c, h, need_gap()?, config.n, delta)?;
            (s.radius, s.epoch_len, s.epochs, None, None)
        }
        "second_order" => {
            let h = meta
                .smoothness
                .ok_or(HarnessError::MissingField("objective smoothness"))?;
            let j = meta
                .second_order
                .ok_or(HarnessError::MissingField("objective second_order"))?;
            let s = schedule_second_order(h, j, need_gap()?, config.n, delta, need_g()?)?;
            (s.radius, s.epoch_len, s.epochs, Some(s.eta), Some(s.q))
        }
        other => return Err(HarnessError::UnknownKind("schedule", other.to_string())),
    };

    // step size and hint count
    let eta = match (config.learner.eta, learner_kind) {
        (Some(eta), _) => eta,
        (None, LearnerKind::CarefulHints) => match schedule_eta {
            Some(eta) => eta,
            None => careful_hints_default_step(
                meta.smoothness
                    .ok_or(HarnessError::MissingField("objective smoothness"))?,
            ),
        },
        (None, _) => ogd_default_step(radius, need_g()?, epoch_len),
    };
    let q = match (config.learner.q, learner_kind) {
        (q, LearnerKind::CarefulHints) => {
            let q = match q.or(schedule_q) {
                Some(q) => q,
                None => {
                    let h = meta
                        .smoothness
                        .ok_or(HarnessError::MissingField("objective smoothness"))?;
                    let raw = (config.n as f64 * need_g()? / (h * radius)).sqrt().log2();
                    (raw - 1e-9 * raw.abs().max(1.0)).ceil().max(0.0) as usize
                }
            };
            Some(q)
        }
        _ => None,
    };

    let s_mode = match learner_kind {
        LearnerKind::CarefulHints => SMode::Midpoint,
        _ => SMode::Uniform,
    };

    Ok(PreparedExperiment {
        objective,
        base_objective,
        hard,
        oracle,
        learner_kind,
        resolved: ResolvedSchedule {
            delta,
            radius,
            epoch_len,
            epochs,
            eta,
            q,
            g_bound: g_bound_opt,
            gap: gap_opt,
        },
        s_mode,
        n: config.n,
        x0,
        trial_seeds: config.trial_seeds.clone(),
        output_dir: config.output_dir.clone(),
    })
}

impl PreparedExperiment {
    fn build_learner(&self) -> Result<Box<dyn OnlineLearner>, HarnessError> {
        let r = &self.resolved;
        let dim = self.objective.dim();
        let learner: Box<dyn OnlineLearner> = match self.learner_kind {
            LearnerKind::Ogd => Box::new(ResetWrapper::new(
                OgdLearner::new(dim, r.radius, r.eta)?,
                r.epoch_len,
            )),
            LearnerKind::Percoord => {
                // per-coordinate bounds default to the isotropic split
                let g = r.g_bound.ok_or_else(|| {
                    HarnessError::Invalid("per-coordinate learner needs a gradient bound".into())
                })?;
                let per = g / (dim as f64).sqrt();
                let steps = percoord_default_steps(r.radius, &vec![per; dim], r.epoch_len);
                Box::new(ResetWrapper::new(
                    PercoordLearner::new(r.radius, steps)?,
                    r.epoch_len,
                ))
            }
            LearnerKind::Omd => Box::new(ResetWrapper::new(
                OmdLearner::new(dim, r.radius, r.eta)?,
                r.epoch_len,
            )),
            LearnerKind::CarefulHints => Box::new(ResetWrapper::new(
                CarefulHintsLearner::new(
                    Arc::clone(&self.objective),
                    r.radius,
                    r.eta,
                    r.q.expect("q resolved for careful hints"),
                )?,
                r.epoch_len,
            )),
        };
        Ok(learner)
    }

    /// Run one seeded trial.
    pub fn run_trial(&self, seed: u64) -> Result<RunRecord, HarnessError> {
        let run_config = RunConfig {
            n_budget: self.n,
            epoch_len: self.resolved.epoch_len,
            radius: self.resolved.radius,
            s_mode: self.s_mode,
            base_seed: seed,
        };
        let mut learner = self.build_learner()?;
        let record = match &self.oracle {
            PreparedOracle::Noisy(noise) => {
                let oracle = NoisyOracle {
                    obj: &self.objective,
                    noise: noise.clone(),
                };
                run_o2nc(
                    &self.objective,
                    &oracle,
                    learner.as_mut(),
                    &run_config,
                    &self.x0,
                )?
            }
            PreparedOracle::Directional => {
                let oracle = DirectionalOracle {
                    obj: &self.objective,
                };
                run_o2nc(
                    &self.objective,
                    &oracle,
                    learner.as_mut(),
                    &run_config,
                    &self.x0,
                )?
            }
            PreparedOracle::Smoothed { noise, p } => {
                let base = self
                    .base_objective
                    .as_ref()
                    .expect("smoothed oracle keeps its base objective");
                let oracle = SmoothedOracle {
                    obj: base,
                    noise: noise.clone(),
                    p: *p,
                };
                run_o2nc(
                    &self.objective,
                    &oracle,
                    learner.as_mut(),
                    &run_config,
                    &self.x0,
                )?
            }
            PreparedOracle::Hard => {
                let instance = self.hard.as_ref().expect("hard oracle keeps its instance");
                run_o2nc(
                    &self.objective,
                    instance.as_ref() as &dyn Oracle,
                    learner.as_mut(),
                    &run_config,
                    &self.x0,
                )?
            }
        };
        Ok(record)
    }
}
