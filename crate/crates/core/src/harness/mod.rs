//! Experiment harness: configs, runs, sweeps, rate fitting, and the
//! identity/regret verifications behind the CLI.

pub mod config;
pub mod powerlaw;
pub mod quadrature;
pub mod runner;
pub mod verify;

pub use config::{prepare, ExperimentConfig, PreparedExperiment, CONFIG_SCHEMA};
pub use powerlaw::{fit_power_law, FitError, PowerLawFit};
pub use quadrature::gauss_legendre_unit;
pub use runner::{run_experiment, sweep, ExperimentSummary, SweepParam, SweepResult};
pub use verify::{
    regret_battery, segment_gradient_mc, verify_identity, verify_regret, RegretCase, RegretLearner,
    RegretVerdict,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config schema mismatch: expected `{expected}`, got `{got}`")]
    SchemaMismatch { expected: &'static str, got: String },
    #[error("unknown {0} kind `{1}`")]
    UnknownKind(&'static str, String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Objective(#[from] crate::objective::ObjectiveError),
    #[error(transparent)]
    Learner(#[from] crate::learners::LearnerError),
    #[error(transparent)]
    Conversion(#[from] crate::conversion::ConversionError),
    #[error(transparent)]
    HardInstance(#[from] crate::hardinstance::HardInstanceError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Verify(#[from] verify::VerifyError),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
