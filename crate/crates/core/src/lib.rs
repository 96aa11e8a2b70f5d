//! Online-to-non-convex conversion: an online learner proposes iterate
//! offsets, a driver turns them into a trajectory queried at randomized
//! points along each step, and epoch averages of the query points certify
//! approximate stationarity for non-smooth non-convex objectives.
//!
//! The crate is organized around that pipeline:
//!
//! - [`objective`]: test functions with analytic gradients and metadata,
//!   stochastic/directional/smoothed gradient oracles.
//! - [`learners`]: projected OGD, per-coordinate OGD, optimistic mirror
//!   descent, the careful-hints learner, epoch resets, regret accounting.
//! - [`conversion`]: the offset/iterate driver, parameter schedules, and
//!   run records.
//! - [`stationarity`]: witness-set evaluation of `(delta, eps)`-stationarity
//!   and the smooth-case transfer bounds.
//! - [`hardinstance`]: the zero-chain oracle-complexity construction.
//! - [`harness`]: experiment configs, sweeps, rate fitting, identity and
//!   regret verification, CSV/JSON emission, and the CLI entry points.

pub mod conversion;
pub mod hardinstance;
pub mod harness;
pub mod learners;
pub mod objective;
pub mod rng;
pub mod stationarity;
pub mod vecmath;
