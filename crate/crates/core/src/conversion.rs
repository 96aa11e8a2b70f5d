//! The online-to-non-convex driver.
//!
//! Each round the learner emits an offset `delta_n`, the iterate moves to
//! `x_n = x_(n-1) + delta_n`, the oracle is queried at a point
//! `w_n = x_(n-1) + s_n delta_n` along the step, and the observed gradient
//! is fed back to the learner as that round's linear loss. Epochs of `T`
//! rounds produce the averaged candidates `wbar^k` whose gradient averages
//! certify stationarity.

use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

use crate::learners::{LearnerError, OnlineLearner};
use crate::objective::{
    directional_sample, smoothed_gradient, stochastic_gradient, NoiseModel, Objective,
    ObjectiveError, OracleSample,
};
use crate::rng::{stream_rng, stream_seed};
use crate::vecmath::{add, axpy, mean, norm, sub};

#[derive(Debug, Error)]
pub enum ConversionError {
    #[error("parameter `{0}` must be positive")]
    NonPositiveInput(&'static str),
    #[error("budget {n} cannot accommodate an epoch of length {t}")]
    BudgetTooSmall { n: usize, t: usize },
    #[error("learner ball radius {learner} differs from configured radius {config}")]
    RadiusMismatch { learner: f64, config: f64 },
    #[error("second-order scale undefined for J = 0; supply delta directly")]
    ZeroSecondOrder,
    #[error("record has no epochs")]
    EmptyRecord,
    #[error("epoch index {k} out of range 1..={epochs}")]
    EpochOutOfRange { k: usize, epochs: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// How the query point is placed along each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SMode {
    /// `s_n` drawn uniformly from `[0, 1]` (seeded per round).
    Uniform,
    /// `s_n = 1/2`, the deterministic placement used with careful hints.
    Midpoint,
}

/// First-order oracle interface the driver queries once per round.
pub trait Oracle: Sync {
    fn dim(&self) -> usize;
    /// One seeded query at `w`; `delta` is the round's offset, consumed only
    /// by direction-aware oracles.
    fn query(&self, w: &[f64], delta: &[f64], seed: u64) -> OracleSample;
}

/// Exact or noisy gradient oracle for an objective.
pub struct NoisyOracle<'a> {
    pub obj: &'a Objective,
    pub noise: NoiseModel,
}

impl Oracle for NoisyOracle<'_> {
    fn dim(&self) -> usize {
        self.obj.dim()
    }

    fn query(&self, w: &[f64], _delta: &[f64], seed: u64) -> OracleSample {
        stochastic_gradient(self.obj, &self.noise, w, seed)
    }
}

/// Directional-derivative oracle: queried along the round's offset. With a
/// zero offset the directional derivative carries no constraint, so the
/// documented kink-rule subgradient is returned.
pub struct DirectionalOracle<'a> {
    pub obj: &'a Objective,
}

impl Oracle for DirectionalOracle<'_> {
    fn dim(&self) -> usize {
        self.obj.dim()
    }

    fn query(&self, w: &[f64], delta: &[f64], seed: u64) -> OracleSample {
        if norm(delta) == 0.0 {
            OracleSample {
                query_point: w.to_vec(),
                direction: Some(delta.to_vec()),
                seed,
                g: self.obj.grad(w),
            }
        } else {
            directional_sample(self.obj, w, delta, seed)
                .expect("nonzero direction on a catalogue objective")
        }
    }
}

/// Oracle for the randomized-smoothed objective: perturbs the query point
/// by a fresh ball draw, then queries the base oracle there.
pub struct SmoothedOracle<'a> {
    pub obj: &'a Objective,
    pub noise: NoiseModel,
    pub p: f64,
}

impl Oracle for SmoothedOracle<'_> {
    fn dim(&self) -> usize {
        self.obj.dim()
    }

    fn query(&self, w: &[f64], _delta: &[f64], seed: u64) -> OracleSample {
        smoothed_gradient(self.obj, &self.noise, self.p, w, seed)
    }
}

/// One run's shape: budget, epoch length, offset radius, query placement.
///
/// `K = floor(N / T)` epochs of `T` rounds run; the leftover `N - KT`
/// budget is never spent, because epoch averaging and the comparator
/// construction assume full windows.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_budget: usize,
    pub epoch_len: usize,
    pub radius: f64,
    pub s_mode: SMode,
    pub base_seed: u64,
}

impl RunConfig {
    /// `K = floor(N / T)`.
    pub fn epochs(&self) -> usize {
        self.n_budget / self.epoch_len
    }

    /// `M = K T <= N`.
    pub fn rounds(&self) -> usize {
        self.epochs() * self.epoch_len
    }
}

/// Full trajectory of one conversion run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub epoch_len: usize,
    /// Iterates `x_0 .. x_M`.
    pub xs: Vec<Vec<f64>>,
    /// Query points `w_1 .. w_M`.
    pub ws: Vec<Vec<f64>>,
    /// Oracle outputs `g_1 .. g_M`.
    pub gs: Vec<Vec<f64>>,
    /// Offsets `delta_1 .. delta_M`.
    pub deltas: Vec<Vec<f64>>,
    /// The `s_n` draws.
    pub svals: Vec<f64>,
    /// Epoch averages `wbar^1 .. wbar^K`.
    pub epoch_averages: Vec<Vec<f64>>,
    /// `|(1/T) sum_t grad F(w^k_t)|` per epoch (exact-gradient diagnostic).
    pub per_epoch_grad_avg_norm: Vec<f64>,
    /// `F(x_0) .. F(x_M)`.
    pub fvals: Vec<f64>,
    /// Base oracle queries: exactly `M`.
    pub oracle_calls: usize,
    /// Gradient evaluations spent by the learner on hints
    /// (`M (Q + 1)` in careful-hints mode, 0 otherwise).
    pub hint_grad_evals: usize,
    /// Gradient evaluations spent on the per-epoch diagnostic.
    pub diagnostic_grad_evals: usize,
}

impl RunRecord {
    pub fn rounds(&self) -> usize {
        self.ws.len()
    }

    pub fn epochs(&self) -> usize {
        self.epoch_averages.len()
    }

    /// Query points of epoch `k` (1-based).
    pub fn epoch_window(&self, k: usize) -> Result<&[Vec<f64>], ConversionError> {
        if k == 0 || k > self.epochs() {
            return Err(ConversionError::EpochOutOfRange {
                k,
                epochs: self.epochs(),
            });
        }
        let lo = (k - 1) * self.epoch_len;
        Ok(&self.ws[lo..lo + self.epoch_len])
    }

    /// `max_(k,t) |wbar^k - w^k_t|` in the L2 norm.
    pub fn max_epoch_spread_l2(&self) -> f64 {
        self.epoch_spread(norm)
    }

    /// `max_(k,t) |wbar^k - w^k_t|` in the L-infinity norm.
    pub fn max_epoch_spread_linf(&self) -> f64 {
        self.epoch_spread(crate::vecmath::norm_linf)
    }

    fn epoch_spread(&self, norm_fn: fn(&[f64]) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, wbar) in self.epoch_averages.iter().enumerate() {
            for t in 0..self.epoch_len {
                let w = &self.ws[k * self.epoch_len + t];
                worst = worst.max(norm_fn(&sub(wbar, w)));
            }
        }
        worst
    }

    /// Mean over epochs of the per-epoch gradient-average norm: the scalar
    /// convergence metric reported by experiments.
    pub fn mean_epoch_metric(&self) -> f64 {
        let k = self.per_epoch_grad_avg_norm.len();
        self.per_epoch_grad_avg_norm.iter().sum::<f64>() / k as f64
    }

    /// Consistency checks on the bookkeeping identities:
    /// `x_n = x_(n-1) + delta_n`, `w_n = x_(n-1) + s_n delta_n`,
    /// `wbar^k = (1/T) sum_t w^k_t`.
    pub fn check_identities(&self, tol: f64) -> bool {
        let m = self.rounds();
        for n in 0..m {
            let xe = add(&self.xs[n], &self.deltas[n]);
            if norm(&sub(&xe, &self.xs[n + 1])) > tol {
                return false;
            }
            let we = axpy(&self.xs[n], self.svals[n], &self.deltas[n]);
            if norm(&sub(&we, &self.ws[n])) > tol {
                return false;
            }
        }
        for (k, wbar) in self.epoch_averages.iter().enumerate() {
            let window = &self.ws[k * self.epoch_len..(k + 1) * self.epoch_len];
            if norm(&sub(&mean(window), wbar)) > tol {
                return false;
            }
        }
        true
    }

    /// One row per round: `n, k, t, x_norm, f_x, g_norm, delta_norm`.
    pub fn write_rounds_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "n,k,t,x_norm,f_x,g_norm,delta_norm")?;
        for n in 1..=self.rounds() {
            let k = (n - 1) / self.epoch_len + 1;
            let t = (n - 1) % self.epoch_len + 1;
            writeln!(
                out,
                "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                n,
                k,
                t,
                norm(&self.xs[n]),
                self.fvals[n],
                norm(&self.gs[n - 1]),
                norm(&self.deltas[n - 1]),
            )?;
        }
        Ok(())
    }

    /// One row per epoch: `k, wbar_norm, grad_avg_norm`.
    pub fn write_epochs_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "k,wbar_norm,grad_avg_norm")?;
        for (k, (wbar, metric)) in self
            .epoch_averages
            .iter()
            .zip(&self.per_epoch_grad_avg_norm)
            .enumerate()
        {
            writeln!(out, "{},{:.17e},{:.17e}", k + 1, norm(wbar), metric)?;
        }
        Ok(())
    }
}

/// Run the conversion: `M = KT` rounds of offset, iterate, query, feedback,
/// then epoch averaging. The learner must be fresh and its ball radius must
/// match the configured offset radius.
pub fn run_o2nc(
    obj: &Objective,
    oracle: &dyn Oracle,
    learner: &mut dyn OnlineLearner,
    config: &RunConfig,
    x0: &[f64],
) -> Result<RunRecord, ConversionError> {
    if config.epoch_len == 0 {
        return Err(ConversionError::NonPositiveInput("epoch_len"));
    }
    if config.n_budget < config.epoch_len {
        return Err(ConversionError::BudgetTooSmall {
            n: config.n_budget,
            t: config.epoch_len,
        });
    }
    let (_, learner_radius) = learner.ball();
    let gap = (learner_radius - config.radius).abs();
    if gap > 1e-12 && gap > 1e-9 * config.radius.abs().max(1e-300) {
        return Err(ConversionError::RadiusMismatch {
            learner: learner_radius,
            config: config.radius,
        });
    }
    let m = config.rounds();
    let t = config.epoch_len;
    let k = config.epochs();

    let mut xs = Vec::with_capacity(m + 1);
    let mut ws = Vec::with_capacity(m);
    let mut gs = Vec::with_capacity(m);
    let mut deltas = Vec::with_capacity(m);
    let mut svals = Vec::with_capacity(m);
    let mut fvals = Vec::with_capacity(m + 1);
    xs.push(x0.to_vec());
    fvals.push(obj.value(x0));

    for n in 1..=m {
        let x_prev = xs[n - 1].clone();
        let delta = learner.next_offset(&x_prev)?;
        let x_n = add(&x_prev, &delta);
        let s = match config.s_mode {
            SMode::Uniform => stream_rng(config.base_seed, "s-draw", n as u64).random::<f64>(),
            SMode::Midpoint => 0.5,
        };
        let w = axpy(&x_prev, s, &delta);
        let sample = oracle.query(
            &w,
            &delta,
            stream_seed(config.base_seed, "oracle", n as u64),
        );
        learner.receive_gradient(&sample.g)?;
        fvals.push(obj.value(&x_n));
        xs.push(x_n);
        ws.push(w);
        gs.push(sample.g);
        deltas.push(delta);
        svals.push(s);
    }

    let hint_grad_evals = learner.hint_grad_evals_per_round() * m;

    let mut epoch_averages = Vec::with_capacity(k);
    let mut per_epoch_grad_avg_norm = Vec::with_capacity(k);
    for kk in 0..k {
        let window = &ws[kk * t..(kk + 1) * t];
        epoch_averages.push(mean(window));
        let grads: Vec<Vec<f64>> = window.iter().map(|w| obj.grad(w)).collect();
        per_epoch_grad_avg_norm.push(norm(&mean(&grads)));
    }
    // one exact-gradient evaluation per round, by construction of the loop
    // above (counted analytically: trials may share the objective across
    // threads, so a counter diff would race)
    let diagnostic_grad_evals = m;

    Ok(RunRecord {
        epoch_len: t,
        xs,
        ws,
        gs,
        deltas,
        svals,
        epoch_averages,
        per_epoch_grad_avg_norm,
        fvals,
        oracle_calls: m,
        hint_grad_evals,
        diagnostic_grad_evals,
    })
}

/// Select the output point: a uniform choice among the epoch averages,
/// deterministic in the seed.
pub fn select_output(record: &RunRecord, seed: u64) -> Result<Vec<f64>, ConversionError> {
    let k = record.epochs();
    if k == 0 {
        return Err(ConversionError::EmptyRecord);
    }
    let idx = stream_rng(seed, "select-output", 0).random_range(0..k);
    Ok(record.epoch_averages[idx].clone())
}

/// Resolved epoch structure shared by the schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// Offset radius `D = delta / T`.
    pub radius: f64,
    /// Epoch length `T`.
    pub epoch_len: usize,
    /// Epoch count `K = floor(N / T)`.
    pub epochs: usize,
}

/// Schedule with the hint-iteration parameters of the second-order setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderSchedule {
    pub radius: f64,
    pub epoch_len: usize,
    pub epochs: usize,
    /// Hint step size `eta = 1 / (2H)`.
    pub eta: f64,
    /// Hint iteration count `Q = ceil(log2 sqrt(N G / (H D)))`.
    pub q: usize,
}

/// Ceiling with a relative guard against floating-point error in the power
/// computation, clamped to at least 1.
fn guarded_ceil(x: f64) -> usize {
    ((x - 1e-9 * x.abs().max(1.0)).ceil()).max(1.0) as usize
}

fn check_positive(value: f64, name: &'static str) -> Result<(), ConversionError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConversionError::NonPositiveInput(name))
    }
}

/// Tuning for the non-smooth stochastic setting:
/// `T = min(ceil((G N delta / gap)^(2/3)), floor(N/2))`, `K = floor(N/T)`,
/// `D = delta / T`.
pub fn schedule_nonsmooth(
    g_bound: f64,
    gap: f64,
    n_budget: usize,
    delta: f64,
) -> Result<Schedule, ConversionError> {
    check_positive(g_bound, "g_bound")?;
    check_positive(gap, "gap")?;
    check_positive(delta, "delta")?;
    if n_budget == 0 {
        return Err(ConversionError::NonPositiveInput("n_budget"));
    }
    let n = n_budget as f64;
    let uncapped = guarded_ceil((g_bound * n * delta / gap).powf(2.0 / 3.0));
    let epoch_len = uncapped.min((n_budget / 2).max(1));
    Ok(Schedule {
        radius: delta / epoch_len as f64,
        epoch_len,
        epochs: n_budget / epoch_len,
    })
}

/// Tuning for the deterministic smooth setting with an optimistic learner of
/// regret constant `C`:
/// `T = min(ceil((C delta^2 sqrt(H) N)^(2/5) / gap^(2/5)), floor(N/2))`.
pub fn schedule_det_smooth(
    c_regret: f64,
    smoothness: f64,
    gap: f64,
    n_budget: usize,
    delta: f64,
) -> Result<Schedule, ConversionError> {
    check_positive(c_regret, "c_regret")?;
    check_positive(smoothness, "smoothness")?;
    check_positive(gap, "gap")?;
    check_positive(delta, "delta")?;
    if n_budget == 0 {
        return Err(ConversionError::NonPositiveInput("n_budget"));
    }
    let n = n_budget as f64;
    let uncapped =
        guarded_ceil((c_regret * delta * delta * smoothness.sqrt() * n / gap).powf(2.0 / 5.0));
    let epoch_len = uncapped.min((n_budget / 2).max(1));
    Ok(Schedule {
        radius: delta / epoch_len as f64,
        epoch_len,
        epochs: n_budget / epoch_len,
    })
}

/// Tuning for the deterministic second-order-smooth setting:
/// `T = min(ceil((delta^2 (H + J delta) N)^(1/3) / gap^(1/3)), floor(N/2))`,
/// `D = delta/T`, `eta = 1/(2H)`, `Q = ceil(log2 sqrt(N G / (H D)))`.
pub fn schedule_second_order(
    smoothness: f64,
    second_order: f64,
    gap: f64,
    n_budget: usize,
    delta: f64,
    g_bound: f64,
) -> Result<SecondOrderSchedule, ConversionError> {
    check_positive(smoothness, "smoothness")?;
    if !(second_order >= 0.0 && second_order.is_finite()) {
        return Err(ConversionError::NonPositiveInput("second_order"));
    }
    check_positive(gap, "gap")?;
    check_positive(delta, "delta")?;
    check_positive(g_bound, "g_bound")?;
    if n_budget == 0 {
        return Err(ConversionError::NonPositiveInput("n_budget"));
    }
    let n = n_budget as f64;
    let uncapped = guarded_ceil(
        (delta * delta * (smoothness + second_order * delta) * n / gap).powf(1.0 / 3.0),
    );
    let epoch_len = uncapped.min((n_budget / 2).max(1));
    let radius = delta / epoch_len as f64;
    // Q may legitimately resolve to zero (hint = gradient at the previous
    // iterate); only the epoch length is clamped to at least 1
    let raw_q = (n * g_bound / (smoothness * radius)).sqrt().log2();
    let q = ((raw_q - 1e-9 * raw_q.abs().max(1.0)).ceil()).max(0.0) as usize;
    Ok(SecondOrderSchedule {
        radius,
        epoch_len,
        epochs: n_budget / epoch_len,
        eta: 1.0 / (2.0 * smoothness),
        q,
    })
}

/// The tuned radius for the second-order setting:
/// `delta = H^(1/7) gap^(2/7) / (J^(3/7) N^(2/7))`. Undefined at `J = 0`.
pub fn recommended_delta_second_order(
    smoothness: f64,
    second_order: f64,
    gap: f64,
    n_budget: usize,
) -> Result<f64, ConversionError> {
    check_positive(smoothness, "smoothness")?;
    if second_order == 0.0 {
        return Err(ConversionError::ZeroSecondOrder);
    }
    check_positive(second_order, "second_order")?;
    check_positive(gap, "gap")?;
    if n_budget == 0 {
        return Err(ConversionError::NonPositiveInput("n_budget"));
    }
    let n = n_budget as f64;
    Ok(smoothness.powf(1.0 / 7.0) * gap.powf(2.0 / 7.0)
        / (second_order.powf(3.0 / 7.0) * n.powf(2.0 / 7.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ogd_default_step, OgdLearner};
    use crate::objective::make_test_function;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn zero_radius_learner_stays_put() {
        let obj = make_test_function("quadratic", &params(&[("h", 2.0), ("d", 2.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::None,
        };
        let mut learner = OgdLearner::new(2, 0.0, 1.0).unwrap();
        let config = RunConfig {
            n_budget: 8,
            epoch_len: 2,
            radius: 0.0,
            s_mode: SMode::Uniform,
            base_seed: 3,
        };
        let x0 = [1.5, -0.5];
        let record = run_o2nc(&obj, &oracle, &mut learner, &config, &x0).unwrap();
        for x in &record.xs {
            assert_eq!(x, &x0.to_vec());
        }
        for wbar in &record.epoch_averages {
            assert_eq!(wbar, &x0.to_vec());
        }
    }

    #[test]
    fn epoch_bookkeeping_n4_t2() {
        let obj = make_test_function("quadratic", &params(&[("h", 1.0), ("d", 1.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::None,
        };
        let mut learner = OgdLearner::new(1, 1.0, 0.5).unwrap();
        let config = RunConfig {
            n_budget: 4,
            epoch_len: 2,
            radius: 1.0,
            s_mode: SMode::Uniform,
            base_seed: 0,
        };
        let record = run_o2nc(&obj, &oracle, &mut learner, &config, &[2.0]).unwrap();
        assert_eq!(record.rounds(), 4);
        assert_eq!(record.epochs(), 2);
        let wbar1 = (record.ws[0][0] + record.ws[1][0]) / 2.0;
        assert_relative_eq!(record.epoch_averages[0][0], wbar1, max_relative = 1e-15);
        assert!(record.check_identities(1e-12));
        assert_eq!(record.oracle_calls, 4);
        assert_eq!(record.hint_grad_evals, 0);
    }

    #[test]
    fn quadratic_descent_with_midpoint_queries() {
        let obj = make_test_function("quadratic", &params(&[("h", 1.0), ("d", 1.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::None,
        };
        let mut learner = OgdLearner::new(1, 1.0, 0.1).unwrap();
        let config = RunConfig {
            n_budget: 50,
            epoch_len: 10,
            radius: 1.0,
            s_mode: SMode::Midpoint,
            base_seed: 0,
        };
        let record = run_o2nc(&obj, &oracle, &mut learner, &config, &[5.0]).unwrap();
        assert!(
            record.fvals[record.rounds()] < record.fvals[0],
            "descent failed: {} -> {}",
            record.fvals[0],
            record.fvals[record.rounds()]
        );
    }

    #[test]
    fn budget_leftover_is_unspent() {
        let obj = make_test_function("quadratic", &params(&[("h", 1.0), ("d", 1.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::None,
        };
        let mut learner = OgdLearner::new(1, 0.5, 0.1).unwrap();
        let config = RunConfig {
            n_budget: 10,
            epoch_len: 3,
            radius: 0.5,
            s_mode: SMode::Uniform,
            base_seed: 0,
        };
        // K = 3, M = 9 < 10
        let record = run_o2nc(&obj, &oracle, &mut learner, &config, &[1.0]).unwrap();
        assert_eq!(record.rounds(), 9);
        assert_eq!(record.oracle_calls, 9);
    }

    #[test]
    fn radius_mismatch_rejected() {
        let obj = make_test_function("quadratic", &params(&[("h", 1.0), ("d", 1.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::None,
        };
        let mut learner = OgdLearner::new(1, 0.7, 0.1).unwrap();
        let config = RunConfig {
            n_budget: 4,
            epoch_len: 2,
            radius: 0.5,
            s_mode: SMode::Uniform,
            base_seed: 0,
        };
        assert!(matches!(
            run_o2nc(&obj, &oracle, &mut learner, &config, &[1.0]),
            Err(ConversionError::RadiusMismatch { .. })
        ));
    }

    #[test]
    fn runs_are_deterministic_given_seed() {
        let obj = make_test_function("cosine_mixture", &params(&[("d", 3.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::Gaussian { sigma: 0.5 },
        };
        let config = RunConfig {
            n_budget: 32,
            epoch_len: 4,
            radius: 0.25,
            s_mode: SMode::Uniform,
            base_seed: 17,
        };
        let x0 = obj.x0_default();
        let mut l1 = OgdLearner::new(3, 0.25, ogd_default_step(0.25, 1.0, 4)).unwrap();
        let r1 = run_o2nc(&obj, &oracle, &mut l1, &config, &x0).unwrap();
        let mut l2 = OgdLearner::new(3, 0.25, ogd_default_step(0.25, 1.0, 4)).unwrap();
        let r2 = run_o2nc(&obj, &oracle, &mut l2, &config, &x0).unwrap();
        assert_eq!(r1.ws, r2.ws);
        assert_eq!(r1.gs, r2.gs);
        assert_eq!(r1.fvals, r2.fvals);
    }

    #[test]
    fn schedule_nonsmooth_examples() {
        let s = schedule_nonsmooth(1.0, 1.0, 1024, 1.0).unwrap();
        assert_eq!(s.epoch_len, 102);
        assert_eq!(s.epochs, 10);
        assert_relative_eq!(s.radius, 1.0 / 102.0, max_relative = 1e-15);

        // small gap makes the uncapped T huge; the floor(N/2) cap engages
        let s = schedule_nonsmooth(1.0, 1e-6, 100, 1.0).unwrap();
        assert_eq!(s.epoch_len, 50, "cap branch");
        // huge gap collapses the uncapped T to the floor of 1
        let s = schedule_nonsmooth(1.0, 1e6, 100, 1.0).unwrap();
        assert_eq!(s.epoch_len, 1);

        // homogeneity: doubling N scales the uncapped T by 2^(2/3)
        let t1 = schedule_nonsmooth(1.0, 1.0, 1 << 14, 1.0)
            .unwrap()
            .epoch_len as f64;
        let t2 = schedule_nonsmooth(1.0, 1.0, 1 << 15, 1.0)
            .unwrap()
            .epoch_len as f64;
        let ratio = t2 / t1;
        let target = 2f64.powf(2.0 / 3.0);
        assert!((ratio / target - 1.0).abs() < 0.01, "ratio {ratio}");

        assert!(schedule_nonsmooth(-1.0, 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn schedule_det_smooth_examples() {
        let s = schedule_det_smooth(1.0, 1.0, 1.0, 32, 1.0).unwrap();
        assert_eq!(s.epoch_len, 4);
        assert_eq!(s.epochs, 8);
        assert_relative_eq!(s.radius, 0.25);

        let s = schedule_det_smooth(1.0, 1.0, 1e-9, 100, 1.0).unwrap();
        assert_eq!(s.epoch_len, 50, "cap branch");

        // delta -> 4 delta scales the uncapped T by 4^(4/5) within ceiling slack
        let t1 = schedule_det_smooth(1.0, 1.0, 1.0, 1 << 20, 1.0)
            .unwrap()
            .epoch_len as f64;
        let t4 = schedule_det_smooth(1.0, 1.0, 1.0, 1 << 20, 4.0)
            .unwrap()
            .epoch_len as f64;
        let target = 4f64.powf(4.0 / 5.0);
        assert!(t4 / t1 >= target / 1.5 && t4 / t1 <= target * 1.5);
    }

    #[test]
    fn schedule_second_order_examples() {
        let s = schedule_second_order(1.0, 0.0, 1.0, 8, 1.0, 1.0).unwrap();
        assert_eq!(s.epoch_len, 2);
        assert_relative_eq!(s.radius, 0.5);
        assert_relative_eq!(s.eta, 0.5);
        assert_eq!(s.q, 2);

        // J -> 0 reduces continuously to the H-only form
        let tiny = schedule_second_order(1.0, 1e-12, 1.0, 8, 1.0, 1.0).unwrap();
        assert_eq!(tiny.epoch_len, s.epoch_len);

        // doubling delta with J = 0 scales uncapped T by 2^(2/3) within slack
        let t1 = schedule_second_order(1.0, 0.0, 1.0, 1 << 20, 1.0, 1.0)
            .unwrap()
            .epoch_len as f64;
        let t2 = schedule_second_order(1.0, 0.0, 1.0, 1 << 20, 2.0, 1.0)
            .unwrap()
            .epoch_len as f64;
        let target = 2f64.powf(2.0 / 3.0);
        assert!(t2 / t1 >= target / 1.5 && t2 / t1 <= target * 1.5);
    }

    #[test]
    fn recommended_delta_examples() {
        assert_relative_eq!(
            recommended_delta_second_order(1.0, 1.0, 1.0, 1).unwrap(),
            1.0
        );
        assert_relative_eq!(
            recommended_delta_second_order(128.0, 1.0, 1.0, 1).unwrap(),
            2.0
        );
        // delta(N') / delta(N) = (N / N')^(2/7) exactly
        let d1 = recommended_delta_second_order(1.0, 1.0, 1.0, 100).unwrap();
        let d2 = recommended_delta_second_order(1.0, 1.0, 1.0, 12800).unwrap();
        assert_relative_eq!(d1 / d2, 128f64.powf(2.0 / 7.0), max_relative = 1e-12);
        assert!(matches!(
            recommended_delta_second_order(1.0, 0.0, 1.0, 1),
            Err(ConversionError::ZeroSecondOrder)
        ));
    }

    #[test]
    fn select_output_examples() {
        let mut record = RunRecord {
            epoch_len: 1,
            xs: vec![vec![0.0]],
            ws: vec![],
            gs: vec![],
            deltas: vec![],
            svals: vec![],
            epoch_averages: vec![vec![1.0]],
            per_epoch_grad_avg_norm: vec![0.0],
            fvals: vec![0.0],
            oracle_calls: 0,
            hint_grad_evals: 0,
            diagnostic_grad_evals: 0,
        };
        assert_eq!(select_output(&record, 9).unwrap(), vec![1.0]);

        record.epoch_averages = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        record.per_epoch_grad_avg_norm = vec![0.0; 4];
        let n = 100_000;
        let mut counts = [0usize; 4];
        for seed in 0..n {
            let out = select_output(&record, seed).unwrap();
            counts[out[0] as usize] += 1;
        }
        let se = (0.25 * 0.75 / n as f64).sqrt();
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - 0.25).abs() <= 3.0 * se,
                "selection frequency {freq} vs 0.25 +- {}",
                3.0 * se
            );
        }

        record.epoch_averages = vec![];
        record.per_epoch_grad_avg_norm = vec![];
        assert!(matches!(
            select_output(&record, 0),
            Err(ConversionError::EmptyRecord)
        ));
    }

    #[test]
    fn locality_bound_holds_with_radius_delta_over_t() {
        let obj = make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 3.0)])).unwrap();
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::Gaussian { sigma: 0.5 },
        };
        let delta = 0.2;
        let t = 8;
        let radius = delta / t as f64;
        let mut learner = OgdLearner::new(3, radius, ogd_default_step(radius, 1.0, t)).unwrap();
        let config = RunConfig {
            n_budget: 64,
            epoch_len: t,
            radius,
            s_mode: SMode::Uniform,
            base_seed: 5,
        };
        let record = run_o2nc(&obj, &oracle, &mut learner, &config, &[1.0, 1.0, 1.0]).unwrap();
        assert!(record.max_epoch_spread_l2() <= delta * (1.0 + 1e-12));
    }
}
