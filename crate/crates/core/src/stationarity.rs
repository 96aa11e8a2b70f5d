//! Witness-set evaluation of `(delta, eps)`-stationarity.
//!
//! A witness set is a finite set of points inside a `delta`-ball whose mean
//! is the center; the norm of the averaged gradient over the set is an
//! *upper bound* on the stationarity measure at the center. The true measure
//! is an infimum over all such sets and is intractable; this module only
//! certifies upper bounds from explicit sets, which is exactly what the
//! conversion's epoch windows produce (their center is the epoch average, so
//! the mean condition holds by construction).

use thiserror::Error;

use crate::conversion::RunRecord;
use crate::objective::{stochastic_gradient, NoiseModel, Objective};
use crate::vecmath::{mean, norm, norm_l1, norm_linf, sub};

#[derive(Debug, Error)]
pub enum StationarityError {
    #[error("witness set is empty")]
    EmptyWitness,
    #[error("witness mean deviates from center by {deviation} (tolerance {tolerance})")]
    CenterMismatch { deviation: f64, tolerance: f64 },
    #[error("epoch index {k} out of range 1..={epochs}")]
    EpochOutOfRange { k: usize, epochs: usize },
}

/// Which ball and gradient norm a witness set certifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessNorm {
    /// L2 ball, L2 norm of the averaged gradient.
    L2,
    /// L-infinity ball, L1 norm of the averaged gradient.
    L1,
}

/// Absolute tolerance on `mean(points) = center`; epoch averages are exact
/// up to floating-point summation error.
pub const CENTER_TOLERANCE: f64 = 1e-10;

/// Default per-point oracle calls for [`epoch_grad_average_mc`].
pub const DEFAULT_MC_SAMPLES: usize = 64;

/// A finite witness set certifying a stationarity upper bound at its center.
#[derive(Debug, Clone)]
pub struct WitnessSet {
    center: Vec<f64>,
    points: Vec<Vec<f64>>,
    norm_kind: WitnessNorm,
}

impl WitnessSet {
    /// Build a witness set with an explicit center. Errors if the set is
    /// empty or its mean deviates from the center beyond [`CENTER_TOLERANCE`].
    pub fn new(
        center: Vec<f64>,
        points: Vec<Vec<f64>>,
        norm_kind: WitnessNorm,
    ) -> Result<Self, StationarityError> {
        if points.is_empty() {
            return Err(StationarityError::EmptyWitness);
        }
        let deviation = norm_linf(&sub(&mean(&points), &center));
        if deviation > CENTER_TOLERANCE {
            return Err(StationarityError::CenterMismatch {
                deviation,
                tolerance: CENTER_TOLERANCE,
            });
        }
        Ok(Self {
            center,
            points,
            norm_kind,
        })
    }

    /// Build a witness set centered at the mean of the points.
    pub fn from_points(
        points: Vec<Vec<f64>>,
        norm_kind: WitnessNorm,
    ) -> Result<Self, StationarityError> {
        if points.is_empty() {
            return Err(StationarityError::EmptyWitness);
        }
        let center = mean(&points);
        Ok(Self {
            center,
            points,
            norm_kind,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn norm_kind(&self) -> WitnessNorm {
        self.norm_kind
    }

    /// Max distance of a witness point from the center, in the set's norm.
    pub fn radius(&self) -> f64 {
        let dist = match self.norm_kind {
            WitnessNorm::L2 => norm,
            WitnessNorm::L1 => norm_linf,
        };
        self.points
            .iter()
            .map(|y| dist(&sub(y, &self.center)))
            .fold(0.0, f64::max)
    }
}

/// Evaluate the witness: the norm of the averaged gradient over the set and
/// the set's radius. An upper bound on the stationarity measure at the
/// center, never the infimum itself.
pub fn witness_stationarity(grad: impl Fn(&[f64]) -> Vec<f64>, witness: &WitnessSet) -> (f64, f64) {
    let grads: Vec<Vec<f64>> = witness.points.iter().map(|y| grad(y)).collect();
    let avg = mean(&grads);
    let value = match witness.norm_kind {
        WitnessNorm::L2 => norm(&avg),
        WitnessNorm::L1 => norm_l1(&avg),
    };
    (value, witness.radius())
}

/// The witness set of epoch `k` (1-based): points `w^k_1..w^k_T`, center
/// `wbar^k`.
pub fn epoch_witness(
    record: &RunRecord,
    k: usize,
    norm_kind: WitnessNorm,
) -> Result<WitnessSet, StationarityError> {
    if k == 0 || k > record.epochs() {
        return Err(StationarityError::EpochOutOfRange {
            k,
            epochs: record.epochs(),
        });
    }
    WitnessSet::new(
        record.epoch_averages[k - 1].clone(),
        record.epoch_window(k).expect("range checked").to_vec(),
        norm_kind,
    )
}

/// Exact-gradient epoch diagnostic: the L2 witness value of epoch `k`,
/// equal to `|(1/T) sum_t grad F(w^k_t)|`.
pub fn epoch_grad_average(
    obj: &Objective,
    record: &RunRecord,
    k: usize,
) -> Result<f64, StationarityError> {
    let witness = epoch_witness(record, k, WitnessNorm::L2)?;
    Ok(witness_stationarity(|y| obj.grad(y), &witness).0)
}

/// Monte-Carlo epoch diagnostic for objectives accessed only through a noisy
/// oracle: each gradient is estimated by `m_samples` seeded oracle calls
/// ([`DEFAULT_MC_SAMPLES`] is the conventional choice). Returns the witness
/// value and the standard error of the averaged-gradient estimate.
pub fn epoch_grad_average_mc(
    obj: &Objective,
    noise: &NoiseModel,
    record: &RunRecord,
    k: usize,
    m_samples: usize,
    seed: u64,
) -> Result<(f64, f64), StationarityError> {
    assert!(m_samples >= 1);
    let witness = epoch_witness(record, k, WitnessNorm::L2)?;
    let t = witness.points().len() as f64;
    let m = m_samples as f64;
    let mut grand = vec![0.0; witness.center().len()];
    // sampling variance of the final average is (1/T^2) sum_t Var(ghat_t),
    // with each per-point variance estimated from that point's m draws
    let mut var_of_mean = 0.0;
    for (i, y) in witness.points().iter().enumerate() {
        let draws: Vec<Vec<f64>> = (0..m_samples)
            .map(|j| {
                let s = crate::rng::stream_seed(seed, "epoch-mc", (i * m_samples + j) as u64);
                stochastic_gradient(obj, noise, y, s).g
            })
            .collect();
        let point_mean = mean(&draws);
        for (acc, gi) in grand.iter_mut().zip(&point_mean) {
            *acc += gi;
        }
        if m_samples >= 2 {
            let ss: f64 = draws
                .iter()
                .map(|g| {
                    let dev = sub(g, &point_mean);
                    crate::vecmath::dot(&dev, &dev)
                })
                .sum();
            let point_var = ss / (m - 1.0);
            var_of_mean += point_var / m / (t * t);
        }
    }
    let avg: Vec<f64> = grand.iter().map(|a| a / t).collect();
    Ok((norm(&avg), var_of_mean.sqrt()))
}

/// Smooth-case transfer: a `(delta, eps)`-stationary point of an `H`-smooth
/// objective has `|grad F| <= eps + H delta`.
pub fn smooth_bound(eps: f64, smoothness: f64, delta: f64) -> f64 {
    eps + smoothness * delta
}

/// Second-order transfer: with `J`-Lipschitz Hessian,
/// `|grad F| <= eps + J delta^2 / 2`.
pub fn second_order_bound(eps: f64, second_order: f64, delta: f64) -> f64 {
    eps + 0.5 * second_order * delta * delta
}

/// Transfer from the smoothed objective back to the original: when the
/// smoothing radius was `p = eps / G`, a witness value of `eps_hat` on the
/// smoothed objective certifies `2 eps_hat` for the original.
pub fn smoothed_stationarity_factor(eps_hat: f64) -> f64 {
    2.0 * eps_hat
}
