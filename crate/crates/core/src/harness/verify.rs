//! Identity and regret verification.

use thiserror::Error;

use super::quadrature::gauss_legendre_unit;
use crate::conversion::RunRecord;
use crate::learners::{
    build_comparators, ogd_default_step, ogd_step, omd_step, omd_update, realized_regret,
    ComparatorNorm, OgdState, OmdState,
};
use crate::objective::{sample_unit_sphere, Objective};
use crate::rng::{stream_rng, stream_seed};
use crate::vecmath::{axpy, dot, norm, scale, sub, zeros};
use rand::Rng;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("gradient sequence `{label}` violates the bound: |g| = {got} > {bound}")]
    GradientBoundViolated { label: String, got: f64, bound: f64 },
    #[error("battery is empty")]
    EmptyBattery,
    #[error(transparent)]
    Learner(#[from] crate::learners::LearnerError),
}

/// Decrease-identity check: with `grad_n` the quadrature of the gradient
/// along step `n`, returns
/// `|F(x_M) - F(x_0) - sum_n <grad_n, delta_n>| / (1 + |F(x_M) - F(x_0)|)`.
pub fn verify_identity(obj: &Objective, record: &RunRecord, quad_nodes: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_unit(quad_nodes);
    let m = record.rounds();
    let mut telescoped = 0.0;
    for n in 0..m {
        let x_prev = &record.xs[n];
        let delta = &record.deltas[n];
        let mut grad_n = zeros(obj.dim());
        for (s, w) in nodes.iter().zip(&weights) {
            let g = obj.grad(&axpy(x_prev, *s, delta));
            for (acc, gi) in grad_n.iter_mut().zip(&g) {
                *acc += w * gi;
            }
        }
        telescoped += dot(&grad_n, delta);
    }
    let decrease = record.fvals[m] - record.fvals[0];
    (decrease - telescoped).abs() / (1.0 + decrease.abs())
}

/// Monte-Carlo cross-check of the segment-averaged gradient at one step:
/// the mean of `grad F(x + s delta)` over uniform `s` draws, with a
/// standard-error estimate per coordinate aggregated in the L2 norm.
pub fn segment_gradient_mc(
    obj: &Objective,
    x_prev: &[f64],
    delta: &[f64],
    samples: usize,
    seed: u64,
) -> (Vec<f64>, f64) {
    assert!(samples >= 2);
    let mut rng = stream_rng(seed, "segment-mc", 0);
    let draws: Vec<Vec<f64>> = (0..samples)
        .map(|_| obj.grad(&axpy(x_prev, rng.random::<f64>(), delta)))
        .collect();
    let avg = crate::vecmath::mean(&draws);
    let mut var_sum = 0.0;
    for g in &draws {
        let dev = sub(g, &avg);
        var_sum += dot(&dev, &dev);
    }
    let se = (var_sum / (samples as f64 - 1.0) / samples as f64).sqrt();
    (avg, se)
}

/// One gradient sequence of a regret battery.
#[derive(Debug, Clone)]
pub struct RegretCase {
    pub label: String,
    pub gs: Vec<Vec<f64>>,
}

/// Random and adversarial gradient sequences, all bounded by `g_bound`:
/// `n_random` seeded sequences of random length up to `t_max`, plus six
/// fixed adversarial patterns of length `t_max` (constant, alternating,
/// sign-flip blocks, zero, single spike, rotating pair).
pub fn regret_battery(
    dim: usize,
    g_bound: f64,
    t_max: usize,
    n_random: usize,
    seed: u64,
) -> Vec<RegretCase> {
    assert!(dim >= 1 && t_max >= 1);
    let mut battery = Vec::with_capacity(n_random + 6);
    for case in 0..n_random {
        let mut rng = stream_rng(seed, "battery-random", case as u64);
        let t = 1 + (rng.random::<u64>() as usize) % t_max;
        let gs: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let dir = sample_unit_sphere(dim, rng.random());
                // half the draws sit exactly on the bound
                let mag = if rng.random::<f64>() < 0.5 {
                    g_bound
                } else {
                    g_bound * rng.random::<f64>()
                };
                scale(&dir, mag)
            })
            .collect();
        battery.push(RegretCase {
            label: format!("random-{case}"),
            gs,
        });
    }
    let e0 = {
        let mut v = zeros(dim);
        v[0] = g_bound;
        v
    };
    let e_last = {
        let mut v = zeros(dim);
        v[dim - 1] = g_bound;
        v
    };
    battery.push(RegretCase {
        label: "constant".into(),
        gs: vec![e0.clone(); t_max],
    });
    battery.push(RegretCase {
        label: "alternating".into(),
        gs: (0..t_max)
            .map(|t| scale(&e0, if t % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
    });
    battery.push(RegretCase {
        label: "sign-flip-blocks".into(),
        gs: (0..t_max)
            .map(|t| scale(&e0, if (t / 8) % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
    });
    battery.push(RegretCase {
        label: "zero".into(),
        gs: vec![zeros(dim); t_max],
    });
    battery.push(RegretCase {
        label: "single-spike".into(),
        gs: (0..t_max)
            .map(|t| {
                if t == t_max / 2 {
                    e0.clone()
                } else {
                    zeros(dim)
                }
            })
            .collect(),
    });
    battery.push(RegretCase {
        label: "rotating-pair".into(),
        gs: (0..t_max)
            .map(|t| {
                if t % 2 == 0 {
                    e0.clone()
                } else {
                    scale(&e_last, -1.0)
                }
            })
            .collect(),
    });
    battery
}

/// Which learner a regret verification drives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegretLearner {
    /// Projected OGD; `eta` defaults to `D / (G sqrt(T))` per case.
    Ogd { radius: f64, eta: Option<f64> },
    /// Optimistic mirror descent fed arbitrary seeded random hints bounded
    /// by `g_bound`.
    Omd { radius: f64, eta: f64 },
}

/// Outcome of a regret verification.
#[derive(Debug, Clone)]
pub struct RegretVerdict {
    /// `min over cases (bound - realized)`; non-negative means PASS.
    pub worst_slack: f64,
    pub worst_case: String,
    pub cases: usize,
    pub pass: bool,
}

/// Run the battery through the learner and compare realized regret against
/// the per-sequence guarantee: `D^2/(2 eta) + (eta/2) sum |g_t|^2` for OGD,
/// `D^2/(2 eta) + (eta/2) sum |g_t - h_t|^2` for optimistic mirror descent.
/// The comparator is the worst vector in the radius ball.
pub fn verify_regret(
    learner: RegretLearner,
    battery: &[RegretCase],
    g_bound: f64,
    seed: u64,
) -> Result<RegretVerdict, VerifyError> {
    if battery.is_empty() {
        return Err(VerifyError::EmptyBattery);
    }
    let mut worst_slack = f64::INFINITY;
    let mut worst_case = String::new();
    for case in battery {
        for g in &case.gs {
            let n = norm(g);
            if n > g_bound * (1.0 + 1e-12) {
                return Err(VerifyError::GradientBoundViolated {
                    label: case.label.clone(),
                    got: n,
                    bound: g_bound,
                });
            }
        }
        let t = case.gs.len();
        let dim = case.gs[0].len();
        let (realized, bound) = match learner {
            RegretLearner::Ogd { radius, eta } => {
                let step = eta.unwrap_or_else(|| ogd_default_step(radius, g_bound, t));
                let mut state = OgdState::new(dim, radius, step)?;
                let mut deltas = Vec::with_capacity(t);
                for g in &case.gs {
                    deltas.push(state.delta().to_vec());
                    ogd_step(&mut state, g)?;
                }
                let comp = build_comparators(&[&case.gs], radius, ComparatorNorm::L2);
                let realized = realized_regret(&case.gs, &deltas, &comp)?;
                let sq: f64 = case.gs.iter().map(|g| dot(g, g)).sum();
                (realized, radius * radius / (2.0 * step) + 0.5 * step * sq)
            }
            RegretLearner::Omd { radius, eta } => {
                let mut state = OmdState::new(dim, radius, eta)?;
                let mut rng = stream_rng(stream_seed(seed, "omd-hints", 0), &case.label, 0);
                let mut deltas = Vec::with_capacity(t);
                let mut hint_gap_sq = 0.0;
                for g in &case.gs {
                    let hint = scale(
                        &sample_unit_sphere(dim, rng.random()),
                        g_bound * rng.random::<f64>(),
                    );
                    deltas.push(omd_step(&mut state, &hint)?);
                    omd_update(&mut state, g)?;
                    let gap = sub(g, &hint);
                    hint_gap_sq += dot(&gap, &gap);
                }
                let comp = build_comparators(&[&case.gs], radius, ComparatorNorm::L2);
                let realized = realized_regret(&case.gs, &deltas, &comp)?;
                (
                    realized,
                    radius * radius / (2.0 * eta) + 0.5 * eta * hint_gap_sq,
                )
            }
        };
        let slack = bound - realized;
        if slack < worst_slack {
            worst_slack = slack;
            worst_case = case.label.clone();
        }
    }
    Ok(RegretVerdict {
        worst_slack,
        worst_case,
        cases: battery.len(),
        pass: worst_slack >= -1e-9,
    })
}
