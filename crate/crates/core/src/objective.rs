//! Objectives and gradient oracles.
//!
//! An [`Objective`] packages a value function, an exact gradient, optional
//! directional-derivative access, and analytic metadata (Lipschitz constant
//! `G`, smoothness `H`, second-order smoothness `J`, known infimum). The
//! catalogue in [`make_test_function`] provides four analytically
//! characterized test functions; the oracle functions wrap any objective
//! with seeded noise, randomized smoothing, or directional queries.
//!
//! Kink handling for the non-smooth catalogue entries: at non-differentiable
//! points the gradient accessor returns the subgradient obtained by taking
//! `sign(0) = 0` for the L1 valley and the lowest-index maximizer for the
//! max-affine function. Exact kink hits are measure-zero but reachable from
//! integer inputs, so the choice is fixed rather than left to chance.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::stream_rng;
use crate::vecmath::{axpy, mean, norm, scale, sub};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("unknown catalogue function `{0}`")]
    UnknownName(String),
    #[error("missing required parameter `{0}`")]
    MissingParam(&'static str),
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error("dimension must be a positive integer, got {0}")]
    BadDimension(f64),
    #[error("smoothing radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("objective does not implement a directional derivative oracle")]
    DirectionalUnsupported,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Analytic constants attached to an objective. Absent fields mean the
/// constant is unknown or undefined, not zero.
#[derive(Debug, Clone)]
pub struct Metadata {
    /// Lipschitz constant of the value (L2).
    pub lipschitz: Option<f64>,
    /// Lipschitz constant of the gradient.
    pub smoothness: Option<f64>,
    /// Lipschitz constant of the Hessian.
    pub second_order: Option<f64>,
    /// Known infimum of the value.
    pub infimum: Option<f64>,
    /// Default initial point for runs that do not specify one.
    pub x0_default: Vec<f64>,
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type DirectionalFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// An evaluatable objective with exact gradients and metadata.
///
/// Immutable after construction and safe to evaluate concurrently; the only
/// interior state is a pair of evaluation counters.
pub struct Objective {
    dim: usize,
    value_fn: ValueFn,
    grad_fn: GradFn,
    directional_fn: Option<DirectionalFn>,
    metadata: Metadata,
    value_evals: AtomicU64,
    grad_evals: AtomicU64,
}

impl Objective {
    pub fn new(
        dim: usize,
        value_fn: ValueFn,
        grad_fn: GradFn,
        directional_fn: Option<DirectionalFn>,
        metadata: Metadata,
    ) -> Self {
        Self {
            dim,
            value_fn,
            grad_fn,
            directional_fn,
            metadata,
            value_evals: AtomicU64::new(0),
            grad_evals: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn x0_default(&self) -> Vec<f64> {
        self.metadata.x0_default.clone()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.value_evals.fetch_add(1, Ordering::Relaxed);
        (self.value_fn)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        self.grad_evals.fetch_add(1, Ordering::Relaxed);
        (self.grad_fn)(x)
    }

    /// Generalized-gradient element aligned with direction `v`, satisfying
    /// `<g, v> = F'(x, v)` for catalogue functions.
    pub fn directional(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        if norm(v) == 0.0 {
            return Err(ObjectiveError::ZeroDirection);
        }
        if v.len() != self.dim {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let f = self
            .directional_fn
            .as_ref()
            .ok_or(ObjectiveError::DirectionalUnsupported)?;
        self.grad_evals.fetch_add(1, Ordering::Relaxed);
        Ok(f(x, v))
    }

    pub fn supports_directional(&self) -> bool {
        self.directional_fn.is_some()
    }

    /// Number of value evaluations since construction.
    pub fn value_evals(&self) -> u64 {
        self.value_evals.load(Ordering::Relaxed)
    }

    /// Number of gradient (and directional) evaluations since construction.
    pub fn grad_evals(&self) -> u64 {
        self.grad_evals.load(Ordering::Relaxed)
    }
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim)
            .field("metadata", &self.metadata)
            .finish()
    }
}

/// One stochastic first-order query result. Deterministic: identical
/// `(query_point, direction, seed)` always produce the identical `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub query_point: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    pub seed: u64,
    pub g: Vec<f64>,
}

/// Additive noise attached to a gradient oracle.
///
/// Gaussian noise spreads `sigma^2` evenly over coordinates (per-coordinate
/// variance `sigma^2 / d`) so that `E |g - grad F|^2 = sigma^2` regardless of
/// dimension. Sphere noise has the exact norm `sigma` on every draw.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    Gaussian { sigma: f64 },
    Sphere { sigma: f64 },
}

/// One seeded stochastic gradient query: `g = grad F(w) + noise`.
pub fn stochastic_gradient(
    obj: &Objective,
    noise: &NoiseModel,
    w: &[f64],
    seed: u64,
) -> OracleSample {
    let mut g = obj.grad(w);
    match noise {
        NoiseModel::None => {}
        NoiseModel::Gaussian { sigma } => {
            let mut rng = stream_rng(seed, "gaussian-noise", 0);
            let per_coord = sigma / (w.len() as f64).sqrt();
            for gi in &mut g {
                let z: f64 = rng.sample(StandardNormal);
                *gi += per_coord * z;
            }
        }
        NoiseModel::Sphere { sigma } => {
            let dir = sample_unit_sphere(w.len(), seed);
            for (gi, di) in g.iter_mut().zip(&dir) {
                *gi += sigma * di;
            }
        }
    }
    OracleSample {
        query_point: w.to_vec(),
        direction: None,
        seed,
        g,
    }
}

/// Uniform draw from the unit sphere (normalized Gaussian direction).
pub fn sample_unit_sphere(d: usize, seed: u64) -> Vec<f64> {
    assert!(d >= 1);
    let mut rng = stream_rng(seed, "unit-sphere", 0);
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return scale(&v, 1.0 / n);
        }
    }
}

/// Uniform draw from the closed unit ball: normalized Gaussian direction
/// scaled by `U^(1/d)`.
pub fn sample_unit_ball(d: usize, seed: u64) -> Vec<f64> {
    assert!(d >= 1);
    let mut rng = stream_rng(seed, "unit-ball", 0);
    let (dir, radius) = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            let u: f64 = rng.random();
            break (scale(&v, 1.0 / n), u.powf(1.0 / d as f64));
        }
    };
    scale(&dir, radius)
}

/// Randomized-smoothing wrapper: `F_hat(x) = E_u[F(x + p u)]` with `u`
/// uniform on the unit ball, estimated by a fixed set of `mc_samples`
/// seeded draws.
///
/// The same draws are reused at every `x`, so the returned value function is
/// an exact average of shifted copies of `F` and the returned gradient is its
/// exact gradient. The Lipschitz constant carries over when present (that is
/// what gives the `|F_hat - F| <= p G` guarantee); smoothness of the
/// estimator is left unknown.
pub fn smoothed_objective(
    obj: Arc<Objective>,
    p: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<Objective, ObjectiveError> {
    if p <= 0.0 {
        return Err(ObjectiveError::BadRadius(p));
    }
    assert!(mc_samples >= 1);
    let d = obj.dim();
    let draws: Arc<Vec<Vec<f64>>> = Arc::new(
        (0..mc_samples)
            .map(|i| sample_unit_ball(d, stream_rng(seed, "smoothing-draw", i as u64).random()))
            .collect(),
    );
    let metadata = Metadata {
        lipschitz: obj.metadata().lipschitz,
        smoothness: None,
        second_order: None,
        infimum: None,
        x0_default: obj.x0_default(),
    };
    let value_obj = Arc::clone(&obj);
    let value_draws = Arc::clone(&draws);
    let value_fn: ValueFn = Arc::new(move |x: &[f64]| {
        let mut acc = 0.0;
        for u in value_draws.iter() {
            acc += value_obj.value(&axpy(x, p, u));
        }
        acc / value_draws.len() as f64
    });
    let grad_obj = Arc::clone(&obj);
    let grad_draws = Arc::clone(&draws);
    let grad_fn: GradFn = Arc::new(move |x: &[f64]| {
        let gs: Vec<Vec<f64>> = grad_draws
            .iter()
            .map(|u| grad_obj.grad(&axpy(x, p, u)))
            .collect();
        mean(&gs)
    });
    Ok(Objective::new(d, value_fn, grad_fn, None, metadata))
}

/// One query of the smoothed stochastic oracle for `F_hat`: draw `u` on the
/// unit ball from the seed, then query the base oracle at `x + p u`.
pub fn smoothed_gradient(
    obj: &Objective,
    noise: &NoiseModel,
    p: f64,
    w: &[f64],
    seed: u64,
) -> OracleSample {
    let u = sample_unit_ball(w.len(), stream_rng(seed, "smoothed-oracle-u", 0).random());
    let shifted = axpy(w, p, &u);
    let inner = stochastic_gradient(obj, noise, &shifted, seed);
    OracleSample {
        query_point: w.to_vec(),
        direction: None,
        seed,
        g: inner.g,
    }
}

/// One directional-derivative oracle query: the returned `g` lies in the
/// generalized gradient at `w` and satisfies `<g, v> = F'(w, v)` exactly for
/// catalogue functions. The seed is recorded for the sample record; the
/// catalogue oracles are deterministic.
pub fn directional_sample(
    obj: &Objective,
    w: &[f64],
    v: &[f64],
    seed: u64,
) -> Result<OracleSample, ObjectiveError> {
    let g = obj.directional(w, v)?;
    Ok(OracleSample {
        query_point: w.to_vec(),
        direction: Some(v.to_vec()),
        seed,
        g,
    })
}

fn get_param(params: &BTreeMap<String, f64>, name: &'static str) -> Option<f64> {
    params.get(name).copied()
}

fn require_dim(params: &BTreeMap<String, f64>) -> Result<usize, ObjectiveError> {
    let d = get_param(params, "d").ok_or(ObjectiveError::MissingParam("d"))?;
    if d < 1.0 || d.fract() != 0.0 {
        return Err(ObjectiveError::BadDimension(d));
    }
    Ok(d as usize)
}

fn require_positive(
    params: &BTreeMap<String, f64>,
    name: &'static str,
    default: f64,
) -> Result<f64, ObjectiveError> {
    let v = get_param(params, name).unwrap_or(default);
    if v <= 0.0 {
        return Err(ObjectiveError::NonPositiveParam { name, value: v });
    }
    Ok(v)
}

/// Build a catalogue test function.
///
/// Keys and parameters (`d` is always required):
/// - `"quadratic"`: `F(x) = h/2 |x - c|^2` with `h` (default 1) and scalar
///   center `c` (default 0, broadcast). `H = h`, `J = 0`, `F* = 0`.
/// - `"cosine_mixture"`: `F(x) = a * sum_i cos(omega x_i)` with `a`, `omega`
///   (defaults 1). `G = a omega sqrt(d)`, `H = a omega^2`, `J = a omega^3`,
///   `F* = -a d`.
/// - `"sharp_valley"`: `F(x) = g * |x - c|_1` with slope `g` (default 1) and
///   scalar center `c` (default 0). `G = g sqrt(d)`, non-smooth, `F* = 0`.
/// - `"max_affine"`: `F(x) = max_j <a_j, x> + b_j` with `pieces` (default 4),
///   `scale` (default 1), `seed` (default 0) generating the affine pieces.
///   `G = max_j |a_j|`, non-smooth.
pub fn make_test_function(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<Objective, ObjectiveError> {
    match name {
        "quadratic" => {
            let d = require_dim(params)?;
            let h = require_positive(params, "h", 1.0)?;
            let c = get_param(params, "c").unwrap_or(0.0);
            let center = vec![c; d];
            let vc = center.clone();
            let value_fn: ValueFn = Arc::new(move |x| {
                let r = sub(x, &vc);
                0.5 * h * crate::vecmath::dot(&r, &r)
            });
            let gc = center.clone();
            let grad_fn: GradFn = Arc::new(move |x| scale(&sub(x, &gc), h));
            let dg = Arc::clone(&grad_fn);
            let directional: DirectionalFn = Arc::new(move |x, _v| dg(x));
            let metadata = Metadata {
                lipschitz: None,
                smoothness: Some(h),
                second_order: Some(0.0),
                infimum: Some(0.0),
                x0_default: vec![c + 1.0; d],
            };
            Ok(Objective::new(
                d,
                value_fn,
                grad_fn,
                Some(directional),
                metadata,
            ))
        }
        "cosine_mixture" => {
            let d = require_dim(params)?;
            let a = require_positive(params, "a", 1.0)?;
            let omega = require_positive(params, "omega", 1.0)?;
            let value_fn: ValueFn =
                Arc::new(move |x| a * x.iter().map(|xi| (omega * xi).cos()).sum::<f64>());
            let grad_fn: GradFn =
                Arc::new(move |x| x.iter().map(|xi| -a * omega * (omega * xi).sin()).collect());
            let dg = Arc::clone(&grad_fn);
            let directional: DirectionalFn = Arc::new(move |x, _v| dg(x));
            let metadata = Metadata {
                lipschitz: Some(a * omega * (d as f64).sqrt()),
                smoothness: Some(a * omega * omega),
                second_order: Some(a * omega * omega * omega),
                infimum: Some(-a * d as f64),
                x0_default: vec![std::f64::consts::PI / (3.0 * omega); d],
            };
            Ok(Objective::new(
                d,
                value_fn,
                grad_fn,
                Some(directional),
                metadata,
            ))
        }
        "sharp_valley" => {
            let d = require_dim(params)?;
            let slope = require_positive(params, "g", 1.0)?;
            let c = get_param(params, "c").unwrap_or(0.0);
            let value_fn: ValueFn =
                Arc::new(move |x| slope * x.iter().map(|xi| (xi - c).abs()).sum::<f64>());
            // sign(0) = 0 at kinks.
            let grad_fn: GradFn = Arc::new(move |x| {
                x.iter()
                    .map(|xi| {
                        let r = xi - c;
                        if r == 0.0 {
                            0.0
                        } else {
                            slope * r.signum()
                        }
                    })
                    .collect()
            });
            // At a kink coordinate the one-sided derivative along v is
            // slope * |v_i|, met by g_i = slope * sign(v_i).
            let directional: DirectionalFn = Arc::new(move |x, v| {
                x.iter()
                    .zip(v)
                    .map(|(xi, vi)| {
                        let r = xi - c;
                        if r != 0.0 {
                            slope * r.signum()
                        } else if *vi == 0.0 {
                            0.0
                        } else {
                            slope * vi.signum()
                        }
                    })
                    .collect()
            });
            let metadata = Metadata {
                lipschitz: Some(slope * (d as f64).sqrt()),
                smoothness: None,
                second_order: None,
                infimum: Some(0.0),
                x0_default: vec![c + 1.0; d],
            };
            Ok(Objective::new(
                d,
                value_fn,
                grad_fn,
                Some(directional),
                metadata,
            ))
        }
        "max_affine" => {
            let d = require_dim(params)?;
            let pieces = require_positive(params, "pieces", 4.0)? as usize;
            let scale_p = require_positive(params, "scale", 1.0)?;
            let seed = get_param(params, "seed").unwrap_or(0.0) as u64;
            let mut rng = stream_rng(seed, "max-affine-pieces", 0);
            let slopes: Vec<Vec<f64>> = (0..pieces)
                .map(|_| {
                    (0..d)
                        .map(|_| scale_p * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let offsets: Vec<f64> = (0..pieces)
                .map(|_| scale_p * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            make_max_affine(slopes, offsets)
        }
        other => Err(ObjectiveError::UnknownName(other.to_string())),
    }
}

/// Max-affine objective from explicit pieces: `F(x) = max_j <a_j, x> + b_j`.
/// Ties at kinks resolve to the lowest-index maximizer.
pub fn make_max_affine(
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
) -> Result<Objective, ObjectiveError> {
    assert!(!slopes.is_empty() && slopes.len() == offsets.len());
    let d = slopes[0].len();
    if d == 0 {
        return Err(ObjectiveError::BadDimension(0.0));
    }
    let lipschitz = slopes.iter().map(|a| norm(a)).fold(0.0, f64::max);
    let piece_values = {
        let slopes = slopes.clone();
        let offsets = offsets.clone();
        move |x: &[f64]| -> Vec<f64> {
            slopes
                .iter()
                .zip(&offsets)
                .map(|(a, b)| crate::vecmath::dot(a, x) + b)
                .collect()
        }
    };
    let pv = piece_values.clone();
    let value_fn: ValueFn = Arc::new(move |x| pv(x).into_iter().fold(f64::NEG_INFINITY, f64::max));
    let pg = piece_values.clone();
    let grad_slopes = slopes.clone();
    let grad_fn: GradFn = Arc::new(move |x| {
        let vals = pg(x);
        let mut best = 0;
        for (j, v) in vals.iter().enumerate() {
            if *v > vals[best] {
                best = j;
            }
        }
        grad_slopes[best].clone()
    });
    // Among exactly-tied active pieces, pick the one maximizing <a_j, v>
    // (lowest index on ties) so that <g, v> equals the one-sided derivative.
    let pd = piece_values;
    let dir_slopes = slopes;
    let directional: DirectionalFn = Arc::new(move |x, v| {
        let vals = pd(x);
        let top = vals.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t));
        let mut best: Option<usize> = None;
        for (j, val) in vals.iter().enumerate() {
            if *val == top {
                let better = match best {
                    None => true,
                    Some(b) => {
                        crate::vecmath::dot(&dir_slopes[j], v)
                            > crate::vecmath::dot(&dir_slopes[b], v)
                    }
                };
                if better {
                    best = Some(j);
                }
            }
        }
        dir_slopes[best.expect("max over nonempty pieces")].clone()
    });
    let metadata = Metadata {
        lipschitz: Some(lipschitz),
        smoothness: None,
        second_order: None,
        infimum: None,
        x0_default: vec![0.0; d],
    };
    Ok(Objective::new(
        d,
        value_fn,
        grad_fn,
        Some(directional),
        metadata,
    ))
}

/// Central finite differences of `f` at `x` with step `h`, one coordinate at
/// a time. Test oracle for exact gradients.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f(&xp);
        xp[i] = xi - h;
        let fm = f(&xp);
        xp[i] = xi;
        out.push((fp - fm) / (2.0 * h));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::{norm, sub};
    use approx::assert_relative_eq;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn quadratic_1d() -> Objective {
        make_test_function("quadratic", &params(&[("h", 2.0), ("c", 0.0), ("d", 1.0)])).unwrap()
    }

    #[test]
    fn quadratic_value_and_grad() {
        let obj = quadratic_1d();
        assert_eq!(obj.value(&[3.0]), 9.0);
        assert_eq!(obj.grad(&[3.0]), vec![6.0]);
        assert_eq!(obj.metadata().smoothness, Some(2.0));
        assert_eq!(obj.metadata().second_order, Some(0.0));
    }

    #[test]
    fn cosine_mixture_at_origin() {
        let obj = make_test_function("cosine_mixture", &params(&[("a", 1.0), ("d", 2.0)])).unwrap();
        assert_eq!(obj.value(&[0.0, 0.0]), 2.0);
        assert_eq!(obj.grad(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(obj.metadata().infimum, Some(-2.0));
        assert_relative_eq!(obj.metadata().lipschitz.unwrap(), 2f64.sqrt());
    }

    #[test]
    fn sharp_valley_l1_value() {
        let obj = make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 3.0)])).unwrap();
        assert_eq!(obj.value(&[1.0, -2.0, 0.0]), 3.0);
        assert_eq!(obj.grad(&[1.0, -2.0, 0.0]), vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn catalogue_errors() {
        assert!(matches!(
            make_test_function("nope", &params(&[("d", 1.0)])),
            Err(ObjectiveError::UnknownName(_))
        ));
        assert!(matches!(
            make_test_function("quadratic", &params(&[])),
            Err(ObjectiveError::MissingParam("d"))
        ));
        assert!(matches!(
            make_test_function("quadratic", &params(&[("d", -2.0)])),
            Err(ObjectiveError::BadDimension(_))
        ));
        assert!(matches!(
            make_test_function("quadratic", &params(&[("d", 1.0), ("h", 0.0)])),
            Err(ObjectiveError::NonPositiveParam { .. })
        ));
    }

    #[test]
    fn noiseless_oracle_is_gradient() {
        let obj = quadratic_1d();
        let s = stochastic_gradient(&obj, &NoiseModel::None, &[3.0], 7);
        assert_eq!(s.g, vec![6.0]);
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn oracle_deterministic_in_seed() {
        let obj = make_test_function("cosine_mixture", &params(&[("d", 4.0)])).unwrap();
        let noise = NoiseModel::Gaussian { sigma: 1.0 };
        let a = stochastic_gradient(&obj, &noise, &[0.3, -0.1, 0.0, 2.0], 42);
        let b = stochastic_gradient(&obj, &noise, &[0.3, -0.1, 0.0, 2.0], 42);
        assert_eq!(a, b);
        let c = stochastic_gradient(&obj, &noise, &[0.3, -0.1, 0.0, 2.0], 43);
        assert_ne!(a.g, c.g);
    }

    #[test]
    fn sphere_noise_has_exact_norm() {
        let obj = make_test_function("quadratic", &params(&[("h", 2.0), ("d", 3.0)])).unwrap();
        let noise = NoiseModel::Sphere { sigma: 0.5 };
        for seed in 0..50 {
            let w = [1.0, -0.5, 2.0];
            let s = stochastic_gradient(&obj, &noise, &w, seed);
            let dev = sub(&s.g, &obj.grad(&w));
            assert_relative_eq!(norm(&dev), 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_oracle_mean_and_variance() {
        let obj = make_test_function("quadratic", &params(&[("h", 2.0), ("d", 2.0)])).unwrap();
        let sigma = 1.0;
        let noise = NoiseModel::Gaussian { sigma };
        let w = [0.7, -0.3];
        let true_grad = obj.grad(&w);
        let n = 100_000u64;
        let mut mean_acc = [0.0; 2];
        let mut sq_acc = 0.0;
        for seed in 0..n {
            let s = stochastic_gradient(&obj, &noise, &w, seed);
            for (m, gi) in mean_acc.iter_mut().zip(&s.g) {
                *m += gi;
            }
            let dev = sub(&s.g, &true_grad);
            sq_acc += crate::vecmath::dot(&dev, &dev);
        }
        let mean_g: Vec<f64> = mean_acc.iter().map(|m| m / n as f64).collect();
        // standard error of each coordinate mean: (sigma/sqrt(d)) / sqrt(n)
        let se = sigma / (2f64).sqrt() / (n as f64).sqrt();
        for i in 0..2 {
            assert!(
                (mean_g[i] - true_grad[i]).abs() <= 3.0 * se,
                "bias {} exceeds 3 se {}",
                (mean_g[i] - true_grad[i]).abs(),
                3.0 * se
            );
        }
        let var = sq_acc / n as f64;
        assert!((var - sigma * sigma).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn unit_ball_support_and_moments() {
        // support
        for seed in 0..200 {
            assert!(norm(&sample_unit_ball(4, seed)) <= 1.0 + 1e-15);
        }
        // d = 1: mean ~ 0
        let n = 100_000;
        let mut acc = 0.0;
        for seed in 0..n {
            acc += sample_unit_ball(1, seed)[0];
        }
        let mean1 = acc / n as f64;
        // Var of U(-1,1) is 1/3; se = sqrt(1/3/n)
        assert!(mean1.abs() <= 3.0 * (1.0 / 3.0 / n as f64).sqrt());
        // d = 3: E|u| = d/(d+1) = 3/4
        let mut acc3 = 0.0;
        let mut acc3sq = 0.0;
        for seed in 0..n {
            let r = norm(&sample_unit_ball(3, seed));
            acc3 += r;
            acc3sq += r * r;
        }
        let m = acc3 / n as f64;
        let var = acc3sq / n as f64 - m * m;
        let se = (var / n as f64).sqrt();
        assert!(
            (m - 0.75).abs() <= 3.0 * se,
            "E|u| = {m}, expected 0.75 +- {}",
            3.0 * se
        );
    }

    #[test]
    fn smoothed_quadratic_matches_closed_form() {
        // d=1 ball is U(-1,1): F_hat(x) - F(x) = h p^2 E[u^2] / 2 = h p^2 / 6.
        let obj = Arc::new(quadratic_1d());
        let p = 0.1;
        let m = 200_000;
        let sm = smoothed_objective(Arc::clone(&obj), p, m, 11).unwrap();
        let exact = 2.0 * p * p / 6.0;
        for x in [-1.0, 0.0, 2.5] {
            let diff = sm.value(&[x]) - obj.value(&[x]);
            // var of (h/2)(x+pu)^2 - (h/2)x^2 = h x p u + h p^2 u^2/2 is
            // dominated by the linear term h x p u; se accordingly.
            let var_term = (2.0 * x * p) * (2.0 * x * p) / 3.0 + 2.0 * exact * exact;
            let se = (var_term / m as f64).sqrt();
            assert!(
                (diff - exact).abs() <= 3.0 * se + 1e-12,
                "x={x}: diff {diff} vs exact {exact} (3se={})",
                3.0 * se
            );
        }
    }

    #[test]
    fn smoothed_valley_within_lipschitz_bound() {
        let obj = Arc::new(
            make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 1.0)])).unwrap(),
        );
        let p = 0.01;
        let sm = smoothed_objective(Arc::clone(&obj), p, 20_000, 3).unwrap();
        let g_lip = obj.metadata().lipschitz.unwrap();
        let x = [5.0];
        assert!((sm.value(&x) - obj.value(&x)).abs() <= p * g_lip + 1e-9);
    }

    #[test]
    fn smoothed_value_converges_to_value_as_p_shrinks() {
        let obj = Arc::new(
            make_test_function("cosine_mixture", &params(&[("a", 1.0), ("d", 2.0)])).unwrap(),
        );
        let x = [0.4, -1.2];
        let f = obj.value(&x);
        let g_lip = obj.metadata().lipschitz.unwrap();
        let mut last = f64::INFINITY;
        for p in [1e-1, 1e-2, 1e-3, 1e-4] {
            let sm = smoothed_objective(Arc::clone(&obj), p, 64, 5).unwrap();
            let gap = (sm.value(&x) - f).abs();
            // pointwise Lipschitz bound, holds for every draw set
            assert!(gap <= p * g_lip + 1e-15);
            last = gap;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn smoothed_rejects_bad_radius() {
        let obj = Arc::new(quadratic_1d());
        assert!(matches!(
            smoothed_objective(obj, 0.0, 8, 0),
            Err(ObjectiveError::BadRadius(_))
        ));
    }

    #[test]
    fn directional_at_valley_kink() {
        let obj = make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 1.0)])).unwrap();
        let plus = directional_sample(&obj, &[0.0], &[1.0], 0).unwrap();
        assert_eq!(plus.g, vec![1.0]);
        let minus = directional_sample(&obj, &[0.0], &[-1.0], 0).unwrap();
        assert_eq!(minus.g, vec![-1.0]);
        // away from the kink the usual gradient comes back
        let away = directional_sample(&obj, &[2.0], &[-1.0], 0).unwrap();
        assert_eq!(away.g, vec![1.0]);
    }

    #[test]
    fn directional_on_smooth_function_is_gradient() {
        let obj = quadratic_1d();
        let s = directional_sample(&obj, &[3.0], &[-1.0], 0).unwrap();
        assert_eq!(s.g, obj.grad(&[3.0]));
        assert!(matches!(
            directional_sample(&obj, &[3.0], &[0.0], 0),
            Err(ObjectiveError::ZeroDirection)
        ));
    }

    #[test]
    fn max_affine_directional_picks_steepest_active_piece() {
        // F(x) = max(x, -x) = |x|; at 0 both pieces active.
        let obj = make_max_affine(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let s = directional_sample(&obj, &[0.0], &[1.0], 0).unwrap();
        assert_eq!(s.g, vec![1.0]);
        let s = directional_sample(&obj, &[0.0], &[-1.0], 0).unwrap();
        assert_eq!(s.g, vec![-1.0]);
        // gradient accessor takes the lowest-index piece at ties
        assert_eq!(obj.grad(&[0.0]), vec![1.0]);
    }

    #[test]
    fn finite_difference_validates_catalogue_gradients() {
        let mut rng = stream_rng(99, "fd-points", 0);
        let objs = vec![
            make_test_function("quadratic", &params(&[("h", 2.0), ("c", 0.5), ("d", 4.0)]))
                .unwrap(),
            make_test_function(
                "cosine_mixture",
                &params(&[("a", 1.3), ("omega", 2.0), ("d", 4.0)]),
            )
            .unwrap(),
            make_test_function("sharp_valley", &params(&[("g", 2.0), ("d", 4.0)])).unwrap(),
            make_test_function(
                "max_affine",
                &params(&[("d", 4.0), ("pieces", 5.0), ("seed", 3.0)]),
            )
            .unwrap(),
        ];
        for obj in &objs {
            for _ in 0..20 {
                let x: Vec<f64> = (0..obj.dim())
                    .map(|_| 4.0 * rng.random::<f64>() - 2.0)
                    .collect();
                let g = obj.grad(&x);
                let fd = central_difference(|y| obj.value(y), &x, 1e-6);
                let err = norm(&sub(&g, &fd));
                assert!(
                    err <= 1e-4 * (1.0 + norm(&g)),
                    "fd mismatch {err} at {x:?} for {:?}",
                    obj.metadata()
                );
            }
        }
    }

    #[test]
    fn eval_counters_track_calls() {
        let obj = quadratic_1d();
        obj.value(&[1.0]);
        obj.value(&[2.0]);
        obj.grad(&[1.0]);
        assert_eq!(obj.value_evals(), 2);
        assert_eq!(obj.grad_evals(), 1);
    }
}
