//! Oracle-complexity hard instances.
//!
//! The construction composes three pieces: a chain function `F_T` whose
//! gradient reveals at most one new coordinate per query, a radial
//! shrinking map `rho_R` confining iterates to a ball, and a Lipschitz
//! quadratic surrogate `q_B` that grows linearly at infinity. A random
//! rotation with orthonormal columns hides the chain coordinates, and a
//! Bernoulli-masked oracle gates progress along the chain: any optimizer
//! needs on the order of `T / p` queries to walk the chain, and every
//! iterate that has not finished it keeps a gradient norm bounded away
//! from zero.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::conversion::Oracle;
use crate::objective::{Metadata, Objective, OracleSample};
use crate::rng::{stream_rng, stream_seed};
use crate::vecmath::{axpy, dot, norm, scale, zeros};

/// Chain constants: value floor `gamma0`, gradient-Lipschitz `h0`, gradient
/// sup-norm `g0`.
pub const GAMMA0: f64 = 12.0;
pub const H0: f64 = 152.0;
pub const G0: f64 = 23.0;

/// Smoothness constant of the composite instance.
pub const COMPOSITE_SMOOTHNESS: f64 = 156.0;

/// Inner weight of the quadratic surrogate.
pub const INNER_WEIGHT: f64 = 0.1;

#[derive(Debug, Error)]
pub enum HardInstanceError {
    #[error("parameter `{0}` must be positive")]
    NonPositiveInput(&'static str),
    #[error("zero-chain probability must lie in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("rotation needs d >= T, got d = {d}, t = {t}")]
    DimensionBelowChain { d: usize, t: usize },
    #[error(
        "scale separation H*gap / (12 * 156 * 4 eps^2) = {ratio} is below 2; \
         the chain would be shorter than two links"
    )]
    ScaleTooSmall { ratio: f64 },
    #[error(
        "Lipschitz budget too small: need G >= 3 sqrt(2 eps gap / delta) = {required}, got {got}"
    )]
    LipschitzTooSmall { required: f64, got: f64 },
}

/// `prog_c(x)`: the largest 1-based index `i` with `|x_i| >= c`, or 0 if
/// none. At `c = 0` the comparison is strict (`|x_i| > 0`), so only
/// genuinely nonzero coordinates count.
pub fn prog(x: &[f64], c: f64) -> usize {
    assert!(c >= 0.0, "threshold must be non-negative");
    let hit = if c == 0.0 {
        |xi: f64, _c: f64| xi.abs() > 0.0
    } else {
        |xi: f64, c: f64| xi.abs() >= c
    };
    x.iter()
        .enumerate()
        .rev()
        .find(|(_, xi)| hit(**xi, c))
        .map(|(i, _)| i + 1)
        .unwrap_or(0)
}

/// Shrinking map `rho_R(x) = x / sqrt(1 + |x|^2 / R^2)`; maps all of space
/// into the open ball of radius `R` and is 1-Lipschitz.
pub fn rho(x: &[f64], big_r: f64) -> Vec<f64> {
    assert!(big_r > 0.0);
    let s = 1.0 / (1.0 + dot(x, x) / (big_r * big_r)).sqrt();
    scale(x, s)
}

/// Apply the (symmetric) Jacobian of `rho_R` at `x` to a vector:
/// `J v = (v - y <y, v> / R^2) / sqrt(1 + |x|^2 / R^2)` with `y = rho_R(x)`.
pub fn rho_jacobian_apply(x: &[f64], big_r: f64, v: &[f64]) -> Vec<f64> {
    assert!(big_r > 0.0);
    let s = 1.0 / (1.0 + dot(x, x) / (big_r * big_r)).sqrt();
    let y = scale(x, s);
    let coef = dot(&y, v) / (big_r * big_r);
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        out.push(s * (v[i] - y[i] * coef));
    }
    out
}

/// Dense Jacobian of `rho_R` at `x`:
/// `(I - y y^T / R^2) / sqrt(1 + |x|^2 / R^2)`.
pub fn rho_jacobian(x: &[f64], big_r: f64) -> Vec<Vec<f64>> {
    assert!(big_r > 0.0);
    let d = x.len();
    let s = 1.0 / (1.0 + dot(x, x) / (big_r * big_r)).sqrt();
    let y = scale(x, s);
    let mut m = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let id = if i == j { 1.0 } else { 0.0 };
            m[i][j] = s * (id - y[i] * y[j] / (big_r * big_r));
        }
    }
    m
}

/// `q_B(x) = |x|^2 / sqrt(1 + |x|^2 / B^2) = <x, rho_B(x)>`: quadratic near
/// the origin, `3B`-Lipschitz at infinity.
pub fn q_value(x: &[f64], big_b: f64) -> f64 {
    assert!(big_b > 0.0);
    let u = dot(x, x);
    u / (1.0 + u / (big_b * big_b)).sqrt()
}

/// `grad q_B(x) = (2 - |rho_B(x)|^2 / B^2) rho_B(x)`.
pub fn q_grad(x: &[f64], big_b: f64) -> Vec<f64> {
    assert!(big_b > 0.0);
    let y = rho(x, big_b);
    let coef = 2.0 - dot(&y, &y) / (big_b * big_b);
    scale(&y, coef)
}

/// Hessian of `q_B`: with `s = (1 + |x|^2/B^2)^(-1/2)` and `u = |x|^2`,
/// `hess q = (2s - u s^3 / B^2) I + (-4 s^3 / B^2 + 3 u s^5 / B^4) x x^T`.
/// Eigenvalues are the isotropic coefficient (multiplicity d-1) and the
/// along-`x` value; the operator norm stays below 8 everywhere.
pub fn q_hess(x: &[f64], big_b: f64) -> Vec<Vec<f64>> {
    assert!(big_b > 0.0);
    let d = x.len();
    let b2 = big_b * big_b;
    let u = dot(x, x);
    let s = 1.0 / (1.0 + u / b2).sqrt();
    let s3 = s * s * s;
    let s5 = s3 * s * s;
    let iso = 2.0 * s - u * s3 / b2;
    let aniso = -4.0 * s3 / b2 + 3.0 * u * s5 / (b2 * b2);
    let mut m = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            m[i][j] = aniso * x[i] * x[j];
        }
        m[i][i] += iso;
    }
    m
}

/// Operator norm of the (rank-one plus isotropic) Hessian of `q_B`.
pub fn q_hess_op_norm(x: &[f64], big_b: f64) -> f64 {
    let b2 = big_b * big_b;
    let u = dot(x, x);
    let s = 1.0 / (1.0 + u / b2).sqrt();
    let s3 = s * s * s;
    let s5 = s3 * s * s;
    let iso = 2.0 * s - u * s3 / b2;
    let along = iso + u * (-4.0 * s3 / b2 + 3.0 * u * s5 / (b2 * b2));
    iso.abs().max(along.abs())
}

fn psi(t: f64) -> f64 {
    if t <= 0.5 {
        0.0
    } else {
        let w = 2.0 * t - 1.0;
        (1.0 - 1.0 / (w * w)).exp()
    }
}

fn psi_prime(t: f64) -> f64 {
    if t <= 0.5 {
        0.0
    } else {
        let w = 2.0 * t - 1.0;
        psi(t) * 4.0 / (w * w * w)
    }
}

fn phi(t: f64) -> f64 {
    // sqrt(e) * integral of exp(-u^2/2) from -inf to t
    let sqrt_e = std::f64::consts::E.sqrt();
    let tail = 0.5 * statrs::function::erf::erfc(-t / std::f64::consts::SQRT_2);
    sqrt_e * (2.0 * std::f64::consts::PI).sqrt() * tail
}

fn phi_prime(t: f64) -> f64 {
    std::f64::consts::E.sqrt() * (-0.5 * t * t).exp()
}

/// The chain function `F_T`: a sum of coupled bump terms in which
/// coordinate `i` only interacts with its neighbors, shifted so that
/// `F_T(0) = 0`. Its gradient is supported on the first
/// `prog_(1/2)(x) + 1` coordinates, is bounded by [`G0`] in sup norm and
/// [`H0`]-Lipschitz, and keeps norm at least 1 while the chain is
/// unfinished.
#[derive(Debug, Clone)]
pub struct ChainFunction {
    t_chain: usize,
}

impl ChainFunction {
    pub fn t_chain(&self) -> usize {
        self.t_chain
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.t_chain);
        let mut acc = psi(1.0) * (phi(0.0) - phi(x[0]));
        for i in 1..self.t_chain {
            acc += psi(-x[i - 1]) * phi(-x[i]) - psi(x[i - 1]) * phi(x[i]);
        }
        acc
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.t_chain);
        let t = self.t_chain;
        let mut g = zeros(t);
        g[0] = -psi(1.0) * phi_prime(x[0]);
        for j in 1..t {
            g[j] = -psi(-x[j - 1]) * phi_prime(-x[j]) - psi(x[j - 1]) * phi_prime(x[j]);
        }
        for j in 0..t.saturating_sub(1) {
            g[j] += -psi_prime(-x[j]) * phi(-x[j + 1]) - psi_prime(x[j]) * phi(x[j + 1]);
        }
        g
    }
}

/// Build the length-`T` chain function.
pub fn chain_build(t_chain: usize) -> ChainFunction {
    assert!(t_chain >= 1, "chain length must be at least 1");
    ChainFunction { t_chain }
}

/// One zero-chain oracle draw with its bookkeeping.
#[derive(Debug, Clone)]
pub struct ZeroChainDraw {
    pub g: Vec<f64>,
    /// 1-based coordinate the Bernoulli gate masked, if any.
    pub masked_index: Option<usize>,
    /// Whether the gate fired (`z = 1`).
    pub fired: bool,
}

/// Zero-chain stochastic oracle for the chain function: the coordinate one
/// past `prog_(1/4)(x)` is revealed (scaled by `1/p`) only when a seeded
/// Bernoulli(`p`) fires, and suppressed to zero otherwise. Unbiased, with
/// `|output| <= G0/p + G0 sqrt(T)`, and per call
/// `prog_0(output) <= prog_(1/4)(x) + 1` with the equality advancement
/// possible only on a fired draw.
pub fn zero_chain_oracle_detail(
    chain: &ChainFunction,
    x: &[f64],
    p: f64,
    seed: u64,
) -> Result<ZeroChainDraw, HardInstanceError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(HardInstanceError::BadProbability(p));
    }
    let progress = prog(x, 0.25);
    let mut g = chain.grad(x);
    let mut masked_index = None;
    let mut fired = true;
    if progress < chain.t_chain() {
        let j = progress; // 0-based index of coordinate progress + 1
        fired = stream_rng(seed, "zero-chain-gate", 0).random::<f64>() < p;
        g[j] = if fired { g[j] / p } else { 0.0 };
        masked_index = Some(j + 1);
    }
    // the defining property of the oracle; violation means a bug
    assert!(
        prog(&g, 0.0) <= progress + 1,
        "zero-chain property violated: prog_0(out) = {} > {} + 1",
        prog(&g, 0.0),
        progress
    );
    Ok(ZeroChainDraw {
        g,
        masked_index,
        fired,
    })
}

/// Zero-chain oracle returning only the gradient estimate.
pub fn zero_chain_oracle(
    chain: &ChainFunction,
    x: &[f64],
    p: f64,
    seed: u64,
) -> Result<Vec<f64>, HardInstanceError> {
    Ok(zero_chain_oracle_detail(chain, x, p, seed)?.g)
}

/// Sample a `d x t` matrix with orthonormal columns, uniform on the Stiefel
/// manifold: modified Gram-Schmidt on a seeded Gaussian matrix. The
/// normalization step makes every diagonal entry of the implicit triangular
/// factor positive, which fixes the sign convention. Columns are returned
/// as `t` vectors of length `d`.
pub fn sample_orthonormal(
    d: usize,
    t: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, HardInstanceError> {
    if d < t {
        return Err(HardInstanceError::DimensionBelowChain { d, t });
    }
    let mut rng = stream_rng(seed, "stiefel", 0);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(t);
    while cols.len() < t {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for c in &cols {
            let proj = dot(c, &v);
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= proj * ci;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(scale(&v, 1.0 / n));
        }
    }
    Ok(cols)
}

/// The Stiefel dimension that makes the rotation argument rigorous:
/// `ceil(18 R^2 T / p * log(2 T^2 / (p c)))`. Astronomically large at any
/// desk scale, which is why instances default to the heuristic `10 T`.
pub fn rotation_dimension_bound(big_r: f64, t: usize, p: f64, c: f64) -> f64 {
    (18.0 * big_r * big_r * t as f64 / p * (2.0 * (t * t) as f64 / (p * c)).ln()).ceil()
}

/// Construction parameters for a hard instance.
#[derive(Debug, Clone)]
pub struct HardInstanceConfig {
    /// Value gap `gamma` the instance may consume.
    pub gap: f64,
    /// Target smoothness `H` of the scaled instance.
    pub smoothness: f64,
    /// Target stationarity scale `eps`.
    pub eps: f64,
    /// Oracle noise scale `sigma`.
    pub sigma: f64,
    pub seed: u64,
    /// Ambient dimension; defaults to the desk-scale `10 T` when absent.
    /// The rigorous rotation bound is far larger (see
    /// [`rotation_dimension_bound`]); with a capped dimension the
    /// high-probability hiding argument is heuristic, while the
    /// deterministic zero-chain and pinning invariants are unaffected.
    pub dim: Option<usize>,
}

/// A fully assembled hard instance: the rotated, shrunk, surrogate-anchored
/// chain function together with its Bernoulli-gated oracle, scaled to the
/// requested smoothness and stationarity scale.
pub struct HardInstance {
    chain: ChainFunction,
    /// Orthonormal columns of the rotation, each of length `dim`.
    columns: Vec<Vec<f64>>,
    dim: usize,
    p: f64,
    lambda: f64,
    /// Gradients scale by `H lambda / 156`; values by `H lambda^2 / 156`.
    grad_scale: f64,
    value_scale: f64,
    big_r: f64,
    big_b: f64,
    seed: u64,
    lipschitz: f64,
    smoothness: f64,
    oracle_calls: AtomicU64,
}

/// Serializable instance descriptor.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HardInstanceDescriptor {
    pub t_chain: usize,
    pub dim: usize,
    pub p: f64,
    pub lambda: f64,
    pub smoothness: f64,
    pub seed: u64,
}

impl HardInstance {
    pub fn t_chain(&self) -> usize {
        self.chain.t_chain()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn chain(&self) -> &ChainFunction {
        &self.chain
    }

    pub fn rotation_columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn descriptor(&self) -> HardInstanceDescriptor {
        HardInstanceDescriptor {
            t_chain: self.t_chain(),
            dim: self.dim,
            p: self.p,
            lambda: self.lambda,
            smoothness: self.smoothness,
            seed: self.seed,
        }
    }

    /// Iterates that have not finished the chain keep
    /// `|grad F| >= pin_threshold`.
    pub fn pin_threshold(&self) -> f64 {
        0.5 * self.grad_scale
    }

    /// `U^T y` in chain coordinates.
    fn rotate_down(&self, y: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, y)).collect()
    }

    /// `U v` back in ambient coordinates.
    fn rotate_up(&self, v: &[f64]) -> Vec<f64> {
        let mut out = zeros(self.dim);
        for (c, vi) in self.columns.iter().zip(v) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += vi * ci;
            }
        }
        out
    }

    /// Chain coordinates of the query: `U^T rho_R(x / lambda)`.
    pub fn chain_coordinates(&self, x: &[f64]) -> Vec<f64> {
        let z = scale(x, 1.0 / self.lambda);
        self.rotate_down(&rho(&z, self.big_r))
    }

    /// `prog_(1/4)` of the chain coordinates of `x`.
    pub fn chain_progress(&self, x: &[f64]) -> usize {
        prog(&self.chain_coordinates(x), 0.25)
    }

    fn composite_value(&self, z: &[f64]) -> f64 {
        let shrunk = rho(z, self.big_r);
        self.chain.value(&self.rotate_down(&shrunk)) + INNER_WEIGHT * q_value(z, self.big_b)
    }

    fn composite_grad_from(&self, z: &[f64], chain_grad: &[f64]) -> Vec<f64> {
        let lifted = self.rotate_up(chain_grad);
        let pulled = rho_jacobian_apply(z, self.big_r, &lifted);
        axpy(&pulled, INNER_WEIGHT, &q_grad(z, self.big_b))
    }

    /// Scaled instance value `F(x) = value_scale * Fhat(x / lambda)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let z = scale(x, 1.0 / self.lambda);
        self.value_scale * self.composite_value(&z)
    }

    /// Scaled instance gradient.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let z = scale(x, 1.0 / self.lambda);
        let chain_grad = self.chain.grad(&self.rotate_down(&rho(&z, self.big_r)));
        scale(&self.composite_grad_from(&z, &chain_grad), self.grad_scale)
    }

    /// One seeded stochastic oracle query: the chain gradient is replaced by
    /// a zero-chain draw, everything else is exact. The zero-chain property
    /// is asserted on every call.
    pub fn oracle_query(&self, x: &[f64], seed: u64) -> OracleSample {
        self.oracle_calls.fetch_add(1, Ordering::Relaxed);
        let z = scale(x, 1.0 / self.lambda);
        let coords = self.rotate_down(&rho(&z, self.big_r));
        let draw = zero_chain_oracle_detail(&self.chain, &coords, self.p, seed)
            .expect("probability validated at construction");
        OracleSample {
            query_point: x.to_vec(),
            direction: None,
            seed,
            g: scale(&self.composite_grad_from(&z, &draw.g), self.grad_scale),
        }
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls.load(Ordering::Relaxed)
    }

    /// Wrap the instance as an [`Objective`] (exact value and gradient).
    pub fn objective(self: &Arc<Self>) -> Objective {
        let value_src = Arc::clone(self);
        let grad_src = Arc::clone(self);
        let dim = self.dim;
        Objective::new(
            dim,
            Arc::new(move |x: &[f64]| value_src.value(x)),
            Arc::new(move |x: &[f64]| grad_src.grad(x)),
            None,
            Metadata {
                lipschitz: Some(self.lipschitz),
                smoothness: Some(self.smoothness),
                second_order: None,
                infimum: None,
                x0_default: zeros(dim),
            },
        )
    }
}

impl Oracle for HardInstance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn query(&self, w: &[f64], _delta: &[f64], seed: u64) -> OracleSample {
        self.oracle_query(w, seed)
    }
}

/// Build the smooth hard instance for targets `(gamma, H, eps, sigma)`:
/// `lambda = (156 / H) 2 eps`, `T = floor(H gamma / (12 * 156 * (2 eps)^2))`,
/// `p = min((2 * 23 * eps)^2 / sigma^2, 1)`, `R = B = 10 G0 sqrt(T)`, inner
/// weight `1/10`. The scaled instance is `H`-smooth, at most
/// `3 sqrt(H gamma)`-Lipschitz, with value gap at most `gamma`.
pub fn make_hard_instance(config: &HardInstanceConfig) -> Result<HardInstance, HardInstanceError> {
    for (v, name) in [
        (config.gap, "gap"),
        (config.smoothness, "smoothness"),
        (config.eps, "eps"),
        (config.sigma, "sigma"),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(HardInstanceError::NonPositiveInput(name));
        }
    }
    let two_eps = 2.0 * config.eps;
    let ratio =
        config.smoothness * config.gap / (GAMMA0 * COMPOSITE_SMOOTHNESS * two_eps * two_eps);
    if ratio < 2.0 {
        return Err(HardInstanceError::ScaleTooSmall { ratio });
    }
    let t_chain = ratio.floor() as usize;
    let p = ((2.0 * G0 * config.eps) / config.sigma).powi(2).min(1.0);
    let dim = config.dim.unwrap_or(10 * t_chain);
    if dim < t_chain {
        return Err(HardInstanceError::DimensionBelowChain { d: dim, t: t_chain });
    }
    let lambda = COMPOSITE_SMOOTHNESS / config.smoothness * two_eps;
    let grad_scale = config.smoothness * lambda / COMPOSITE_SMOOTHNESS;
    let big_r = 10.0 * G0 * (t_chain as f64).sqrt();
    let columns = sample_orthonormal(dim, t_chain, config.seed)?;
    Ok(HardInstance {
        chain: chain_build(t_chain),
        columns,
        dim,
        p,
        lambda,
        grad_scale,
        value_scale: grad_scale * lambda,
        big_r,
        big_b: big_r,
        seed: config.seed,
        lipschitz: 3.0 * (config.smoothness * config.gap).sqrt(),
        smoothness: config.smoothness,
        oracle_calls: AtomicU64::new(0),
    })
}

/// Build the non-smooth-regime hard instance for targets
/// `(delta, eps, gamma, G)` by substituting `sigma = G`, `H = eps / delta`,
/// `eps' = 2 eps` into [`make_hard_instance`]. Requires
/// `G >= 3 sqrt(2 eps gamma / delta)`; the result is at most
/// `G / sqrt(2)`-Lipschitz and pins unfinished iterates at gradient norm
/// `2 eps`.
pub fn make_nonsmooth_hard_instance(
    delta: f64,
    eps: f64,
    gap: f64,
    g_bound: f64,
    seed: u64,
    dim: Option<usize>,
) -> Result<HardInstance, HardInstanceError> {
    for (v, name) in [(delta, "delta"), (eps, "eps"), (gap, "gap")] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(HardInstanceError::NonPositiveInput(name));
        }
    }
    let required = 3.0 * (2.0 * eps * gap / delta).sqrt();
    if g_bound < required || g_bound.is_nan() {
        return Err(HardInstanceError::LipschitzTooSmall {
            required,
            got: g_bound,
        });
    }
    let mut instance = make_hard_instance(&HardInstanceConfig {
        gap,
        smoothness: eps / delta,
        eps: 2.0 * eps,
        sigma: g_bound,
        seed,
        dim,
    })?;
    instance.lipschitz = g_bound / std::f64::consts::SQRT_2;
    Ok(instance)
}

/// Optimizers available for stress runs against an instance oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StressOptimizer {
    /// `x <- x - step * g` on the raw oracle draws.
    Sgd { step: f64 },
    /// Clipped momentum-flavored descent: the offset is the previous offset
    /// minus `step * g`, clipped to `radius`.
    ClippedMomentum { step: f64, radius: f64 },
}

/// Outcome of a stress run: every oracle call checks the zero-chain
/// property internally; pinning is checked on every iterate that has not
/// finished the chain.
#[derive(Debug, Clone)]
pub struct StressReport {
    pub queries: usize,
    pub pinning_checked: usize,
    pub pinning_violations: usize,
    /// Minimum gradient norm over pinned (unfinished) iterates.
    pub min_pinned_grad: f64,
    pub final_progress: usize,
    pub pin_threshold: f64,
    /// Per-query trace in the run-record row shape.
    pub rows: Vec<StressRow>,
}

/// One stress-run query in the columnar run-record schema (`k` is always 1;
/// `t` equals the query index).
#[derive(Debug, Clone, Copy)]
pub struct StressRow {
    pub n: usize,
    pub x_norm: f64,
    pub f_x: f64,
    pub g_norm: f64,
    pub delta_norm: f64,
}

impl StressReport {
    /// Rows in the same columnar schema as conversion run records.
    pub fn write_rounds_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,k,t,x_norm,f_x,g_norm,delta_norm")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},1,{},{:.17e},{:.17e},{:.17e},{:.17e}",
                row.n, row.n, row.x_norm, row.f_x, row.g_norm, row.delta_norm
            )?;
        }
        Ok(())
    }
}

/// Drive an optimizer against the instance oracle for `queries` rounds,
/// checking the zero-chain property per call and the pinning lower bound
/// per unfinished iterate.
pub fn stress_run(
    instance: &HardInstance,
    optimizer: StressOptimizer,
    queries: usize,
    seed: u64,
) -> StressReport {
    let d = instance.dim();
    let mut x = zeros(d);
    let mut offset = zeros(d);
    let mut pinning_checked = 0;
    let mut pinning_violations = 0;
    let mut min_pinned_grad = f64::INFINITY;
    let mut rows = Vec::with_capacity(queries);
    for n in 0..queries {
        if instance.chain_progress(&x) < instance.t_chain() {
            let gnorm = norm(&instance.grad(&x));
            pinning_checked += 1;
            min_pinned_grad = min_pinned_grad.min(gnorm);
            if gnorm < instance.pin_threshold() {
                pinning_violations += 1;
            }
        }
        let sample = instance.oracle_query(&x, stream_seed(seed, "stress", n as u64));
        let x_prev_norm = norm(&x);
        let f_x = instance.value(&x);
        let step_vec = match optimizer {
            StressOptimizer::Sgd { step } => scale(&sample.g, -step),
            StressOptimizer::ClippedMomentum { step, radius } => {
                offset = axpy(&offset, -step, &sample.g);
                let n_off = norm(&offset);
                if n_off > radius {
                    offset = scale(&offset, radius / n_off);
                }
                offset.clone()
            }
        };
        x = crate::vecmath::add(&x, &step_vec);
        rows.push(StressRow {
            n: n + 1,
            x_norm: x_prev_norm,
            f_x,
            g_norm: norm(&sample.g),
            delta_norm: norm(&step_vec),
        });
    }
    StressReport {
        queries,
        pinning_checked,
        pinning_violations,
        min_pinned_grad,
        final_progress: instance.chain_progress(&x),
        pin_threshold: instance.pin_threshold(),
        rows,
    }
}
