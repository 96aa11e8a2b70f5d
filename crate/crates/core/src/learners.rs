//! Online learners that produce the offset sequence.
//!
//! Every learner follows a strict two-phase protocol per round: first emit
//! the offset, then ingest the round's linear-loss gradient. Violating the
//! order is a hard error because the regret accounting depends on it. Fresh
//! learners always start from the zero offset, and every emitted offset
//! satisfies the learner's ball constraint exactly (L2 for [`OgdLearner`]
//! and [`OmdLearner`], per-coordinate interval for [`PercoordLearner`]).

use std::sync::Arc;

use thiserror::Error;

use crate::objective::Objective;
use crate::vecmath::{axpy, dot, norm, zeros};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ball radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("two-phase protocol violation: {0}")]
    ProtocolViolation(&'static str),
    #[error("regret inputs disagree: {gs} gradients, {deltas} offsets, {comparator_rounds} comparator rounds")]
    LengthMismatch {
        gs: usize,
        deltas: usize,
        comparator_rounds: usize,
    },
    #[error("objective carries no smoothness constant; hints cannot contract")]
    MissingSmoothness,
    #[error("hint step size {eta} exceeds 1/H = {limit}; contraction not guaranteed")]
    StepSizeTooLarge { eta: f64, limit: f64 },
}

/// Euclidean projection onto the ball of the given radius:
/// `x * min(radius / |x|, 1)`.
pub fn project_l2_ball(x: &[f64], radius: f64) -> Result<Vec<f64>, LearnerError> {
    if radius < 0.0 {
        return Err(LearnerError::NegativeRadius(radius));
    }
    Ok(clip_l2(x, radius))
}

fn clip_l2(x: &[f64], radius: f64) -> Vec<f64> {
    debug_assert!(radius >= 0.0);
    let n = norm(x);
    if n <= radius {
        x.to_vec()
    } else if n == 0.0 {
        zeros(x.len())
    } else {
        crate::vecmath::scale(x, radius / n)
    }
}

/// Which ball constrains a learner's offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallKind {
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    AwaitOffset,
    AwaitGradient,
}

/// Common interface the conversion driver uses.
///
/// `next_offset` receives the current iterate so that hint-computing
/// learners can query the objective around it; plain learners ignore it.
pub trait OnlineLearner {
    fn dim(&self) -> usize;
    fn ball(&self) -> (BallKind, f64);
    fn next_offset(&mut self, x_prev: &[f64]) -> Result<Vec<f64>, LearnerError>;
    fn receive_gradient(&mut self, g: &[f64]) -> Result<(), LearnerError>;
    /// Restore the fresh state (zero offset).
    fn reset(&mut self);
    /// Gradient evaluations the learner spends per round on hints.
    fn hint_grad_evals_per_round(&self) -> usize {
        0
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), LearnerError> {
    if expected == got {
        Ok(())
    } else {
        Err(LearnerError::DimensionMismatch { expected, got })
    }
}

/// Projected online gradient descent state.
#[derive(Debug, Clone)]
pub struct OgdState {
    radius: f64,
    step: f64,
    delta: Vec<f64>,
    round: usize,
}

impl OgdState {
    pub fn new(dim: usize, radius: f64, step: f64) -> Result<Self, LearnerError> {
        if radius < 0.0 {
            return Err(LearnerError::NegativeRadius(radius));
        }
        Ok(Self {
            radius,
            step,
            delta: zeros(dim),
            round: 0,
        })
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn round(&self) -> usize {
        self.round
    }
}

/// One OGD update: `delta <- proj_{|.| <= D}(delta - eta g)`. Returns the
/// new offset.
pub fn ogd_step(state: &mut OgdState, g: &[f64]) -> Result<Vec<f64>, LearnerError> {
    check_dim(state.delta.len(), g.len())?;
    state.delta = clip_l2(&axpy(&state.delta, -state.step, g), state.radius);
    state.round += 1;
    Ok(state.delta.clone())
}

/// Per-coordinate OGD state: a separate step size per coordinate and an
/// L-infinity ball.
#[derive(Debug, Clone)]
pub struct PercoordState {
    radius_linf: f64,
    steps: Vec<f64>,
    delta: Vec<f64>,
    round: usize,
}

impl PercoordState {
    pub fn new(radius_linf: f64, steps: Vec<f64>) -> Result<Self, LearnerError> {
        if radius_linf < 0.0 {
            return Err(LearnerError::NegativeRadius(radius_linf));
        }
        let d = steps.len();
        Ok(Self {
            radius_linf,
            steps,
            delta: zeros(d),
            round: 0,
        })
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }
}

/// One per-coordinate update:
/// `delta_i <- clamp(delta_i - eta_i g_i, -D_inf, D_inf)`.
pub fn percoord_ogd_step(state: &mut PercoordState, g: &[f64]) -> Result<Vec<f64>, LearnerError> {
    check_dim(state.steps.len(), g.len())?;
    for ((di, si), gi) in state.delta.iter_mut().zip(&state.steps).zip(g) {
        *di = (*di - si * gi).clamp(-state.radius_linf, state.radius_linf);
    }
    state.round += 1;
    Ok(state.delta.clone())
}

/// Optimistic mirror descent state over the L2 ball. The shadow iterate
/// follows the actual gradients; each played offset additionally steps along
/// the round's hint.
#[derive(Debug, Clone)]
pub struct OmdState {
    radius: f64,
    step: f64,
    shadow: Vec<f64>,
    round: usize,
    phase: Phase,
    last_hint: Vec<f64>,
}

impl OmdState {
    pub fn new(dim: usize, radius: f64, step: f64) -> Result<Self, LearnerError> {
        if radius < 0.0 {
            return Err(LearnerError::NegativeRadius(radius));
        }
        Ok(Self {
            radius,
            step,
            shadow: zeros(dim),
            round: 0,
            phase: Phase::AwaitOffset,
            last_hint: zeros(dim),
        })
    }

    pub fn shadow(&self) -> &[f64] {
        &self.shadow
    }

    pub fn last_hint(&self) -> &[f64] {
        &self.last_hint
    }
}

/// Emit the round's offset `proj(shadow - eta * hint)`. Must be followed by
/// [`omd_update`] before the next call.
pub fn omd_step(state: &mut OmdState, hint: &[f64]) -> Result<Vec<f64>, LearnerError> {
    check_dim(state.shadow.len(), hint.len())?;
    if state.phase != Phase::AwaitOffset {
        return Err(LearnerError::ProtocolViolation(
            "omd_step called twice without an omd_update in between",
        ));
    }
    state.phase = Phase::AwaitGradient;
    state.last_hint = hint.to_vec();
    Ok(clip_l2(
        &axpy(&state.shadow, -state.step, hint),
        state.radius,
    ))
}

/// Ingest the round's gradient: `shadow <- proj(shadow - eta * g)`.
pub fn omd_update(state: &mut OmdState, g: &[f64]) -> Result<(), LearnerError> {
    check_dim(state.shadow.len(), g.len())?;
    if state.phase != Phase::AwaitGradient {
        return Err(LearnerError::ProtocolViolation(
            "omd_update called without a preceding omd_step this round",
        ));
    }
    state.shadow = clip_l2(&axpy(&state.shadow, -state.step, g), state.radius);
    state.round += 1;
    state.phase = Phase::AwaitOffset;
    Ok(())
}

/// Result of the careful-hints fixed-point iteration.
#[derive(Debug, Clone)]
pub struct HintOutcome {
    /// `h^Q`, the hint fed to the optimistic step.
    pub hint: Vec<f64>,
    /// `|h^i - h^(i-1)|` for `i = 1..Q`; the last entry is the achieved
    /// contraction diagnostic.
    pub inner_step_norms: Vec<f64>,
    /// Exactly `Q + 1` gradient evaluations.
    pub grad_evals: usize,
}

/// Fixed-point hint iteration: `h^0 = grad F(x_prev)`,
/// `h^i = grad F(x_prev + proj(shadow - eta h^(i-1)) / 2)`; returns `h^Q`.
///
/// A fixed `Q` is always honored (no tolerance-based early exit) so the
/// gradient-evaluation count stays deterministic.
pub fn careful_hints(
    obj: &Objective,
    x_prev: &[f64],
    shadow: &[f64],
    eta: f64,
    radius: f64,
    q: usize,
) -> Result<HintOutcome, LearnerError> {
    let smoothness = obj
        .metadata()
        .smoothness
        .ok_or(LearnerError::MissingSmoothness)?;
    if smoothness > 0.0 && eta > 1.0 / smoothness {
        return Err(LearnerError::StepSizeTooLarge {
            eta,
            limit: 1.0 / smoothness,
        });
    }
    if radius < 0.0 {
        return Err(LearnerError::NegativeRadius(radius));
    }
    check_dim(x_prev.len(), shadow.len())?;
    let mut hint = obj.grad(x_prev);
    let mut inner_step_norms = Vec::with_capacity(q);
    for _ in 0..q {
        let candidate = clip_l2(&axpy(shadow, -eta, &hint), radius);
        let next = obj.grad(&axpy(x_prev, 0.5, &candidate));
        inner_step_norms.push(norm(&crate::vecmath::sub(&next, &hint)));
        hint = next;
    }
    Ok(HintOutcome {
        hint,
        inner_step_norms,
        grad_evals: q + 1,
    })
}

/// Standard OGD tuning `eta = D / (G sqrt(T))`.
pub fn ogd_default_step(radius: f64, g_bound: f64, epoch_len: usize) -> f64 {
    radius / (g_bound * (epoch_len as f64).sqrt())
}

/// Per-coordinate tuning `eta_i = D_inf / (G_i sqrt(T))`.
pub fn percoord_default_steps(radius_linf: f64, g_bounds: &[f64], epoch_len: usize) -> Vec<f64> {
    g_bounds
        .iter()
        .map(|gi| radius_linf / (gi * (epoch_len as f64).sqrt()))
        .collect()
}

/// Hint-iteration tuning `eta = 1 / (2H)`.
pub fn careful_hints_default_step(smoothness: f64) -> f64 {
    1.0 / (2.0 * smoothness)
}

/// Projected OGD as an [`OnlineLearner`].
pub struct OgdLearner {
    state: OgdState,
    phase: Phase,
}

impl OgdLearner {
    pub fn new(dim: usize, radius: f64, step: f64) -> Result<Self, LearnerError> {
        Ok(Self {
            state: OgdState::new(dim, radius, step)?,
            phase: Phase::AwaitOffset,
        })
    }
}

impl OnlineLearner for OgdLearner {
    fn dim(&self) -> usize {
        self.state.delta.len()
    }

    fn ball(&self) -> (BallKind, f64) {
        (BallKind::L2, self.state.radius)
    }

    fn next_offset(&mut self, _x_prev: &[f64]) -> Result<Vec<f64>, LearnerError> {
        if self.phase != Phase::AwaitOffset {
            return Err(LearnerError::ProtocolViolation(
                "offset requested twice without a gradient in between",
            ));
        }
        self.phase = Phase::AwaitGradient;
        Ok(self.state.delta.clone())
    }

    fn receive_gradient(&mut self, g: &[f64]) -> Result<(), LearnerError> {
        if self.phase != Phase::AwaitGradient {
            return Err(LearnerError::ProtocolViolation(
                "gradient received before an offset was emitted",
            ));
        }
        ogd_step(&mut self.state, g)?;
        self.phase = Phase::AwaitOffset;
        Ok(())
    }

    fn reset(&mut self) {
        self.state.delta = zeros(self.state.delta.len());
        self.state.round = 0;
        self.phase = Phase::AwaitOffset;
    }
}

/// Per-coordinate OGD as an [`OnlineLearner`] (L-infinity ball).
pub struct PercoordLearner {
    state: PercoordState,
    phase: Phase,
}

impl PercoordLearner {
    pub fn new(radius_linf: f64, steps: Vec<f64>) -> Result<Self, LearnerError> {
        Ok(Self {
            state: PercoordState::new(radius_linf, steps)?,
            phase: Phase::AwaitOffset,
        })
    }
}

impl OnlineLearner for PercoordLearner {
    fn dim(&self) -> usize {
        self.state.delta.len()
    }

    fn ball(&self) -> (BallKind, f64) {
        (BallKind::Linf, self.state.radius_linf)
    }

    fn next_offset(&mut self, _x_prev: &[f64]) -> Result<Vec<f64>, LearnerError> {
        if self.phase != Phase::AwaitOffset {
            return Err(LearnerError::ProtocolViolation(
                "offset requested twice without a gradient in between",
            ));
        }
        self.phase = Phase::AwaitGradient;
        Ok(self.state.delta.clone())
    }

    fn receive_gradient(&mut self, g: &[f64]) -> Result<(), LearnerError> {
        if self.phase != Phase::AwaitGradient {
            return Err(LearnerError::ProtocolViolation(
                "gradient received before an offset was emitted",
            ));
        }
        percoord_ogd_step(&mut self.state, g)?;
        self.phase = Phase::AwaitOffset;
        Ok(())
    }

    fn reset(&mut self) {
        self.state.delta = zeros(self.state.delta.len());
        self.state.round = 0;
        self.phase = Phase::AwaitOffset;
    }
}

/// Optimistic mirror descent with the last observed gradient as hint
/// (`h_t = g_(t-1)`, `g_0 = 0`).
pub struct OmdLearner {
    state: OmdState,
    last_g: Vec<f64>,
}

impl OmdLearner {
    pub fn new(dim: usize, radius: f64, step: f64) -> Result<Self, LearnerError> {
        Ok(Self {
            state: OmdState::new(dim, radius, step)?,
            last_g: zeros(dim),
        })
    }
}

impl OnlineLearner for OmdLearner {
    fn dim(&self) -> usize {
        self.state.shadow.len()
    }

    fn ball(&self) -> (BallKind, f64) {
        (BallKind::L2, self.state.radius)
    }

    fn next_offset(&mut self, _x_prev: &[f64]) -> Result<Vec<f64>, LearnerError> {
        let hint = self.last_g.clone();
        omd_step(&mut self.state, &hint)
    }

    fn receive_gradient(&mut self, g: &[f64]) -> Result<(), LearnerError> {
        omd_update(&mut self.state, g)?;
        self.last_g = g.to_vec();
        Ok(())
    }

    fn reset(&mut self) {
        let d = self.state.shadow.len();
        self.state.shadow = zeros(d);
        self.state.round = 0;
        self.state.phase = Phase::AwaitOffset;
        self.state.last_hint = zeros(d);
        self.last_g = zeros(d);
    }
}

/// Per-round diagnostics recorded by [`CarefulHintsLearner`].
#[derive(Debug, Clone)]
pub struct HintRoundDiag {
    /// `|h^i - h^(i-1)|` for `i = 1..Q`.
    pub inner_step_norms: Vec<f64>,
    /// The emitted hint `h^Q`.
    pub hint: Vec<f64>,
}

/// Optimistic mirror descent whose hint is computed by the fixed-point
/// iteration of [`careful_hints`]; needs gradient access to the objective.
pub struct CarefulHintsLearner {
    obj: Arc<Objective>,
    state: OmdState,
    q: usize,
    record_diagnostics: bool,
    diagnostics: Vec<HintRoundDiag>,
}

impl CarefulHintsLearner {
    pub fn new(obj: Arc<Objective>, radius: f64, eta: f64, q: usize) -> Result<Self, LearnerError> {
        let smoothness = obj
            .metadata()
            .smoothness
            .ok_or(LearnerError::MissingSmoothness)?;
        if smoothness > 0.0 && eta > 1.0 / smoothness {
            return Err(LearnerError::StepSizeTooLarge {
                eta,
                limit: 1.0 / smoothness,
            });
        }
        let dim = obj.dim();
        Ok(Self {
            obj,
            state: OmdState::new(dim, radius, eta)?,
            q,
            record_diagnostics: false,
            diagnostics: Vec::new(),
        })
    }

    pub fn record_diagnostics(&mut self, on: bool) {
        self.record_diagnostics = on;
    }

    pub fn diagnostics(&self) -> &[HintRoundDiag] {
        &self.diagnostics
    }

    pub fn q(&self) -> usize {
        self.q
    }
}

impl OnlineLearner for CarefulHintsLearner {
    fn dim(&self) -> usize {
        self.state.shadow.len()
    }

    fn ball(&self) -> (BallKind, f64) {
        (BallKind::L2, self.state.radius)
    }

    fn next_offset(&mut self, x_prev: &[f64]) -> Result<Vec<f64>, LearnerError> {
        let shadow = self.state.shadow.clone();
        let outcome = careful_hints(
            &self.obj,
            x_prev,
            &shadow,
            self.state.step,
            self.state.radius,
            self.q,
        )?;
        if self.record_diagnostics {
            self.diagnostics.push(HintRoundDiag {
                inner_step_norms: outcome.inner_step_norms.clone(),
                hint: outcome.hint.clone(),
            });
        }
        omd_step(&mut self.state, &outcome.hint)
    }

    fn receive_gradient(&mut self, g: &[f64]) -> Result<(), LearnerError> {
        omd_update(&mut self.state, g)
    }

    fn reset(&mut self) {
        let d = self.state.shadow.len();
        self.state.shadow = zeros(d);
        self.state.round = 0;
        self.state.phase = Phase::AwaitOffset;
        self.state.last_hint = zeros(d);
    }

    fn hint_grad_evals_per_round(&self) -> usize {
        self.q + 1
    }
}

/// Resets the wrapped learner to its fresh state every `epoch_len` rounds,
/// converting a static-regret learner into a shifting-regret one.
pub struct ResetWrapper<L: OnlineLearner> {
    inner: L,
    epoch_len: usize,
    round: usize,
}

impl<L: OnlineLearner> ResetWrapper<L> {
    pub fn new(inner: L, epoch_len: usize) -> Self {
        assert!(epoch_len >= 1, "epoch length must be at least 1");
        Self {
            inner,
            epoch_len,
            round: 0,
        }
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut L {
        &mut self.inner
    }
}

impl<L: OnlineLearner> OnlineLearner for ResetWrapper<L> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ball(&self) -> (BallKind, f64) {
        self.inner.ball()
    }

    fn next_offset(&mut self, x_prev: &[f64]) -> Result<Vec<f64>, LearnerError> {
        if self.round > 0 && self.round.is_multiple_of(self.epoch_len) {
            self.inner.reset();
        }
        self.inner.next_offset(x_prev)
    }

    fn receive_gradient(&mut self, g: &[f64]) -> Result<(), LearnerError> {
        self.inner.receive_gradient(g)?;
        self.round += 1;
        Ok(())
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.round = 0;
    }

    fn hint_grad_evals_per_round(&self) -> usize {
        self.inner.hint_grad_evals_per_round()
    }
}

/// Which norm the comparator construction uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparatorNorm {
    L2,
    L1,
}

/// A piecewise-constant comparator sequence: one vector per epoch of
/// `epoch_len` rounds.
#[derive(Debug, Clone)]
pub struct ComparatorSequence {
    pub us: Vec<Vec<f64>>,
    pub epoch_len: usize,
}

/// Worst-case per-epoch comparators from gradient sums.
///
/// L2: `u^k = -D s / |s|` with `s` the summed window gradient; L1
/// (per-coordinate): `u^k_i = -D sign(s_i)`. A zero sum (or zero
/// coordinate) yields the zero comparator, which maximizes no regret term.
pub fn build_comparators(
    grad_windows: &[&[Vec<f64>]],
    radius: f64,
    norm_kind: ComparatorNorm,
) -> ComparatorSequence {
    assert!(!grad_windows.is_empty(), "at least one window required");
    let epoch_len = grad_windows[0].len();
    let us = grad_windows
        .iter()
        .map(|window| {
            assert_eq!(window.len(), epoch_len, "windows must have equal length");
            assert!(!window.is_empty(), "windows must be nonempty");
            let d = window[0].len();
            let mut s = zeros(d);
            for g in *window {
                for (si, gi) in s.iter_mut().zip(g) {
                    *si += gi;
                }
            }
            match norm_kind {
                ComparatorNorm::L2 => {
                    let n = norm(&s);
                    if n == 0.0 {
                        zeros(d)
                    } else {
                        crate::vecmath::scale(&s, -radius / n)
                    }
                }
                ComparatorNorm::L1 => s
                    .iter()
                    .map(|si| {
                        if *si == 0.0 {
                            0.0
                        } else {
                            -radius * si.signum()
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    ComparatorSequence { us, epoch_len }
}

/// Exact shifting-regret sum
/// `sum_k sum_(n in epoch k) <g_n, delta_n - u^k>`.
pub fn realized_regret(
    gs: &[Vec<f64>],
    deltas: &[Vec<f64>],
    comparators: &ComparatorSequence,
) -> Result<f64, LearnerError> {
    let rounds = comparators.us.len() * comparators.epoch_len;
    if gs.len() != deltas.len() || gs.len() != rounds {
        return Err(LearnerError::LengthMismatch {
            gs: gs.len(),
            deltas: deltas.len(),
            comparator_rounds: rounds,
        });
    }
    let mut total = 0.0;
    for (n, (g, delta)) in gs.iter().zip(deltas).enumerate() {
        let u = &comparators.us[n / comparators.epoch_len];
        total += dot(g, delta) - dot(g, u);
    }
    Ok(total)
}
