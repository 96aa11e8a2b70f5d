//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::sync::Arc;

use o2nc::conversion::{run_o2nc, NoisyOracle, RunConfig, SMode};
use o2nc::hardinstance::{
    chain_build, make_hard_instance, prog, q_grad, q_hess, q_hess_op_norm, q_value, stress_run,
    HardInstanceConfig, StressOptimizer, G0, GAMMA0,
};
use o2nc::harness::{
    regret_battery, sweep, verify_identity, verify_regret, ExperimentConfig, RegretLearner,
    SweepParam,
};
use o2nc::learners::{
    build_comparators, careful_hints_default_step, ogd_default_step, ogd_step, realized_regret,
    CarefulHintsLearner, ComparatorNorm, OgdLearner, OgdState, OnlineLearner, PercoordLearner,
    ResetWrapper,
};
use o2nc::objective::{
    central_difference, directional_sample, make_test_function, sample_unit_ball,
    smoothed_gradient, stochastic_gradient, NoiseModel, Objective,
};
use o2nc::rng::{stream_rng, stream_seed};
use o2nc::stationarity::{
    epoch_witness, second_order_bound, smooth_bound, witness_stationarity, WitnessNorm, WitnessSet,
};
use o2nc::vecmath::{add, axpy, dot, norm, norm_l1, scale, sub};
use rand::Rng;

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn pass(criterion: u32, name: &str) {
    println!("ACCEPTANCE {criterion:2} ({name}): PASS");
}

/// Criterion 1: OGD per-sequence static regret stays below `D G sqrt(T)`
/// with the standard tuning, over 1000 random and 6 adversarial sequences.
#[test]
fn acceptance_01_ogd_regret() {
    let (dim, g_bound, radius) = (4usize, 1.5, 0.8);
    let battery = regret_battery(dim, g_bound, 256, 1000, 20250810);
    assert_eq!(battery.len(), 1006);
    let mut violations = 0;
    for case in &battery {
        let t = case.gs.len();
        let eta = ogd_default_step(radius, g_bound, t);
        let mut state = OgdState::new(dim, radius, eta).unwrap();
        let mut deltas = Vec::with_capacity(t);
        for g in &case.gs {
            deltas.push(state.delta().to_vec());
            ogd_step(&mut state, g).unwrap();
        }
        let comp = build_comparators(&[&case.gs], radius, ComparatorNorm::L2);
        let realized = realized_regret(&case.gs, &deltas, &comp).unwrap();
        let bound = radius * g_bound * (t as f64).sqrt();
        if realized > bound * (1.0 + 1e-12) {
            violations += 1;
            eprintln!("violation on {}: {realized} > {bound}", case.label);
        }
    }
    assert_eq!(violations, 0);
    // the per-sequence form holds as well
    let verdict = verify_regret(
        RegretLearner::Ogd { radius, eta: None },
        &battery,
        g_bound,
        1,
    )
    .unwrap();
    assert!(verdict.pass, "worst case {}", verdict.worst_case);
    pass(1, "OGD per-sequence regret");
}

/// Criterion 2: optimistic mirror descent with arbitrary random hints stays
/// below `D^2/(2 eta) + (eta/2) sum |g_t - h_t|^2` on the same battery.
#[test]
fn acceptance_02_omd_regret() {
    let (dim, g_bound, radius) = (4usize, 1.5, 0.8);
    let battery = regret_battery(dim, g_bound, 256, 1000, 77);
    for eta in [0.01, 0.1, 1.0] {
        let verdict =
            verify_regret(RegretLearner::Omd { radius, eta }, &battery, g_bound, 99).unwrap();
        assert!(
            verdict.pass,
            "eta {eta}: worst case {} slack {}",
            verdict.worst_case, verdict.worst_slack
        );
    }
    pass(2, "optimistic OMD regret");
}

/// Criterion 3: careful-hints inner iteration halves every step on the
/// cosine mixture at `eta = 1/(2H)`, and the final hint gap obeys
/// `|g_t - h_t| <= 2 G / 2^Q` over a thousand rounds.
#[test]
fn acceptance_03_careful_hints_contraction() {
    let obj = Arc::new(
        make_test_function(
            "cosine_mixture",
            &params(&[("a", 1.0), ("omega", 1.0), ("d", 3.0)]),
        )
        .unwrap(),
    );
    let smoothness = obj.metadata().smoothness.unwrap();
    let g_bound = obj.metadata().lipschitz.unwrap();
    let eta = careful_hints_default_step(smoothness);
    let q = 8usize;
    let rounds = 1000usize;
    let radius = 0.05;
    let mut learner = CarefulHintsLearner::new(Arc::clone(&obj), radius, eta, q).unwrap();
    learner.record_diagnostics(true);
    let oracle = NoisyOracle {
        obj: &obj,
        noise: NoiseModel::None,
    };
    let config = RunConfig {
        n_budget: rounds,
        epoch_len: rounds,
        radius,
        s_mode: SMode::Midpoint,
        base_seed: 6,
    };
    let record = run_o2nc(&obj, &oracle, &mut learner, &config, &obj.x0_default()).unwrap();
    assert_eq!(record.rounds(), rounds);
    let hint_gap_bound = 2.0 * g_bound / 2f64.powi(q as i32);
    for (t, diag) in learner.diagnostics().iter().enumerate() {
        assert_eq!(diag.inner_step_norms.len(), q);
        for w in diag.inner_step_norms.windows(2) {
            assert!(
                w[1] <= 0.5 * w[0] + 1e-13,
                "round {t}: contraction violated ({} then {})",
                w[0],
                w[1]
            );
        }
        // g_t is the oracle output at the midpoint, i.e. the next hint iterate
        let gap = norm(&sub(&record.gs[t], &diag.hint));
        assert!(
            gap <= hint_gap_bound + 1e-13,
            "round {t}: hint gap {gap} > {hint_gap_bound}"
        );
    }
    pass(3, "careful-hints contraction");
}

/// Criterion 4: the decrease identity holds to 1e-6 relative with 16-node
/// quadrature on quadratic and cosine-mixture runs (d <= 10, M <= 200).
#[test]
fn acceptance_04_telescoping_identity() {
    let cases = vec![
        (
            make_test_function("quadratic", &params(&[("h", 2.0), ("c", 0.5), ("d", 10.0)]))
                .unwrap(),
            0.5,
        ),
        (
            make_test_function(
                "cosine_mixture",
                &params(&[("a", 1.0), ("omega", 1.0), ("d", 5.0)]),
            )
            .unwrap(),
            0.3,
        ),
    ];
    for (obj, radius) in cases {
        let oracle = NoisyOracle {
            obj: &obj,
            noise: NoiseModel::None,
        };
        let mut learner = OgdLearner::new(obj.dim(), radius, 0.1).unwrap();
        let config = RunConfig {
            n_budget: 200,
            epoch_len: 20,
            radius,
            s_mode: SMode::Uniform,
            base_seed: 14,
        };
        let record = run_o2nc(&obj, &oracle, &mut learner, &config, &obj.x0_default()).unwrap();
        assert_eq!(record.rounds(), 200);
        let err = verify_identity(&obj, &record, 16);
        assert!(err <= 1e-6, "identity error {err}");
    }
    pass(4, "telescoping identity");
}

/// Criterion 5: with `D = delta / T`, every epoch stays within `delta` of
/// its average, across learners, objectives, noise, and query placements.
#[test]
fn acceptance_05_locality() {
    let delta = 0.15;
    type LocalityRun = (Objective, Box<dyn OnlineLearner>, NoiseModel, SMode, bool);
    let runs: Vec<LocalityRun> = {
        let valley =
            make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 4.0)])).unwrap();
        let cosine = make_test_function(
            "cosine_mixture",
            &params(&[("a", 1.0), ("omega", 2.0), ("d", 3.0)]),
        )
        .unwrap();
        let quad = make_test_function("quadratic", &params(&[("h", 1.0), ("d", 4.0)])).unwrap();
        let t = 10usize;
        let radius = delta / t as f64;
        vec![
            (
                valley,
                Box::new(ResetWrapper::new(
                    OgdLearner::new(4, radius, 0.05).unwrap(),
                    t,
                )),
                NoiseModel::Gaussian { sigma: 1.0 },
                SMode::Uniform,
                false,
            ),
            (
                cosine,
                Box::new(ResetWrapper::new(
                    OgdLearner::new(3, radius, 0.02).unwrap(),
                    t,
                )),
                NoiseModel::Sphere { sigma: 0.5 },
                SMode::Uniform,
                false,
            ),
            (
                quad,
                Box::new(ResetWrapper::new(
                    PercoordLearner::new(radius, vec![0.05; 4]).unwrap(),
                    t,
                )),
                NoiseModel::None,
                SMode::Midpoint,
                true,
            ),
        ]
    };
    for (obj, mut learner, noise, s_mode, linf) in runs {
        let t = 10usize;
        let oracle = NoisyOracle { obj: &obj, noise };
        let config = RunConfig {
            n_budget: 120,
            epoch_len: t,
            radius: delta / t as f64,
            s_mode,
            base_seed: 33,
        };
        let record = run_o2nc(&obj, &oracle, learner.as_mut(), &config, &obj.x0_default()).unwrap();
        let spread = if linf {
            record.max_epoch_spread_linf()
        } else {
            record.max_epoch_spread_l2()
        };
        assert!(
            spread <= delta * (1.0 + 1e-12),
            "spread {spread} exceeds delta {delta}"
        );
    }
    pass(5, "epoch locality");
}

fn rate_config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

/// Criterion 6: the non-smooth stochastic pipeline's metric decays with an
/// exponent near -1/3 in N (window [-0.45, -0.20]).
#[test]
fn acceptance_06_nonsmooth_rate() {
    let config = rate_config(
        r#"
schema = "o2nc-config/v1"
n = 1024
delta = 0.1
trial_seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16]

[objective]
kind = "sharp_valley"
params = { g = 1.0, d = 5.0 }

[oracle]
kind = "gaussian"
sigma = 1.118033988749895   # G / 2 with G = sqrt(5)

[learner]
kind = "ogd"

[schedule]
kind = "nonsmooth"
"#,
    );
    let values: Vec<f64> = (10..=16).map(|k| (1u64 << k) as f64).collect();
    let result = sweep(&config, SweepParam::N, &values).unwrap();
    let fit = result.fit.expect("seven octaves span a decade");
    assert!(
        (-0.45..=-0.20).contains(&fit.slope),
        "fitted exponent {} outside [-0.45, -0.20] (r2 = {})",
        fit.slope,
        fit.r2
    );
    println!(
        "  nonsmooth rate: slope {:.4} (target -1/3), r2 {:.4}",
        fit.slope, fit.r2
    );
    pass(6, "non-smooth stochastic rate");
}

/// Criterion 7: the deterministic second-order pipeline (careful hints,
/// derived delta(N)) decays with an exponent near -4/7 (window
/// [-0.75, -0.40]).
#[test]
fn acceptance_07_second_order_rate() {
    let config = rate_config(
        r#"
schema = "o2nc-config/v1"
n = 256
trial_seeds = [1]

[objective]
kind = "cosine_mixture"
params = { a = 1.0, omega = 1.0, d = 5.0 }

[oracle]
kind = "none"

[learner]
kind = "careful_hints"

[schedule]
kind = "second_order"
"#,
    );
    let values: Vec<f64> = (8..=14).map(|k| (1u64 << k) as f64).collect();
    let result = sweep(&config, SweepParam::N, &values).unwrap();
    let fit = result.fit.expect("seven octaves span a decade");
    assert!(
        (-0.75..=-0.40).contains(&fit.slope),
        "fitted exponent {} outside [-0.75, -0.40] (r2 = {})",
        fit.slope,
        fit.r2
    );
    println!(
        "  second-order rate: slope {:.4} (target -4/7), r2 {:.4}",
        fit.slope, fit.r2
    );
    pass(7, "deterministic second-order rate");
}

/// Criterion 8: smooth and second-order transfer bounds hold on a thousand
/// random witness sets of radius at most 0.1, with zero violations.
#[test]
fn acceptance_08_smooth_transfer() {
    let quad = make_test_function("quadratic", &params(&[("h", 2.0), ("d", 4.0)])).unwrap();
    let h = quad.metadata().smoothness.unwrap();
    let cosine = make_test_function(
        "cosine_mixture",
        &params(&[("a", 1.0), ("omega", 2.0), ("d", 4.0)]),
    )
    .unwrap();
    let j = cosine.metadata().second_order.unwrap();
    let mut rng = stream_rng(8, "acceptance-transfer", 0);
    for trial in 0..1000 {
        let center: Vec<f64> = (0..4).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let r = 0.001 + 0.099 * rng.random::<f64>();
        // a symmetric pair plus its reflection keeps the mean exactly centered
        let dir = scale(&o2nc::objective::sample_unit_sphere(4, rng.random()), r);
        let points = vec![add(&center, &dir), sub(&center, &dir)];
        let witness = WitnessSet::new(center.clone(), points, WitnessNorm::L2).unwrap();

        let (value, radius) = witness_stationarity(|y| quad.grad(y), &witness);
        assert!(radius <= 0.1 * (1.0 + 1e-12));
        let lhs = norm(&quad.grad(&center));
        assert!(
            lhs <= smooth_bound(value, h, radius) + 1e-10,
            "trial {trial}: smooth transfer violated"
        );

        let (value, radius) = witness_stationarity(|y| cosine.grad(y), &witness);
        let lhs = norm(&cosine.grad(&center));
        assert!(
            lhs <= second_order_bound(value, j, radius) + 1e-10,
            "trial {trial}: second-order transfer violated"
        );
    }
    pass(8, "smooth-transfer bounds");
}

/// Criterion 9: the quadratic surrogate's closed-form gradient and Hessian
/// match finite differences to 1e-5 relative at a thousand points, with the
/// operator-norm and gradient-norm bounds never violated.
#[test]
fn acceptance_09_q_closed_forms() {
    let mut rng = stream_rng(9, "acceptance-q", 0);
    let big_b = 2.3;
    for trial in 0..1000 {
        let d = 1 + (rng.random::<u64>() % 10) as usize;
        let x: Vec<f64> = (0..d).map(|_| 10.0 * rng.random::<f64>() - 5.0).collect();
        let g = q_grad(&x, big_b);
        let fd = central_difference(|y| q_value(y, big_b), &x, 1e-6);
        for i in 0..d {
            assert!(
                (g[i] - fd[i]).abs() <= 1e-5 * (1.0 + g[i].abs()),
                "trial {trial}: gradient mismatch at {i}: {} vs {}",
                g[i],
                fd[i]
            );
        }
        let hess = q_hess(&x, big_b);
        for (i, row) in hess.iter().enumerate() {
            let fd_row = central_difference(|y| q_grad(y, big_b)[i], &x, 1e-6);
            for (jx, (hij, fdj)) in row.iter().zip(&fd_row).enumerate() {
                assert!(
                    (hij - fdj).abs() <= 1e-5 * (1.0 + hij.abs()),
                    "trial {trial}: hessian mismatch at ({i},{jx})"
                );
            }
        }
        assert!(q_hess_op_norm(&x, big_b) <= 8.0, "operator norm violated");
        assert!(
            norm(&g) <= 3.0 * big_b * (1.0 + 1e-12),
            "gradient bound violated"
        );
    }
    pass(9, "q_B closed forms");
}

/// Criterion 10: the T = 20, p = 0.1, d = 200 hard instance keeps the
/// zero-chain property on every one of 1e4 optimizer queries, pins every
/// unfinished iterate at gradient norm >= 1/2, and the chain satisfies its
/// sampled value and gradient bounds.
#[test]
fn acceptance_10_zero_chain_and_pinning() {
    // H = 156, eps = 1/2 gives the unscaled instance; gap = 240 gives T = 20;
    // sigma = 23 / sqrt(0.1) gives p = 0.1; dim defaults to 10 T = 200.
    let instance = make_hard_instance(&HardInstanceConfig {
        gap: 240.0,
        smoothness: 156.0,
        eps: 0.5,
        sigma: G0 / 0.1f64.sqrt(),
        seed: 10,
        dim: None,
    })
    .unwrap();
    assert_eq!(instance.t_chain(), 20);
    assert_eq!(instance.dim(), 200);
    assert!((instance.p() - 0.1).abs() < 1e-12);
    assert!((instance.pin_threshold() - 0.5).abs() < 1e-12);

    // zero-chain is asserted inside every oracle call; pinning per iterate
    let report = stress_run(
        &instance,
        StressOptimizer::Sgd { step: 1.0 / 156.0 },
        5_000,
        1,
    );
    assert_eq!(report.pinning_violations, 0, "sgd stress");
    let report2 = stress_run(
        &instance,
        StressOptimizer::ClippedMomentum {
            step: 1.0 / 156.0,
            radius: 0.05,
        },
        5_000,
        2,
    );
    assert_eq!(report2.pinning_violations, 0, "momentum stress");
    assert_eq!(instance.oracle_calls(), 10_000);
    assert!(report.min_pinned_grad >= 0.5);
    assert!(report2.min_pinned_grad >= 0.5);

    // chain properties at T = 20
    let chain = chain_build(20);
    assert_eq!(chain.value(&[0.0; 20]), 0.0);
    let mut rng = stream_rng(10, "acceptance-chain", 0);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..20).map(|_| 10.0 * rng.random::<f64>() - 5.0).collect();
        assert!(chain.value(&x) >= -GAMMA0 * 20.0, "inf bound violated");
        let g = chain.grad(&x);
        assert!(
            o2nc::vecmath::norm_linf(&g) <= G0,
            "sup-norm bound violated"
        );
        assert!(prog(&g, 0.0) <= prog(&x, 0.25) + 1, "zero-chain support");
    }
    pass(10, "zero-chain and pinning");
}

/// Criterion 11: randomized smoothing of the L1 valley at `p = eps / G`
/// stays within `p G` of the original (up to Monte-Carlo error), and the
/// smoothed oracle is unbiased for the smoothed gradient.
#[test]
fn acceptance_11_smoothing() {
    let obj =
        Arc::new(make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 3.0)])).unwrap());
    let g_lip = obj.metadata().lipschitz.unwrap();
    let eps = 0.05;
    let p = eps / g_lip;
    let mut rng = stream_rng(11, "acceptance-smoothing", 0);

    // value bound at 50 random points, Monte-Carlo with its own draws
    let m = 4000usize;
    for trial in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        for i in 0..m {
            let u = sample_unit_ball(3, stream_seed(1100 + trial, "draw", i as u64));
            let v = obj.value(&axpy(&x, p, &u)) - obj.value(&x);
            acc += v;
            acc_sq += v * v;
        }
        let mean = acc / m as f64;
        let var = (acc_sq / m as f64 - mean * mean).max(0.0);
        let se = (var / m as f64).sqrt();
        assert!(
            mean.abs() <= p * g_lip + 3.0 * se,
            "trial {trial}: |Fhat - F| = {} > pG + 3se = {}",
            mean.abs(),
            p * g_lip + 3.0 * se
        );
    }

    // oracle unbiasedness against the closed-form smoothed gradient:
    // the i-th coordinate is E[sign(x_i + p u_i)] with u uniform on the
    // 3-ball, whose marginal CDF is 1/2 + (3/4)(t - t^3/3)
    let marginal_cdf = |t: f64| -> f64 {
        let t = t.clamp(-1.0, 1.0);
        0.5 + 0.75 * (t - t * t * t / 3.0)
    };
    let x = vec![0.01, -0.005, 0.02]; // all within p of the kink
    let exact: Vec<f64> = x
        .iter()
        .map(|xi| 1.0 - 2.0 * marginal_cdf(-xi / p))
        .collect();
    let n = 100_000u64;
    let mut acc = [0.0; 3];
    for seed in 0..n {
        let draw = smoothed_gradient(&obj, &NoiseModel::None, p, &x, seed);
        for (a, gi) in acc.iter_mut().zip(&draw.g) {
            *a += gi;
        }
    }
    for i in 0..3 {
        let mean = acc[i] / n as f64;
        // each draw coordinate is +-1: variance 1 - mean^2
        let se = ((1.0 - exact[i] * exact[i]).max(0.0) / n as f64).sqrt();
        assert!(
            (mean - exact[i]).abs() <= 3.0 * se + 1e-12,
            "coordinate {i}: oracle mean {mean} vs closed form {} (3se = {})",
            exact[i],
            3.0 * se
        );
    }
    pass(11, "randomized smoothing");
}

/// Criterion 12: the directional oracle returns exactly the analytic
/// one-sided derivative along +-e_i at kinks of the L1 valley.
#[test]
fn acceptance_12_directional_at_kinks() {
    let slope = 1.5;
    let obj = make_test_function("sharp_valley", &params(&[("g", slope), ("d", 3.0)])).unwrap();
    // kink in coordinate 1, smooth elsewhere
    let w = vec![2.0, 0.0, -1.0];
    for i in 0..3 {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; 3];
            v[i] = sign;
            let sample = directional_sample(&obj, &w, &v, 0).unwrap();
            // analytic one-sided derivative of slope * |.|_1 along sign*e_i
            let analytic = if w[i] == 0.0 {
                slope // |t| grows at rate `slope` in either direction
            } else {
                slope * w[i].signum() * sign
            };
            let got = dot(&sample.g, &v);
            assert_eq!(got, analytic, "coordinate {i}, sign {sign}");
        }
    }
    pass(12, "directional oracle at kinks");
}

/// Criterion 13: the per-coordinate pipeline with `D_inf = delta / T`
/// satisfies the L-infinity locality bound, and the witness values obey
/// `l2 <= l1 <= sqrt(d) l2` on every epoch.
#[test]
fn acceptance_13_l1_pipeline() {
    let d = 4usize;
    let obj = make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", d as f64)])).unwrap();
    let g_bound = obj.metadata().lipschitz.unwrap();
    let delta = 0.1;
    let t = 16usize;
    let radius = delta / t as f64;
    let per_coord = g_bound / (d as f64).sqrt();
    let steps: Vec<f64> = vec![radius / (per_coord * (t as f64).sqrt()); d];
    let mut learner = ResetWrapper::new(PercoordLearner::new(radius, steps).unwrap(), t);
    let oracle = NoisyOracle {
        obj: &obj,
        noise: NoiseModel::Gaussian { sigma: 0.5 },
    };
    let config = RunConfig {
        n_budget: 512,
        epoch_len: t,
        radius,
        s_mode: SMode::Uniform,
        base_seed: 13,
    };
    let record = run_o2nc(&obj, &oracle, &mut learner, &config, &obj.x0_default()).unwrap();
    assert!(
        record.max_epoch_spread_linf() <= delta * (1.0 + 1e-12),
        "L-infinity locality violated"
    );
    let sqrt_d = (d as f64).sqrt();
    for k in 1..=record.epochs() {
        let w2 = epoch_witness(&record, k, WitnessNorm::L2).unwrap();
        let w1 = epoch_witness(&record, k, WitnessNorm::L1).unwrap();
        let (v2, _) = witness_stationarity(|y| obj.grad(y), &w2);
        let (v1, r1) = witness_stationarity(|y| obj.grad(y), &w1);
        assert!(r1 <= delta * (1.0 + 1e-12), "witness radius exceeds delta");
        assert!(v2 <= v1 + 1e-12, "epoch {k}: l2 > l1");
        assert!(v1 <= sqrt_d * v2 + 1e-12, "epoch {k}: l1 > sqrt(d) l2");
    }
    // the averaged-gradient L1 norm also matches a direct computation
    let window = record.epoch_window(1).unwrap();
    let grads: Vec<Vec<f64>> = window.iter().map(|w| obj.grad(w)).collect();
    let direct = norm_l1(&o2nc::vecmath::mean(&grads));
    let (v1, _) = witness_stationarity(
        |y| obj.grad(y),
        &epoch_witness(&record, 1, WitnessNorm::L1).unwrap(),
    );
    assert!((direct - v1).abs() <= 1e-12);
    pass(13, "L1 per-coordinate pipeline");
}

/// The Monte-Carlo expected-gradient identity behind the uniform placement:
/// resampling `s` reproduces the segment-averaged gradient. Not a numbered
/// criterion, but the statistical half of the identity check.
#[test]
fn expected_gradient_identity_monte_carlo() {
    let obj = make_test_function(
        "cosine_mixture",
        &params(&[("a", 1.0), ("omega", 2.0), ("d", 3.0)]),
    )
    .unwrap();
    let x_prev = vec![0.2, -0.4, 0.7];
    let delta = vec![0.3, 0.1, -0.2];
    let (mc, se) = o2nc::harness::segment_gradient_mc(&obj, &x_prev, &delta, 40_000, 17);
    // quadrature reference
    let (nodes, weights) = o2nc::harness::gauss_legendre_unit(32);
    let mut exact = vec![0.0; 3];
    for (s, w) in nodes.iter().zip(&weights) {
        let g = obj.grad(&axpy(&x_prev, *s, &delta));
        for (acc, gi) in exact.iter_mut().zip(&g) {
            *acc += w * gi;
        }
    }
    let err = norm(&sub(&mc, &exact));
    assert!(
        err <= 3.0 * se,
        "MC segment gradient off by {err} (3 se = {})",
        3.0 * se
    );
}

/// Oracle determinism across the public sampling surfaces (not a numbered
/// criterion; the reproducibility invariant).
#[test]
fn determinism_of_seeded_surfaces() {
    let obj = make_test_function("sharp_valley", &params(&[("g", 1.0), ("d", 3.0)])).unwrap();
    let w = [0.3, -0.2, 0.9];
    let a = stochastic_gradient(&obj, &NoiseModel::Gaussian { sigma: 1.0 }, &w, 5);
    let b = stochastic_gradient(&obj, &NoiseModel::Gaussian { sigma: 1.0 }, &w, 5);
    assert_eq!(a, b);
    assert_eq!(sample_unit_ball(6, 9), sample_unit_ball(6, 9));
    let s1 = smoothed_gradient(&obj, &NoiseModel::None, 0.1, &w, 3);
    let s2 = smoothed_gradient(&obj, &NoiseModel::None, 0.1, &w, 3);
    assert_eq!(s1, s2);
}
