use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochdom_core::envs::{
    ArmReward, Bandit, Market, MarketSpec, MixtureComponent, SupervisedSpec, TailKind,
};
use stochdom_core::models::{
    sample_trajectories, Parameterization, PathwiseModel, PortfolioModel, SupervisedKind,
    SupervisedModel, TabularPolicy,
};
use stochdom_core::optim::{
    cvar_pg_fit, cvar_weights, lsd_fit, lsd_pg, lsd_subgradient, mean_variance_fit, reinforce_fit,
    sgd_erm_fit, BaselineConfig, IntervalRule, LsdConfig, Termination,
};
use stochdom_core::{solve_utility, Interval, PiecewiseUtility};

fn softmax_portfolio(market: Market) -> PortfolioModel {
    PortfolioModel::new(market, Parameterization::Softmax)
}

// Asset 0 pays exactly one more than asset 1 on every draw.
fn shifted_pair() -> Market {
    let spec = MarketSpec {
        assets: 2,
        mixtures: 1,
        seed: 0,
        tail: TailKind::ChiSquare3,
        ridge: 0.0,
        components: vec![MixtureComponent {
            mean: vec![1.0, 0.0],
            factor: vec![vec![1.0], vec![1.0]],
        }],
    };
    Market::new(&spec).unwrap()
}

fn policy_prob(theta: &[f64], action: usize) -> f64 {
    TabularPolicy::from_logits(1, theta.len(), theta.to_vec())
        .unwrap()
        .probs(0)[action]
}

#[test]
fn traces_obey_the_control_flow_laws() {
    let model = softmax_portfolio(Market::new(&MarketSpec::generated(5, 3, 2)).unwrap());
    for (seed, epsilon) in [(0, 0.05), (1, 0.02), (2, 0.2)] {
        let cfg = LsdConfig {
            epsilon,
            batch: 256,
            tbar_max: 30,
            step_scale: 1.0,
            seed,
            ..LsdConfig::default()
        };
        let (_, trace) = lsd_fit(&model, &cfg).unwrap();
        trace.verify().unwrap();
        assert!(trace.total_iterations() <= trace.t_max * trace.tbar_max);
    }
}

#[test]
fn same_seed_same_trace() {
    let model = softmax_portfolio(Market::new(&MarketSpec::generated(3, 2, 5)).unwrap());
    let cfg = LsdConfig {
        batch: 128,
        tbar_max: 20,
        seed: 9,
        ..LsdConfig::default()
    };
    let (a, ta) = lsd_fit(&model, &cfg).unwrap();
    let (b, tb) = lsd_fit(&model, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn replay_variant_keeps_the_laws() {
    let model = softmax_portfolio(Market::gaussian(vec![0.0, 0.0], vec![1.0, 2.0]));
    let cfg = LsdConfig {
        epsilon: 0.02,
        batch: 512,
        tbar_max: 40,
        step_scale: 1.0,
        replay: true,
        interval: IntervalRule::Quantile { lo: 0.25, hi: 0.75 },
        ..LsdConfig::default()
    };
    let (_, trace) = lsd_fit(&model, &cfg).unwrap();
    trace.verify().unwrap();
}

#[test]
fn first_order_dominant_asset_takes_the_portfolio() {
    let model = softmax_portfolio(shifted_pair());
    let cfg = LsdConfig {
        epsilon: 0.05,
        batch: 256,
        tbar_max: 50,
        step_scale: 5.0,
        seed: 1,
        ..LsdConfig::default()
    };
    let (theta, trace) = lsd_fit(&model, &cfg).unwrap();
    trace.verify().unwrap();
    let w = model.weights(theta.as_slice());
    assert!(w[0] >= 0.99, "{w:?}");
}

#[test]
fn low_variance_asset_is_preferred() {
    let model = softmax_portfolio(Market::gaussian(vec![0.0, 0.0], vec![1.0, 2.0]));
    let cfg = LsdConfig {
        epsilon: 0.02,
        batch: 4000,
        tbar_max: 60,
        step_scale: 1.0,
        interval: IntervalRule::Quantile { lo: 0.25, hi: 0.75 },
        seed: 3,
        ..LsdConfig::default()
    };
    let (theta, trace) = lsd_fit(&model, &cfg).unwrap();
    trace.verify().unwrap();
    let w = model.weights(theta.as_slice());
    assert!(w[0] > w[1], "{w:?}");
}

#[test]
fn subgradient_matches_frozen_finite_differences() {
    let model = softmax_portfolio(Market::new(&MarketSpec::generated(4, 2, 8)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let theta = [0.3, -0.2, 0.8, 0.0];
    let draws = model.draw(64, &mut rng);
    let reference = model.sample_values(&[0.0; 4], 64, &mut rng).unwrap();
    let batch = model.evaluate(&theta, &draws).unwrap();
    let (u, _) = solve_utility(
        batch.values(),
        &reference,
        Interval::new(-2.0, 2.0).unwrap(),
    )
    .unwrap();
    let g = lsd_subgradient(&batch, &u);
    let objective = |th: &[f64]| {
        -draws
            .iter()
            .map(|r| u.eval(model.outcome(th, r)))
            .sum::<f64>()
            / draws.len() as f64
    };
    let h = 1e-7;
    for j in 0..4 {
        let mut up = theta.to_vec();
        let mut down = theta.to_vec();
        up[j] += h;
        down[j] -= h;
        let fd = (objective(&up) - objective(&down)) / (2.0 * h);
        assert!(
            (fd - g[j]).abs() <= 1e-5 * fd.abs().max(1e-3),
            "coord {j}: {fd} vs {}",
            g[j]
        );
    }
}

#[test]
fn zero_utility_and_high_samples_give_zero_step() {
    let model = softmax_portfolio(Market::new(&MarketSpec::generated(3, 2, 1)).unwrap());
    let batch = model
        .sample_outcomes(&[0.0; 3], 20, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    let below_all = PiecewiseUtility::point_mass(-1e6).unwrap();
    assert!(lsd_subgradient(&batch, &below_all)
        .iter()
        .all(|&g| g == 0.0));
}

#[test]
fn deterministic_bandit_finds_the_paying_arm() {
    let bandit = Bandit::new(vec![
        ArmReward::Fixed { value: 1.0 },
        ArmReward::Fixed { value: 0.0 },
    ])
    .unwrap();
    let cfg = LsdConfig {
        epsilon: 0.005,
        batch: 512,
        tbar_max: 100,
        step_scale: 5.0,
        interval: IntervalRule::Explicit { a: 0.5, b: 1.0 },
        ..LsdConfig::default()
    };
    let (theta, trace) = lsd_pg(&TabularPolicy::uniform(1, 2), &bandit, &cfg).unwrap();
    trace.verify().unwrap();
    assert!(policy_prob(theta.as_slice(), 0) > 0.99);
}

#[test]
fn equal_mean_bandit_prefers_the_narrow_arm() {
    let bandit = Bandit::new(vec![
        ArmReward::Normal {
            mean: 0.5,
            std: 0.1,
        },
        ArmReward::Normal {
            mean: 0.5,
            std: 1.0,
        },
    ])
    .unwrap();
    let cfg = LsdConfig {
        epsilon: 0.01,
        batch: 1024,
        tbar_max: 100,
        step_scale: 5.0,
        interval: IntervalRule::Explicit { a: -1.0, b: 0.5 },
        seed: 2,
        ..LsdConfig::default()
    };
    let (theta, trace) = lsd_pg(&TabularPolicy::uniform(1, 2), &bandit, &cfg).unwrap();
    trace.verify().unwrap();
    assert!(policy_prob(theta.as_slice(), 0) > 0.8);
}

#[test]
fn noiseless_regression_recovers_the_truth() {
    let spec = SupervisedSpec {
        dim: 3,
        samples: 500,
        sigma: 0.0,
        seed: 4,
        ..SupervisedSpec::default()
    }
    .resolve()
    .unwrap();
    let model = SupervisedModel::new(SupervisedKind::LinearRegression, spec.generate().unwrap());
    let cfg = BaselineConfig {
        steps: 2000,
        batch: 64,
        step_scale: 0.2,
        ..BaselineConfig::default()
    };
    let (theta, _) = sgd_erm_fit(&model, &cfg).unwrap();
    for (t, truth) in theta.as_slice().iter().zip(&spec.true_theta) {
        assert!((t - truth).abs() < 1e-3, "{t} vs {truth}");
    }
}

#[test]
fn zero_lambda_mean_variance_is_sgd() {
    let model = softmax_portfolio(Market::new(&MarketSpec::generated(4, 3, 6)).unwrap());
    let cfg = BaselineConfig {
        steps: 50,
        batch: 64,
        seed: 5,
        ..BaselineConfig::default()
    };
    let (a, ta) = sgd_erm_fit(&model, &cfg).unwrap();
    let (b, tb) = mean_variance_fit(&model, 0.0, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn mean_variance_moves_to_the_low_variance_asset() {
    let model = softmax_portfolio(Market::gaussian(vec![0.0, 0.0], vec![1.0, 2.0]));
    let cfg = BaselineConfig {
        steps: 400,
        batch: 512,
        step_scale: 1.0,
        ..BaselineConfig::default()
    };
    let (theta, _) = mean_variance_fit(&model, 1.0, &cfg).unwrap();
    let w = model.weights(theta.as_slice());
    // Closed-form minimum of w^2 + 4 (1 - w)^2 is w = 0.8.
    assert!((w[0] - 0.8).abs() < 0.08, "{w:?}");
}

#[test]
fn large_lambda_keeps_the_dominant_asset() {
    let model = softmax_portfolio(shifted_pair());
    let cfg = BaselineConfig {
        steps: 300,
        batch: 256,
        step_scale: 1.0,
        ..BaselineConfig::default()
    };
    let (theta, _) = mean_variance_fit(&model, 10.0, &cfg).unwrap();
    let w = model.weights(theta.as_slice());
    assert!(w[0] > 0.9, "{w:?}");
}

#[test]
fn full_tail_cvar_weights_are_the_returns() {
    let returns = [0.3, -1.0, 2.0, 0.3, 5.0];
    assert_eq!(cvar_weights(&returns, 1.0).unwrap(), returns.to_vec());
    let w = cvar_weights(&returns, 0.4).unwrap();
    // q = 0.3, tail {-1.0, 0.3, 0.3}, scale 5/3
    let expect = [0.5, -5.0 / 3.0, 0.0, 0.5, 0.0];
    for (a, b) in w.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn cvar_and_mean_gradients_agree_on_deterministic_returns() {
    let bandit = Bandit::new(vec![ArmReward::Fixed { value: 0.7 }; 3]).unwrap();
    let policy = TabularPolicy::from_logits(1, 3, vec![0.2, -0.1, 0.4]).unwrap();
    let (batch, _) =
        sample_trajectories(&policy, &bandit, 200, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mean_w = batch.values().to_vec();
    for alpha in [0.05, 0.3, 1.0] {
        assert_eq!(cvar_weights(batch.values(), alpha).unwrap(), mean_w);
    }
}

#[test]
fn cvar_policy_avoids_the_catastrophic_arm() {
    let bandit = Bandit::new(vec![
        ArmReward::Fixed { value: 0.5 },
        ArmReward::Tail {
            value: 1.0,
            loss: -5.0,
            prob: 0.05,
        },
    ])
    .unwrap();
    let cfg = BaselineConfig {
        steps: 300,
        batch: 512,
        step_scale: 1.0,
        seed: 3,
        ..BaselineConfig::default()
    };
    let uniform = TabularPolicy::uniform(1, 2);
    let (risk_averse, _) = cvar_pg_fit(&uniform, &bandit, 0.1, &cfg).unwrap();
    assert!(policy_prob(risk_averse.as_slice(), 0) > 0.9);
    // The tail arm has the larger mean, so plain REINFORCE goes the other way.
    let (neutral, _) = reinforce_fit(
        &uniform,
        &bandit,
        &BaselineConfig {
            baseline: true,
            step_scale: 10.0,
            ..cfg
        },
    )
    .unwrap();
    assert!(policy_prob(neutral.as_slice(), 1) > 0.9);
}

#[test]
fn single_asset_run_certifies() {
    let model = softmax_portfolio(Market::gaussian(vec![0.1], vec![1.0]));
    let cfg = LsdConfig {
        epsilon: 0.2,
        batch: 256,
        tbar_max: 10,
        ..LsdConfig::default()
    };
    let (theta, trace) = lsd_fit(&model, &cfg).unwrap();
    assert_eq!(trace.termination, Termination::NonDominanceCertified);
    assert!(trace.updates.is_empty());
    assert_eq!(theta.as_slice(), &[0.0]);
}
