//! Hierarchical proximal step and LassoNet training invariants.

use fsltr_core::data::{generate_synthetic, SyntheticSpec};
use fsltr_core::ltr::{train_model, TrainConfig};
use fsltr_core::model::Model;
use fsltr_core::selectors::{hier_prox, LassoNet};
use fsltr_tensor::optim::AdamConfig;
use fsltr_tensor::RngState;

/// Objective of the prox problem restricted to `|θ'| = v`, with `w'` at its
/// optimal clamp of `w` onto `[-m·v, m·v]`.
fn objective(w: &[f64], theta: f64, penalty: f64, m: f64, v: f64) -> f64 {
    let clamp: f64 = w.iter().map(|x| (x.abs() - m * v).max(0.0).powi(2)).sum();
    0.5 * (v - theta.abs()).powi(2) + 0.5 * clamp + penalty * v
}

/// Dense grid over `v`, refined by golden-section search around the best
/// grid point.
fn brute_force_prox(w: &[f64], theta: f64, penalty: f64, m: f64) -> (Vec<f64>, f64) {
    let f = |v: f64| objective(w, theta, penalty, m, v);
    let hi = theta.abs() + m * w.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
    let n = 20_000;
    let step = hi / n as f64;
    let best = (0..=n)
        .map(|i| i as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - step).max(0.0), best + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut v = 0.5 * (a + b);
    if f(0.0) <= f(v) {
        v = 0.0;
    }
    let sign = if theta < 0.0 { -1.0 } else { 1.0 };
    let w_new = w.iter().map(|x| x.signum() * x.abs().min(m * v)).collect();
    (w_new, sign * v)
}

#[test]
fn prox_matches_brute_force_oracle() {
    let mut rng = RngState::new(11);
    for case in 0..500 {
        let scale = rng.uniform_range(0.05, 2.0);
        let w: Vec<f64> = (0..8).map(|_| scale * rng.normal()).collect();
        let theta = rng.normal();
        let penalty = rng.uniform_range(0.0, 2.0);
        let m = rng.uniform_range(0.1, 10.0);
        let (w_got, t_got) = hier_prox(&w, theta, penalty, m).unwrap();
        let (w_want, t_want) = brute_force_prox(&w, theta, penalty, m);
        assert!(
            (t_got - t_want).abs() <= 1e-4,
            "case {case}: theta {t_got} vs {t_want} (w {w:?}, theta {theta}, penalty {penalty}, m {m})"
        );
        for (a, b) in w_got.iter().zip(&w_want) {
            assert!((a - b).abs() <= 1e-4 * m.max(1.0), "case {case}: w {w_got:?} vs {w_want:?}");
        }
        let bound = m * t_got.abs();
        assert!(w_got.iter().all(|x| x.abs() <= bound), "case {case}: constraint");
    }
}

fn small_data(seed: u64) -> fsltr_core::data::SyntheticData {
    generate_synthetic(&SyntheticSpec {
        num_features: 12,
        informative: 3,
        train_queries: 30,
        valid_queries: 10,
        test_queries: 10,
        docs_per_query: 10,
        seed,
        ..SyntheticSpec::default()
    })
    .unwrap()
}

#[test]
fn constraint_holds_after_every_step_of_training() {
    let data = small_data(5);
    let mut rng = RngState::new(3);
    let mut net = LassoNet::new(12, &[16, 8], 10.0, 20.0, AdamConfig::default(), &mut rng).unwrap();
    let mut steps = 0;
    for _ in 0..20 {
        for group in &data.splits.train.groups {
            net.train_step(group, 1.0, &mut rng).unwrap();
            assert!(net.constraint_holds(), "violated after step {steps}");
            steps += 1;
        }
    }
    assert_eq!(steps, 20 * 30);
}

#[test]
fn feature_count_does_not_grow_along_the_lambda_path() {
    let data = small_data(8);
    let s = &data.splits;
    let cfg = TrainConfig {
        epochs: 30,
        patience: None,
        restore_best: false,
        ..TrainConfig::default()
    };
    let mut rng = RngState::new(4);
    let net = LassoNet::new(12, &[16, 8], 10.0, 0.0, AdamConfig::default(), &mut rng).unwrap();
    let mut net = train_model(net, &s.train, &s.valid, &cfg, &mut rng).unwrap().model;
    let mut counts = Vec::new();
    for lambda in [10.0, 100.0, 300.0, 1000.0, 3000.0] {
        net.lambda = lambda;
        net = train_model(net, &s.train, &s.valid, &cfg, &mut rng).unwrap().model;
        counts.push(net.active_features().len());
    }
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    assert!(counts[0] > counts[4], "{counts:?}");
}
