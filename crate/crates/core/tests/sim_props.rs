//! Statistical properties of the Monte Carlo engine, checked against the
//! intensity model's closed-form fill rates and against estimator
//! identities that hold path-by-path.

mod common;

use common::base_params;
use mmhedge_core::{
    estimate_value, estimate_value_reduced, path_seed, simulate_path, ModelParams, PolicyTable,
    SimConfig,
};

/// Policy lattice wide enough that inventory gating never interferes:
/// constant quote offsets on both sides, no external trading.
fn frozen_policy(params: &ModelParams, offset: f64) -> PolicyTable {
    let n = 401;
    let half = ((n - 1) / 2) as f64;
    let nodes: Vec<f64> = (0..n)
        .map(|i| (i as f64 - half) / half * params.q_max)
        .collect();
    let k = params.sizes.n_buckets();
    PolicyTable::from_parts(
        0.0,
        nodes,
        params.sizes.sizes().to_vec(),
        vec![vec![offset; k]; n],
        vec![vec![offset; k]; n],
        vec![0.0; n],
    )
    .unwrap()
}

fn wide_params() -> ModelParams {
    ModelParams {
        q_max: 200.0,
        gamma: 0.0,
        impact_k: 0.0,
        sigma: 0.0,
        ..base_params()
    }
}

#[test]
fn fill_counts_at_frozen_quotes_match_poisson_means() {
    let params = wide_params();
    let policy = frozen_policy(&params, 0.1);
    let config = SimConfig {
        n_paths: 100_000,
        dt_sim: 1e-4,
        seed: 2024,
        start_inventories: vec![0.0],
    };
    let nb = params.sizes.n_buckets();
    let mut sums = vec![0.0f64; 2 * nb];
    let mut sq_sums = vec![0.0f64; 2 * nb];
    for i in 0..config.n_paths {
        let sample =
            simulate_path(&policy, &params, &config, 0.0, path_seed(config.seed, i as u64))
                .unwrap();
        for k in 0..nb {
            let b = sample.bid_fills[k] as f64;
            let a = sample.ask_fills[k] as f64;
            sums[k] += b;
            sq_sums[k] += b * b;
            sums[nb + k] += a;
            sq_sums[nb + k] += a * a;
        }
    }
    // At a constant 0.1 bps offset the logistic curve sits exactly at half
    // its cap, so each bucket's expected fill count over the horizon is
    // horizon * probability * lambda_max / 2.
    let lam = params.bid_curve.eval(0.1);
    assert_eq!(lam, 500.0);
    let n = config.n_paths as f64;
    for (j, label) in (0..2 * nb).map(|j| {
        let side = if j < nb { "bid" } else { "ask" };
        (j, format!("{side} bucket {}", j % nb))
    }) {
        let expect = params.horizon * params.sizes.probs()[j % nb] * lam;
        let mean = sums[j] / n;
        let var = (sq_sums[j] / n - mean * mean).max(0.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - expect).abs() <= 4.0 * se,
            "{label}: mean {mean} vs expected {expect} (se {se})"
        );
    }
}

#[test]
fn price_noise_does_not_bias_the_estimators() {
    let quiet = ModelParams {
        sigma: 50.0,
        ..wide_params()
    };
    let noisy = ModelParams {
        sigma: 100.0,
        ..wide_params()
    };
    let policy = frozen_policy(&quiet, 0.1);
    let config = SimConfig {
        n_paths: 4000,
        dt_sim: 1e-4,
        seed: 11,
        start_inventories: vec![0.0, 50.0],
    };
    let full_quiet = estimate_value(&policy, &quiet, &config).unwrap();
    let full_noisy = estimate_value(&policy, &noisy, &config).unwrap();
    let reduced = estimate_value_reduced(&policy, &quiet, &config).unwrap();
    for i in 0..config.start_inventories.len() {
        let (fq, fnz, rd) = (&full_quiet[i], &full_noisy[i], &reduced[i]);
        // Doubling the price volatility only adds a zero-mean martingale
        // term to the mark-to-market objective.
        let band = 3.0 * (fq.std_error.powi(2) + fnz.std_error.powi(2)).sqrt();
        assert!(
            (fq.mean_objective - fnz.mean_objective).abs() <= band,
            "q0={}: sigma shifted the mean from {} to {}",
            fq.q0,
            fq.mean_objective,
            fnz.mean_objective
        );
        // The reduced estimator strips that martingale, so with the running
        // penalty off it can only have less sampling noise.
        assert!(rd.std_error <= fq.std_error + 1e-12);
        let paired = 3.0 * (fq.std_error.powi(2) + rd.std_error.powi(2)).sqrt();
        assert!(
            (fq.mean_objective - rd.mean_objective).abs() <= paired,
            "q0={}: estimators disagree: full {} vs reduced {}",
            fq.q0,
            fq.mean_objective,
            rd.mean_objective
        );
    }
}

#[test]
fn batch_estimates_match_a_serial_replay() {
    let params = ModelParams {
        sigma: 50.0,
        ..wide_params()
    };
    let policy = frozen_policy(&params, 0.1);
    let config = SimConfig {
        n_paths: 500,
        dt_sim: 1e-4,
        seed: 77,
        start_inventories: vec![10.0],
    };
    let stats = &estimate_value(&policy, &params, &config).unwrap()[0];
    assert_eq!(stats.n_paths, 500);
    assert_eq!(stats.q0, 10.0);
    // Neumaier-compensated serial mean of the same per-path seeds.
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for i in 0..config.n_paths {
        let sample =
            simulate_path(&policy, &params, &config, 10.0, path_seed(config.seed, i as u64))
                .unwrap();
        let term = sample.objective;
        let t = sum + term;
        carry += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
    }
    let serial_mean = (sum + carry) / config.n_paths as f64;
    let scale = serial_mean.abs().max(1.0);
    assert!(
        (stats.mean_objective - serial_mean).abs() <= 1e-12 * scale,
        "batch {} vs serial {}",
        stats.mean_objective,
        serial_mean
    );
}
