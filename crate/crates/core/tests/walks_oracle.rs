mod common;

use std::sync::Arc;

use lpcomp::numeric::log_log_slope;
use lpcomp::walks::{lamplighter_return_series, return_probabilities, WalkMeasure};
use lpcomp::{Ball, MarkedGroup};

#[test]
fn lazy_walk_on_z_is_binomial() {
    let z = MarkedGroup::int_lattice(1).unwrap();
    let nu = WalkMeasure::lazy_uniform(Arc::new(Ball::enumerate(&z, 64).unwrap())).unwrap();
    let exact = return_probabilities(&nu, 64).unwrap();
    let oracle = common::lazy_z_returns(64);
    for (n, (a, b)) in exact.iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() <= 1e-12 * b, "n = {n}");
    }
    let dp = lamplighter_return_series(1, 64).unwrap();
    for (a, b) in dp.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn diffusive_decay_on_z() {
    let oracle = common::lazy_z_returns(256);
    let pts: Vec<(f64, f64)> = (64..=256).map(|n| (n as f64, oracle[n])).collect();
    let slope = log_log_slope(&pts).unwrap();
    assert!((slope + 0.5).abs() < 0.01, "{slope}");
}
