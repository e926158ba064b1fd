//! In-sample guarantees of the aggregation procedures.

mod common;

use common::{instance, losses, random_simplex, rng};
use qagg_core::risk::{objective, vertex_risks};
use qagg_core::{
    convex_erm, erm_select, q_aggregate, AggregationConfig, Beta, Error, LabeledSample, LossModel, Matrix, Prior, SimplexWeights,
    SolverConfig,
};
use rand::Rng;

#[test]
fn q_aggregate_beats_best_penalized_vertex() {
    let mut r = rng(31);
    for loss in losses() {
        for _ in 0..20 {
            let m = r.gen_range(2..=8);
            let (_, sample) = instance(&mut r, m, 50, 1.0);
            let prior = Prior::new(random_simplex(&mut r, m).into_vec()).unwrap();
            let config = AggregationConfig::new(r.gen_range(0.05..0.95), Beta::Fixed(r.gen_range(0.1..20.0)), prior).unwrap();
            let out = q_aggregate(&loss, &sample, &config, &SolverConfig::default()).unwrap();
            let value = objective(&loss, &sample, &config, &out.theta_hat).unwrap();
            let best_vertex =
                (0..m).map(|j| objective(&loss, &sample, &config, &SimplexWeights::vertex(m, j)).unwrap()).fold(f64::INFINITY, f64::min);
            assert!(value <= best_vertex + 1e-12, "{value} vs {best_vertex}, diff {:e}", value - best_vertex);
        }
    }
}

#[test]
fn convex_erm_beats_every_vertex() {
    let mut r = rng(32);
    for loss in losses() {
        for _ in 0..20 {
            let m = r.gen_range(2..=8);
            let (_, sample) = instance(&mut r, m, 50, 1.0);
            let out = convex_erm(&loss, &sample, &SolverConfig::default()).unwrap();
            let best = vertex_risks(&loss, &sample).unwrap().into_iter().fold(f64::INFINITY, f64::min);
            let cert = out.solver.as_ref().unwrap().certificate;
            assert!(out.empirical_risk <= best + cert);
        }
    }
}

#[test]
fn near_one_nu_selects_penalized_erm_vertex() {
    // columns with well separated risks; the linear part dominates as nu -> 1
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![0.9, 0.1, -0.5 + 0.01 * i as f64]).collect();
    let labels = vec![1.0; 20];
    let sample = LabeledSample::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
    let loss = LossModel::squared(1.0).unwrap();
    let config = AggregationConfig::new(1.0 - 1e-12, Beta::Fixed(1.0), Prior::uniform(3)).unwrap();
    let out = q_aggregate(&loss, &sample, &config, &SolverConfig::default()).unwrap();
    let erm = erm_select(&loss, &sample).unwrap();
    assert_eq!(erm.theta_hat.as_slice(), &[1.0, 0.0, 0.0]);
    assert!((out.theta_hat.as_slice()[0] - 1.0).abs() <= 1e-9, "{:?}", out.theta_hat);
}

#[test]
fn reported_risk_is_recomputed() {
    let mut r = rng(33);
    let loss = LossModel::squared(1.0).unwrap();
    let (_, sample) = instance(&mut r, 3, 30, 1.0);
    let out = q_aggregate(&loss, &sample, &AggregationConfig::uniform(3), &SolverConfig::default()).unwrap();
    let f = qagg_core::risk::mixture(&out.theta_hat, &sample.predictions).unwrap();
    assert_eq!(out.empirical_risk, qagg_core::risk::empirical_risk(&loss, &sample, &f).unwrap());
}

#[test]
fn single_function_dictionary() {
    let sample = LabeledSample::new(Matrix::from_rows(&[vec![0.3], vec![-0.2]]).unwrap(), vec![1.0, -1.0]).unwrap();
    let loss = LossModel::squared(1.0).unwrap();
    let out = q_aggregate(&loss, &sample, &AggregationConfig::uniform(1), &SolverConfig::default()).unwrap();
    assert_eq!(out.theta_hat.as_slice(), &[1.0]);
}

#[test]
fn out_of_box_prediction_is_rejected() {
    let sample = LabeledSample::new(Matrix::from_rows(&[vec![1.5, 0.0]]).unwrap(), vec![1.0]).unwrap();
    let loss = LossModel::squared(1.0).unwrap();
    assert!(matches!(q_aggregate(&loss, &sample, &AggregationConfig::uniform(2), &SolverConfig::default()), Err(Error::Domain(_))));
}
