#![allow(dead_code)]

use qagg_core::{generate_problem, sample_from, GeneratorSpec, LabeledSample, LossModel, PopulationModel, SimplexWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> SimplexWeights {
    let raw: Vec<f64> = (0..m).map(|_| -rng.gen_range(1e-12..1.0f64).ln()).collect();
    SimplexWeights::normalized(raw).unwrap()
}

pub fn population(rng: &mut ChaCha8Rng, m: usize, b: f64) -> PopulationModel {
    let support = rng.gen_range(2..=10);
    generate_problem(&GeneratorSpec::random_dict(m, support, b, rng.gen())).unwrap()
}

pub fn instance(rng: &mut ChaCha8Rng, m: usize, n: usize, b: f64) -> (PopulationModel, LabeledSample) {
    let pop = population(rng, m, b);
    let sample = sample_from(&pop, n, rng.gen()).unwrap();
    (pop, sample)
}

pub fn losses() -> Vec<LossModel> {
    vec![LossModel::squared(1.0).unwrap(), LossModel::logistic(1.0).unwrap()]
}

/// Plain-loop loss value, independent of the library's evaluation path.
pub fn loss_value(loss: &LossModel, y: f64, a: f64) -> f64 {
    match loss.kind.name() {
        "squared" => (y - a) * (y - a),
        "logistic" => (1.0 + (-y * a).exp()).ln(),
        other => panic!("no oracle for {other}"),
    }
}
