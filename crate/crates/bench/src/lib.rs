//! Fixtures shared by the solver benchmarks.

use qagg_core::{generate_problem, sample_from, GeneratorSpec, LabeledSample};

/// Sample of size `n` from a seeded random dictionary with `m` columns.
pub fn fixture(m: usize, n: usize, seed: u64) -> LabeledSample {
    let pop = generate_problem(&GeneratorSpec::random_dict(m, 50, 1.0, seed)).expect("valid generator");
    sample_from(&pop, n, seed ^ 0x5eed).expect("positive sample size")
}
