//! Synthetic finite-support problems and i.i.d. sampling from them.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LabeledSample, Matrix, PopulationModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// One covariate atom, `f_1 = b t`, `f_2 = -b t`, `P(Y = b) = 1/2 + delta`.
    TwoExpertNearTie,
    /// Uniform covariate atoms, dictionary entries uniform on `[-a b, a b]`,
    /// labels `+-b` with a random regression pattern.
    RandomBoundedDict,
    /// `f_j(x) = a b * (random sign)`, labels independent fair `+-b`.
    SignNoise,
}

impl GeneratorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two-expert-near-tie" => Ok(GeneratorKind::TwoExpertNearTie),
            "random-bounded-dict" => Ok(GeneratorKind::RandomBoundedDict),
            "sign-noise" => Ok(GeneratorKind::SignNoise),
            other => Err(Error::InvalidParameter(format!("unknown generator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Dictionary size `M` (must be 2 for the near-tie problem).
    pub m: usize,
    /// Number of covariate atoms (ignored by the near-tie problem).
    pub support: usize,
    pub b: f64,
    /// Label bias `delta` of the near-tie problem.
    pub gap: f64,
    /// Dictionary amplitude as a fraction of `b` (`t` for the near-tie problem).
    pub amplitude: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn near_tie(b: f64, delta: f64) -> Self {
        GeneratorSpec { kind: GeneratorKind::TwoExpertNearTie, m: 2, support: 1, b, gap: delta, amplitude: 0.5, seed: 0 }
    }

    pub fn random_dict(m: usize, support: usize, b: f64, seed: u64) -> Self {
        GeneratorSpec { kind: GeneratorKind::RandomBoundedDict, m, support, b, gap: 0.0, amplitude: 1.0, seed }
    }

    pub fn sign_noise(m: usize, support: usize, b: f64, gamma: f64, seed: u64) -> Self {
        GeneratorSpec { kind: GeneratorKind::SignNoise, m, support, b, gap: 0.0, amplitude: gamma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.b > 0.0) || !self.b.is_finite() {
            return bad(format!("b must be positive, got {}", self.b));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return bad(format!("amplitude must lie in (0, 1], got {}", self.amplitude));
        }
        if self.m == 0 || self.support == 0 {
            return bad("M and the support size must be positive".into());
        }
        if self.kind == GeneratorKind::TwoExpertNearTie {
            if self.m != 2 {
                return bad(format!("the near-tie problem has exactly two experts, got M = {}", self.m));
            }
            if !(0.0..=0.5).contains(&self.gap) {
                return bad(format!("near-tie gap must lie in [0, 1/2], got {}", self.gap));
            }
        }
        Ok(())
    }
}

/// Label bias keeping ERM at a constant error probability for sample size `n`.
pub fn near_tie_gap(n: usize) -> f64 {
    0.25 / (n as f64).sqrt()
}

/// Deterministic in `spec.seed`.
pub fn generate_problem(spec: &GeneratorSpec) -> Result<PopulationModel> {
    spec.validate()?;
    let b = spec.b;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (rows, labels, probs): (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) = match spec.kind {
        GeneratorKind::TwoExpertNearTie => {
            let a = b * spec.amplitude;
            (vec![vec![a, -a], vec![a, -a]], vec![b, -b], vec![0.5 + spec.gap, 0.5 - spec.gap])
        }
        GeneratorKind::RandomBoundedDict => {
            let s = spec.support;
            let a = b * spec.amplitude;
            let (mut rows, mut labels, mut probs) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..s {
                let f: Vec<f64> = (0..spec.m).map(|_| rng.gen_range(-a..=a)).collect();
                let eta: f64 = rng.gen_range(-1.0..=1.0);
                for (y, p) in [(b, 0.5 * (1.0 + eta)), (-b, 0.5 * (1.0 - eta))] {
                    rows.push(f.clone());
                    labels.push(y);
                    probs.push(p / s as f64);
                }
            }
            (rows, labels, probs)
        }
        GeneratorKind::SignNoise => {
            let s = spec.support;
            let gamma = b * spec.amplitude;
            let (mut rows, mut labels, mut probs) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..s {
                let f: Vec<f64> = (0..spec.m).map(|_| if rng.gen::<bool>() { gamma } else { -gamma }).collect();
                for y in [b, -b] {
                    rows.push(f.clone());
                    labels.push(y);
                    probs.push(0.5 / s as f64);
                }
            }
            (rows, labels, probs)
        }
    };
    PopulationModel::new(Matrix::from_rows(&rows)?, labels, probs)
}

/// `n` i.i.d. draws of support atoms; deterministic in `seed`.
pub fn sample_from(pop: &PopulationModel, n: usize, seed: u64) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let dist = WeightedIndex::new(&pop.probabilities).map_err(|e| Error::InvalidParameter(format!("probabilities: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = pop.m();
    let mut values = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let s = dist.sample(&mut rng);
        values.extend_from_slice(pop.support_predictions.row(s));
        labels.push(pop.support_labels[s]);
    }
    LabeledSample::new(Matrix::new(n, m, values)?, labels)
}

/// Atom indices drawn by [`sample_from`] for the same seed.
pub fn sample_atoms(pop: &PopulationModel, n: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(&pop.probabilities).map_err(|e| Error::InvalidParameter(format!("probabilities: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}
