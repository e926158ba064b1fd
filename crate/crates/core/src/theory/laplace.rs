use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{mean_and_se, TailReport};
use crate::error::{Error, Result};

/// Bounded discrete law of `Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedLaw {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl BoundedLaw {
    pub fn new(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probabilities.len() {
            return Err(Error::InvalidParameter("law needs matching non-empty values and probabilities".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("law probabilities must be nonnegative and sum to 1".into()));
        }
        Ok(BoundedLaw { values, probabilities })
    }

    /// `+-c` with probability 1/2 each.
    pub fn rademacher(c: f64) -> Self {
        BoundedLaw { values: vec![-c, c], probabilities: vec![0.5, 0.5] }
    }

    pub fn constant(c: f64) -> Self {
        BoundedLaw { values: vec![c], probabilities: vec![1.0] }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * v * p).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceCheckSpec {
    pub law: BoundedLaw,
    /// Almost-sure bound `|Z| <= c`.
    pub c: f64,
    /// Shift coefficient on `E Z^2`.
    pub c0: f64,
    pub lambda: f64,
    pub n: usize,
    pub draws: usize,
    pub seed: u64,
}

impl LaplaceCheckSpec {
    /// Largest admissible `lambda` (exclusive): `2 c0 / (1 + 2 c0 c)`.
    pub fn lambda_limit(&self) -> f64 {
        2.0 * self.c0 / (1.0 + 2.0 * self.c0 * self.c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("need c > 0 and c0 > 0 (c = {}, c0 = {})", self.c, self.c0)));
        }
        if self.law.sup_abs() > self.c {
            return Err(Error::InvalidParameter(format!("law exceeds |Z| <= c = {}", self.c)));
        }
        let limit = self.lambda_limit();
        if !(self.lambda > 0.0 && self.lambda < limit) {
            return Err(Error::Domain(format!("lambda = {} outside (0, {limit})", self.lambda)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.draws < 10_000 {
            return Err(Error::InvalidParameter(format!("need at least 10^4 draws, got {}", self.draws)));
        }
        Ok(())
    }

    /// Exact `E exp[sign * lambda (sum Z_i - n EZ) - n lambda c0 EZ^2]` for the discrete law.
    pub fn exact_value(&self, sign: f64) -> f64 {
        let (m, v) = (self.law.mean(), self.law.second_moment());
        let per: f64 = self
            .law
            .values
            .iter()
            .zip(&self.law.probabilities)
            .map(|(z, p)| p * (self.lambda * (sign * (z - m) - self.c0 * v)).exp())
            .sum();
        per.powi(self.n as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinReport {
    /// `E exp[n lambda ((1/n) sum Z_i - EZ - c0 EZ^2)] <= 1`
    pub upper: TailReport,
    /// Sign-flipped variant `E exp[n lambda (EZ - (1/n) sum Z_i - c0 EZ^2)] <= 1`
    pub lower: TailReport,
    pub exact_upper: f64,
    pub exact_lower: f64,
}

/// Monte Carlo check of the shifted Bernstein bound in both directions.
pub fn bernstein_laplace_check(spec: &LaplaceCheckSpec) -> Result<BernsteinReport> {
    spec.validate()?;
    let dist = WeightedIndex::new(&spec.law.probabilities).map_err(|e| Error::InvalidParameter(format!("law: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n as f64;
    let (m, v) = (spec.law.mean(), spec.law.second_moment());
    let mut up = Vec::with_capacity(spec.draws);
    let mut down = Vec::with_capacity(spec.draws);
    for _ in 0..spec.draws {
        let sum: f64 = (0..spec.n).map(|_| spec.law.values[dist.sample(&mut rng)]).sum();
        let centered = sum - n * m;
        let shift = n * spec.c0 * v;
        up.push((spec.lambda * (centered - shift)).exp());
        down.push((spec.lambda * (-centered - shift)).exp());
    }
    let (mu_up, se_up) = mean_and_se(&up);
    let (mu_dn, se_dn) = mean_and_se(&down);
    Ok(BernsteinReport {
        upper: TailReport::monte_carlo(mu_up, se_up, 1.0),
        lower: TailReport::monte_carlo(mu_dn, se_dn, 1.0),
        exact_upper: spec.exact_value(1.0),
        exact_lower: spec.exact_value(-1.0),
    })
}

/// `log cosh a`, accurate for small and large `|a|`.
fn log_cosh(a: f64) -> f64 {
    let x = a.abs();
    if x < 0.5 {
        let s = (0.5 * x).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// Exact comparison of `E exp(sum eps_i a_i) = prod cosh a_i` with
/// `exp(sum a_i^2 / 2)`, made in log space; the only allowance is a few ulps
/// of rounding.
pub fn rademacher_laplace_check(a: &[f64]) -> TailReport {
    let lhs: f64 = a.iter().map(|&x| log_cosh(x)).sum();
    let rhs: f64 = a.iter().map(|&x| 0.5 * x * x).sum();
    let pass = lhs <= rhs + 4.0 * f64::EPSILON * rhs.abs();
    TailReport::exact(lhs.exp(), rhs.exp(), pass)
}
