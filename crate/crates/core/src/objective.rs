//! Objectives over the simplex consumed by the solvers.

use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::model::{LabeledSample, Matrix, PopulationModel, PredictionMatrix, Prior};
use crate::risk::mixture_raw;

/// A convex function on the simplex with a (sub)gradient oracle.
pub trait SimplexObjective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    fn gradient(&self, theta: &[f64], out: &mut [f64]);

    /// Bound on `sup |grad_j|`, so that `|f(a) - f(b)| <= L |a - b|_1`.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
}

/// Adapter turning a pair of closures into a [`SimplexObjective`].
pub struct FnObjective<F, G> {
    dim: usize,
    value: F,
    gradient: G,
    lipschitz: Option<f64>,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        FnObjective { dim, value, gradient, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl<F, G> SimplexObjective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (self.value)(theta)
    }
    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        (self.gradient)(theta, out)
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

#[derive(Debug, Clone, Copy)]
enum RowWeights<'a> {
    /// `1/n` each.
    Uniform,
    Probabilities(&'a [f64]),
}

/// `w * sum_i q_i l(y_i, f_theta(x_i)) + c' theta - mu theta' G theta`
///
/// With empirical weights this is the Q-aggregation objective; with population
/// weights and the `mu` term it is the oracle objective
/// `R~(theta) + mu V(theta) + (beta/n) K(theta)`.
#[derive(Debug, Clone)]
pub struct AggregationObjective<'a> {
    loss: &'a LossModel,
    predictions: &'a PredictionMatrix,
    labels: &'a [f64],
    weights: RowWeights<'a>,
    smooth_weight: f64,
    linear: Vec<f64>,
    quadratic: Option<(f64, Matrix)>,
}

impl<'a> AggregationObjective<'a> {
    /// `(1 - nu) R_n(f_theta) + sum_j theta_j [nu R_n(f_j) + (beta/n) log(1/pi_j)]`.
    ///
    /// `nu` may be 0 or 1 and `beta` may be 0, which covers convex-hull ERM.
    pub fn empirical(loss: &'a LossModel, sample: &'a LabeledSample, nu: f64, beta: f64, prior: &Prior) -> Result<Self> {
        check_params(nu, beta)?;
        sample.validate(loss)?;
        if prior.dim() != sample.m() {
            return Err(Error::DimensionMismatch { what: "prior", expected: sample.m(), got: prior.dim() });
        }
        let n = sample.n() as f64;
        let mut obj = AggregationObjective {
            loss,
            predictions: &sample.predictions,
            labels: &sample.labels,
            weights: RowWeights::Uniform,
            smooth_weight: 1.0 - nu,
            linear: Vec::new(),
            quadratic: None,
        };
        let log_inv = prior.log_inverse();
        obj.linear = (0..sample.m()).map(|j| nu * obj.column_risk(j) + beta / n * log_inv[j]).collect();
        Ok(obj)
    }

    /// `R~(theta) + mu V(theta) + (beta/n) K(theta)` on the population.
    pub fn oracle(loss: &'a LossModel, pop: &'a PopulationModel, nu: f64, beta: f64, n: usize, mu: f64, prior: &Prior) -> Result<Self> {
        check_params(nu, beta)?;
        pop.validate(loss)?;
        if prior.dim() != pop.m() {
            return Err(Error::DimensionMismatch { what: "prior", expected: pop.m(), got: prior.dim() });
        }
        let gram = pop.gram();
        let mut obj = AggregationObjective {
            loss,
            predictions: &pop.support_predictions,
            labels: &pop.support_labels,
            weights: RowWeights::Probabilities(&pop.probabilities),
            smooth_weight: 1.0 - nu,
            linear: Vec::new(),
            quadratic: None,
        };
        let log_inv = prior.log_inverse();
        obj.linear = (0..pop.m()).map(|j| nu * obj.column_risk(j) + mu * gram.get(j, j) + beta / n as f64 * log_inv[j]).collect();
        obj.quadratic = Some((mu, gram));
        Ok(obj)
    }

    fn weighted_sum(&self, f_values: &[f64], mut term: impl FnMut(usize, f64, f64) -> f64) -> f64 {
        match self.weights {
            RowWeights::Uniform => {
                let s: f64 = f_values.iter().enumerate().map(|(i, &a)| term(i, self.labels[i], a)).sum();
                s / self.labels.len() as f64
            }
            RowWeights::Probabilities(p) => f_values.iter().enumerate().map(|(i, &a)| p[i] * term(i, self.labels[i], a)).sum(),
        }
    }

    fn column_risk(&self, j: usize) -> f64 {
        let col = self.predictions.column(j);
        self.weighted_sum(&col, |_, y, a| self.loss.value_unchecked(y, a))
    }

    /// Linear coefficients `c_j`.
    pub fn linear_terms(&self) -> &[f64] {
        &self.linear
    }
}

fn check_params(nu: f64, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::InvalidParameter(format!("nu must lie in [0, 1], got {nu}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
    }
    Ok(())
}

impl SimplexObjective for AggregationObjective<'_> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let mut v: f64 = self.linear.iter().zip(theta).map(|(c, t)| c * t).sum();
        if self.smooth_weight != 0.0 {
            let f = mixture_raw(theta, self.predictions);
            v += self.smooth_weight * self.weighted_sum(&f, |_, y, a| self.loss.value_unchecked(y, a));
        }
        if let Some((mu, g)) = &self.quadratic {
            let m = theta.len();
            let q: f64 = (0..m).map(|j| theta[j] * (0..m).map(|k| g.get(j, k) * theta[k]).sum::<f64>()).sum();
            v -= mu * q;
        }
        v
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.linear);
        if self.smooth_weight != 0.0 {
            let m = theta.len();
            let f = mixture_raw(theta, self.predictions);
            let mut acc = vec![0.0; m];
            let rows = self.predictions.rows();
            for i in 0..rows {
                let (_, d) = self.loss.eval_unchecked(self.labels[i], f[i]);
                let w = match self.weights {
                    RowWeights::Uniform => d,
                    RowWeights::Probabilities(p) => p[i] * d,
                };
                for (a, &x) in acc.iter_mut().zip(self.predictions.row(i)) {
                    *a += w * x;
                }
            }
            let scale = match self.weights {
                RowWeights::Uniform => self.smooth_weight / rows as f64,
                RowWeights::Probabilities(_) => self.smooth_weight,
            };
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += scale * a;
            }
        }
        if let Some((mu, g)) = &self.quadratic {
            for (j, o) in out.iter_mut().enumerate() {
                let gt: f64 = theta.iter().enumerate().map(|(k, t)| g.get(j, k) * t).sum();
                *o -= 2.0 * mu * gt;
            }
        }
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        let b = self.loss.b;
        let lin = self.linear.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let quad = self.quadratic.as_ref().map_or(0.0, |(mu, _)| 2.0 * mu * b * b);
        Some(self.smooth_weight * self.loss.c_b * b + lin + quad)
    }
}
