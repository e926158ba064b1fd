//! End-to-end aggregation procedures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::model::{AggregationConfig, LabeledSample, Prior, SimplexWeights};
use crate::objective::{AggregationObjective, SimplexObjective};
use crate::risk::{empirical_risk, mixture, vertex_risks};
use crate::solver::{minimize, SolverConfig, SolverResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    QAggregation,
    Erm,
    ConvexErm,
    ExponentialWeights,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::QAggregation, Method::Erm, Method::ConvexErm, Method::ExponentialWeights];

    pub fn name(self) -> &'static str {
        match self {
            Method::QAggregation => "q-aggregation",
            Method::Erm => "erm",
            Method::ConvexErm => "convex-erm",
            Method::ExponentialWeights => "exponential-weights",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub certificate: f64,
    pub converged: bool,
    pub objective_value: f64,
}

impl From<&SolverResult> for SolverDiagnostics {
    fn from(r: &SolverResult) -> Self {
        SolverDiagnostics {
            iterations: r.iterations,
            certificate: r.certificate,
            converged: r.converged,
            objective_value: r.objective_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatorOutput {
    pub method: Method,
    pub theta_hat: SimplexWeights,
    pub solver: Option<SolverDiagnostics>,
    /// `R_n(f_theta_hat)`, recomputed from `theta_hat`.
    pub empirical_risk: f64,
}

fn output(
    method: Method,
    loss: &LossModel,
    sample: &LabeledSample,
    theta: SimplexWeights,
    solver: Option<&SolverResult>,
) -> Result<AggregatorOutput> {
    let f = mixture(&theta, &sample.predictions)?;
    let risk = empirical_risk(loss, sample, &f)?;
    Ok(AggregatorOutput { method, theta_hat: theta, solver: solver.map(SolverDiagnostics::from), empirical_risk: risk })
}

fn require_converged(result: SolverResult) -> Result<SolverResult> {
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NotConverged { certificate: result.certificate, iterations: result.iterations, result: Box::new(result) })
    }
}

/// Q-aggregation: minimizes
/// `(1-nu) R_n(f_theta) + nu sum_j theta_j R_n(f_j) + (beta/n) sum_j theta_j log(1/pi_j)`
/// over the simplex.
///
/// Frank–Wolfe is warm-started at the exponential-weights point, or at the
/// best penalized vertex when that has the smaller objective; descent from
/// there keeps the aggregate no worse than any single dictionary element.
pub fn q_aggregate(
    loss: &LossModel,
    sample: &LabeledSample,
    config: &AggregationConfig,
    solver: &SolverConfig,
) -> Result<AggregatorOutput> {
    let beta = config.resolve_beta(loss)?;
    let obj = AggregationObjective::empirical(loss, sample, config.nu, beta, &config.prior)?;
    let m = sample.m();
    let mut start = exponential_weights(loss, sample, &config.prior, beta)?.theta_hat;
    let mut best = obj.value(start.as_slice());
    for j in 0..m {
        let vertex = SimplexWeights::vertex(m, j);
        let v = obj.value(vertex.as_slice());
        if v < best {
            (start, best) = (vertex, v);
        }
    }
    let result = require_converged(minimize(&obj, solver, Some(&start))?)?;
    output(Method::QAggregation, loss, sample, result.theta_hat.clone(), Some(&result))
}

/// Vertex of smallest empirical risk, lowest index on ties.
pub fn erm_select(loss: &LossModel, sample: &LabeledSample) -> Result<AggregatorOutput> {
    sample.validate(loss)?;
    let risks = vertex_risks(loss, sample)?;
    let mut best = 0;
    for (j, &r) in risks.iter().enumerate() {
        if r < risks[best] {
            best = j;
        }
    }
    output(Method::Erm, loss, sample, SimplexWeights::vertex(sample.m(), best), None)
}

/// Empirical risk minimization over the convex hull (`nu = 0`, `beta = 0`).
pub fn convex_erm(loss: &LossModel, sample: &LabeledSample, solver: &SolverConfig) -> Result<AggregatorOutput> {
    let obj = AggregationObjective::empirical(loss, sample, 0.0, 0.0, &Prior::uniform(sample.m()))?;
    let result = require_converged(minimize(&obj, solver, None)?)?;
    output(Method::ConvexErm, loss, sample, result.theta_hat.clone(), Some(&result))
}

/// `theta_j` proportional to `pi_j exp(-n R_n(f_j) / beta)`.
pub fn exponential_weights(loss: &LossModel, sample: &LabeledSample, prior: &Prior, beta: f64) -> Result<AggregatorOutput> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if prior.dim() != sample.m() {
        return Err(Error::DimensionMismatch { what: "prior", expected: sample.m(), got: prior.dim() });
    }
    sample.validate(loss)?;
    let n = sample.n() as f64;
    let risks = vertex_risks(loss, sample)?;
    let logits: Vec<f64> = risks.iter().zip(prior.as_slice()).map(|(r, p)| p.ln() - n * r / beta).collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    output(Method::ExponentialWeights, loss, sample, SimplexWeights::normalized(weights)?, None)
}

/// Runs one method with the shared configuration; exponential weights uses the
/// Q-aggregation temperature.
pub fn aggregate(
    method: Method,
    loss: &LossModel,
    sample: &LabeledSample,
    config: &AggregationConfig,
    solver: &SolverConfig,
) -> Result<AggregatorOutput> {
    match method {
        Method::QAggregation => q_aggregate(loss, sample, config, solver),
        Method::Erm => erm_select(loss, sample),
        Method::ConvexErm => convex_erm(loss, sample, solver),
        Method::ExponentialWeights => exponential_weights(loss, sample, &config.prior, config.resolve_beta(loss)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Beta, Matrix};

    fn sq() -> LossModel {
        LossModel::squared(1.0).unwrap()
    }

    #[test]
    fn erm_ties_and_argmin() {
        // risks 0.5, 0.3, 0.4 against y = 0 with constant columns
        let a = [0.5f64.sqrt(), 0.3f64.sqrt(), 0.4f64.sqrt()];
        let s = LabeledSample::new(Matrix::from_rows(&[a.to_vec()]).unwrap(), vec![0.0]).unwrap();
        assert_eq!(erm_select(&sq(), &s).unwrap().theta_hat, SimplexWeights::vertex(3, 1));
        let s = LabeledSample::new(Matrix::from_rows(&[vec![0.5, -0.5, 0.5]]).unwrap(), vec![0.0]).unwrap();
        assert_eq!(erm_select(&sq(), &s).unwrap().theta_hat, SimplexWeights::vertex(3, 0));
        let s = LabeledSample::new(Matrix::from_rows(&[vec![0.5]]).unwrap(), vec![0.0]).unwrap();
        assert_eq!(erm_select(&sq(), &s).unwrap().theta_hat, SimplexWeights::vertex(1, 0));
    }

    #[test]
    fn convex_erm_balances_opposite_columns() {
        let s = LabeledSample::new(Matrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap(), vec![0.0, 0.0]).unwrap();
        let out = convex_erm(&sq(), &s, &SolverConfig::default()).unwrap();
        assert!((out.theta_hat.as_slice()[0] - 0.5).abs() < 1e-6);
        assert!(out.empirical_risk < 1e-10);
    }

    #[test]
    fn exponential_weights_closed_forms() {
        // n = 10, risks 0.1 and 0.2 → theta_1 = 1 / (1 + e^-1)
        let a = [0.1f64.sqrt(), 0.2f64.sqrt()];
        let rows: Vec<Vec<f64>> = (0..10).map(|_| a.to_vec()).collect();
        let s = LabeledSample::new(Matrix::from_rows(&rows).unwrap(), vec![0.0; 10]).unwrap();
        let ew = exponential_weights(&sq(), &s, &Prior::uniform(2), 1.0).unwrap();
        assert!((ew.theta_hat.as_slice()[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);

        let prior = Prior::new(vec![0.2, 0.8]).unwrap();
        let hot = exponential_weights(&sq(), &s, &prior, 1e12).unwrap();
        assert!((hot.theta_hat.as_slice()[0] - 0.2).abs() <= 1e-9);

        let tie = LabeledSample::new(Matrix::from_rows(&[vec![0.5, -0.5]]).unwrap(), vec![0.0]).unwrap();
        let ew = exponential_weights(&sq(), &tie, &prior, 3.0).unwrap();
        assert_eq!(ew.theta_hat.as_slice(), prior.as_slice());
        assert!(exponential_weights(&sq(), &tie, &prior, 0.0).is_err());
    }

    #[test]
    fn q_aggregate_singleton() {
        let s = LabeledSample::new(Matrix::from_rows(&[vec![0.5], vec![-0.2]]).unwrap(), vec![1.0, 0.0]).unwrap();
        let cfg = AggregationConfig::new(0.5, Beta::Auto, Prior::uniform(1)).unwrap();
        let out = q_aggregate(&sq(), &s, &cfg, &SolverConfig::default()).unwrap();
        assert_eq!(out.theta_hat.as_slice(), &[1.0]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("star").is_err());
    }
}
