//! Exact and Monte Carlo checks of the concentration bounds, convexity
//! identities and the oracle inequality.

mod checks;
mod experiments;
mod laplace;
mod suite;

use serde::Serialize;

pub use checks::{certify_loss, identity_residuals, jensen_gap_check, population_q, IdentityResiduals, LossCertificate};
pub use experiments::{
    oracle_inequality_experiment, rate_experiment, zn_statistic, zn_tail_experiment, ExperimentOptions, ZnReport, ZnTail,
};
pub use laplace::{bernstein_laplace_check, rademacher_laplace_check, BernsteinReport, BoundedLaw, LaplaceCheckSpec};
pub use suite::{run_verification_suite, CheckOutcome, SuiteOptions};

/// Number of standard errors allowed above a bound in Monte Carlo checks.
pub const MC_SLACK_SE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailReport {
    pub estimate: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub pass: bool,
}

impl TailReport {
    /// Monte Carlo verdict: `estimate <= bound + 3 SE`.
    pub fn monte_carlo(estimate: f64, standard_error: f64, bound: f64) -> Self {
        TailReport { estimate, standard_error, bound, pass: estimate <= bound + MC_SLACK_SE * standard_error }
    }

    /// Exact verdict with no statistical slack.
    pub fn exact(value: f64, bound: f64, pass: bool) -> Self {
        TailReport { estimate: value, standard_error: 0.0, bound, pass }
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Frequency of `true` with its binomial standard error.
pub fn frequency_and_se(events: impl Iterator<Item = bool>) -> (f64, f64) {
    let (mut hits, mut total) = (0usize, 0usize);
    for e in events {
        total += 1;
        hits += e as usize;
    }
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`; `None` if any `y <= 0`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}
