//! Constants of the temperature bound and the conditions of the proof chain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::LossModel;

/// Automatic temperature = lower bound times this factor, so that the strict
/// inequality holds with margin.
pub const AUTO_BETA_FACTOR: f64 = 1.01;

/// Relative tolerance on the non-strict conditions (a), (b), (c), which hold
/// with equality at the default choices and are exposed to rounding there.
pub const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub satisfied: bool,
    /// Right-hand side minus left-hand side; nonnegative when satisfied.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub mu: f64,
    pub beta_min: f64,
    pub beta_terms: [f64; 3],
    pub beta: f64,
    pub s: f64,
    pub conditions: Vec<Condition>,
}

impl CalibrationReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn condition(&self, prefix: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name.starts_with(prefix))
    }
}

/// `mu = min(nu, 1 - nu) C_l / 10`.
pub fn default_mu(nu: f64, c_l: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    if !(c_l > 0.0) || !c_l.is_finite() {
        return Err(Error::Domain(format!("C_l must be positive, got {c_l}")));
    }
    Ok(nu.min(1.0 - nu) * c_l / 10.0)
}

/// The three terms of the temperature lower bound:
/// `12 C_b^2 (1-nu)^2 / mu`, `6 sqrt(3) b C_b (1-nu)`, `3 C_b nu (nu C_b + 4 mu b) / (2 mu)`.
pub fn beta_terms(nu: f64, c_b: f64, b: f64, mu: f64) -> Result<[f64; 3]> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    if !(nu > 0.0 && nu < 1.0) || !(c_b > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!("need 0 < nu < 1, C_b > 0, b > 0 (nu = {nu}, C_b = {c_b}, b = {b})")));
    }
    let one_m = 1.0 - nu;
    Ok([
        12.0 * c_b * c_b * one_m * one_m / mu,
        6.0 * 3f64.sqrt() * b * c_b * one_m,
        3.0 * c_b * nu * (nu * c_b + 4.0 * mu * b) / (2.0 * mu),
    ])
}

/// Temperature lower bound: a report with `mu`, the three terms and their
/// maximum. `beta` is the automatic choice and `s = 3n/beta` is left at 0
/// (there is no `n` here); conditions are empty.
pub fn beta_lower_bound(nu: f64, c_b: f64, c_l: f64, b: f64, mu: f64) -> Result<CalibrationReport> {
    if !(c_l > 0.0) {
        return Err(Error::Domain(format!("C_l must be positive, got {c_l}")));
    }
    let terms = beta_terms(nu, c_b, b, mu)?;
    let beta_min = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(CalibrationReport { mu, beta_min, beta_terms: terms, beta: AUTO_BETA_FACTOR * beta_min, s: 0.0, conditions: Vec::new() })
}

/// `AUTO_BETA_FACTOR` times the lower bound at the default `mu`.
pub fn auto_beta(nu: f64, loss: &LossModel) -> Result<f64> {
    let mu = default_mu(nu, loss.c_l)?;
    Ok(beta_lower_bound(nu, loss.c_b, loss.c_l, loss.b, mu)?.beta)
}

fn non_strict(name: &str, lhs: f64, rhs: f64) -> Condition {
    let slack = rhs - lhs;
    Condition { name: name.to_string(), satisfied: slack >= -EQUALITY_TOL * lhs.abs().max(rhs.abs()), slack }
}

fn strict(name: &str, lhs: f64, rhs: f64) -> Condition {
    Condition { name: name.to_string(), satisfied: lhs < rhs, slack: rhs - lhs }
}

/// Evaluates every condition used to turn the exponential-moment bound into
/// the oracle inequality. A failing condition is a report entry, not an error.
#[allow(clippy::too_many_arguments)]
pub fn validate_conditions(n: usize, s: f64, mu: f64, beta: f64, nu: f64, c_b: f64, c_l: f64, b: f64) -> Result<CalibrationReport> {
    let mut report = beta_lower_bound(nu, c_b, c_l, b, mu)?;
    if !(s > 0.0) || !(beta > 0.0) || n == 0 {
        return Err(Error::Domain(format!("need n >= 1, s > 0, beta > 0 (n = {n}, s = {s}, beta = {beta})")));
    }
    let nf = n as f64;
    let one_m = 1.0 - nu;
    report.beta = beta;
    report.s = s;
    report.conditions = vec![
        non_strict("(a) 10 mu <= min(nu, 1-nu) C_l", 10.0 * mu, nu.min(one_m) * c_l),
        non_strict("(b) beta >= 3n/s", 3.0 * nf / s, beta),
        non_strict("(c) s <= mu n / [2 C_b (1-nu)]^2", s, mu * nf / (2.0 * c_b * one_m).powi(2)),
        strict("(d) s < n / [2 sqrt(3) b C_b (1-nu)]", s, nf / (2.0 * 3f64.sqrt() * b * c_b * one_m)),
        strict("(e) s < 2 mu n / [C_b nu (nu C_b + 4 mu b)]", s, 2.0 * mu * nf / (c_b * nu * (nu * c_b + 4.0 * mu * b))),
    ];
    Ok(report)
}

/// Full calibration at the default `mu`, automatic (or given) `beta` and `s = 3n/beta`.
pub fn calibrate(loss: &LossModel, nu: f64, beta: Option<f64>, n: usize) -> Result<CalibrationReport> {
    let mu = default_mu(nu, loss.c_l)?;
    let beta = match beta {
        Some(b) => b,
        None => auto_beta(nu, loss)?,
    };
    validate_conditions(n, 3.0 * n as f64 / beta, mu, beta, nu, loss.c_b, loss.c_l, loss.b)
}
