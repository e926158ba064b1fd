use serde::Serialize;

use super::TailReport;
use crate::error::Result;
use crate::loss::{LossKind, LossModel};
use crate::model::{Matrix, PopulationModel, SimplexWeights};
use crate::risk::{h_form, h_matrix, mixture, mixture_distance_sq, population_risk, population_vertex_risks, spread_around, variance_v};

/// `R~(theta) = (1 - nu) R(f_theta) + nu sum_j theta_j R(f_j)`.
pub fn population_q(loss: &LossModel, pop: &PopulationModel, theta: &SimplexWeights, nu: f64) -> Result<f64> {
    let f = mixture(theta, &pop.support_predictions)?;
    let mixed = population_risk(loss, pop, &f)?;
    let linear: f64 = population_vertex_risks(loss, pop)?.iter().zip(theta.as_slice()).map(|(r, t)| r * t).sum();
    Ok((1.0 - nu) * mixed + nu * linear)
}

/// Exact check of `R(f_theta) <= sum_j theta_j R(f_j) - (C_l/2) V(theta)`
/// on the finite support, with `1e-10` allowance for rounding.
pub fn jensen_gap_check(loss: &LossModel, pop: &PopulationModel, theta: &SimplexWeights) -> Result<TailReport> {
    let lhs = population_q(loss, pop, theta, 0.0)?;
    let linear = population_q(loss, pop, theta, 1.0)?;
    let v = variance_v(theta, &pop.gram())?;
    let rhs = linear - 0.5 * loss.c_l * v;
    Ok(TailReport::exact(lhs, rhs, lhs <= rhs + 1e-10))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `sum_j theta_j ||f_j - f_other||^2` against `V(theta) + ||f_theta - f_other||^2`.
    pub first: f64,
    /// `theta' H other` against `V(theta) + V(other) + ||f_other - f_theta||^2`.
    pub second: f64,
    pub v_theta: f64,
    pub v_other: f64,
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relative residuals of the two quadratic identities linking `V`, `H` and
/// the mixture distance, each side computed from the Gram matrix.
pub fn identity_residuals(gram: &Matrix, theta: &SimplexWeights, other: &SimplexWeights) -> Result<IdentityResiduals> {
    let v_theta = variance_v(theta, gram)?;
    let v_other = variance_v(other, gram)?;
    let dist = mixture_distance_sq(theta, other, gram)?;
    let spread = spread_around(theta, other, gram)?;
    let h = h_matrix(gram)?;
    let cross = h_form(theta, &h, other)?;
    Ok(IdentityResiduals { first: relative(spread, v_theta + dist), second: relative(cross, v_theta + v_other + dist), v_theta, v_other })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossCertificate {
    pub triples: usize,
    /// `max |l(y,a) - l(y,a')| / |a - a'|` over the grid; at most `C_b`.
    pub max_lipschitz_ratio: f64,
    /// Smallest slack of the strong-convexity inequality over the grid.
    pub min_convexity_slack: f64,
    pub pass: bool,
}

/// Grid scan of the Lipschitz and strong-convexity inequalities with the
/// constants carried by `loss`.
pub fn certify_loss(loss: &LossModel, target_triples: usize) -> LossCertificate {
    let b = loss.b;
    let labels: Vec<f64> = match loss.kind {
        LossKind::Logistic => vec![-1.0, 1.0],
        _ => {
            let k = (target_triples as f64).cbrt().ceil().max(2.0) as usize;
            (0..k).map(|i| -b + 2.0 * b * i as f64 / (k - 1) as f64).collect()
        }
    };
    let per_axis = ((target_triples as f64 / labels.len() as f64).sqrt().ceil() as usize).max(2);
    let grid: Vec<f64> = (0..per_axis).map(|i| -b + 2.0 * b * i as f64 / (per_axis - 1) as f64).collect();
    let alphas = [0.1, 0.25, 0.5, 0.75, 0.9];
    let tol = 1e-12;
    let mut max_ratio = 0.0f64;
    let mut min_slack = f64::INFINITY;
    let mut pass = true;
    let mut triples = 0;
    for &y in &labels {
        for &a in &grid {
            for &a2 in &grid {
                triples += 1;
                let la = loss.value_unchecked(y, a);
                let lb = loss.value_unchecked(y, a2);
                if a != a2 {
                    let ratio = (la - lb).abs() / (a - a2).abs();
                    max_ratio = max_ratio.max(ratio);
                    if (la - lb).abs() > loss.c_b * (a - a2).abs() + tol {
                        pass = false;
                    }
                }
                for &al in &alphas {
                    let mid = loss.value_unchecked(y, al * a + (1.0 - al) * a2);
                    let rhs = al * la + (1.0 - al) * lb - 0.5 * loss.c_l * al * (1.0 - al) * (a - a2).powi(2);
                    let slack = rhs - mid;
                    min_slack = min_slack.min(slack);
                    if slack < -tol {
                        pass = false;
                    }
                }
            }
        }
    }
    LossCertificate { triples, max_lipschitz_ratio: max_ratio, min_convexity_slack: min_slack, pass }
}
