//! Minimization over the flat simplex.
//!
//! Three methods share one contract: away-step Frank–Wolfe with a duality-gap
//! certificate, entropic mirror descent (certificate = Frank–Wolfe gap of the
//! returned point) and an exhaustive lattice search for `M <= 4` used as an
//! independent oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::model::{AggregationConfig, PopulationModel, SimplexWeights};
use crate::objective::{AggregationObjective, SimplexObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    FrankWolfe,
    MirrorDescent,
    Grid,
}

impl SolverMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frank-wolfe" => Ok(SolverMethod::FrankWolfe),
            "mirror-descent" => Ok(SolverMethod::MirrorDescent),
            "grid" => Ok(SolverMethod::Grid),
            other => Err(Error::InvalidParameter(format!("unknown solver method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub gap_tolerance: f64,
    pub max_iterations: usize,
    /// Lattice points per simplex edge for [`SolverMethod::Grid`].
    pub grid_resolution: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: SolverMethod::FrankWolfe, gap_tolerance: 1e-8, max_iterations: 100_000, grid_resolution: 200 }
    }
}

impl SolverConfig {
    pub fn with_method(method: SolverMethod) -> Self {
        SolverConfig { method, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("gap tolerance must be positive, got {}", self.gap_tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub theta_hat: SimplexWeights,
    pub objective_value: f64,
    /// Frank–Wolfe gap, or the mesh bound for the grid.
    pub certificate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting point first.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Largest number of lattice points the grid search will visit.
pub const GRID_POINT_BUDGET: u128 = 20_000_000;

/// Roundoff allowance when comparing objective values across a step.
fn roundoff(f: f64) -> f64 {
    1e-14 * f.abs().max(1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest index attaining the minimum.
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = j;
        }
    }
    best
}

/// `max_j grad . (theta - e_j)`.
pub fn frank_wolfe_gap(grad: &[f64], theta: &[f64]) -> f64 {
    (dot(grad, theta) - grad[argmin(grad)]).max(0.0)
}

fn singleton(obj: &dyn SimplexObjective) -> SolverResult {
    let v = obj.value(&[1.0]);
    SolverResult {
        theta_hat: SimplexWeights::vertex(1, 0),
        objective_value: v,
        certificate: 0.0,
        iterations: 0,
        converged: true,
        history: vec![v],
    }
}

fn finish(theta: Vec<f64>, value: f64, certificate: f64, iterations: usize, converged: bool, history: Vec<f64>) -> Result<SolverResult> {
    Ok(SolverResult { theta_hat: SimplexWeights::normalized(theta)?, objective_value: value, certificate, iterations, converged, history })
}

fn check_start(start: Option<&SimplexWeights>, m: usize) -> Result<Vec<f64>> {
    match start {
        Some(s) if s.dim() != m => Err(Error::DimensionMismatch { what: "warm start", expected: m, got: s.dim() }),
        Some(s) => Ok(s.as_slice().to_vec()),
        None => Ok(vec![1.0 / m as f64; m]),
    }
}

/// Step along `theta + gamma * dir`, `gamma in [0, gamma_max]`.
///
/// The candidate is the root of the directional derivative (Illinois
/// bracketing); it is then accepted by backtracking on objective values, with
/// `2/(t+2)` as the last resort.
#[allow(clippy::too_many_arguments)]
fn line_search(
    obj: &dyn SimplexObjective,
    theta: &[f64],
    dir: &[f64],
    gamma_max: f64,
    slope0: f64,
    f0: f64,
    t: usize,
    scratch: &mut [f64],
) -> Option<(f64, f64)> {
    let m = theta.len();
    let mut point = vec![0.0; m];
    let slope_at = |g: f64, point: &mut Vec<f64>, scratch: &mut [f64]| {
        for j in 0..m {
            point[j] = theta[j] + g * dir[j];
        }
        obj.gradient(point, scratch);
        dot(scratch, dir)
    };

    let candidate = {
        let s_max = slope_at(gamma_max, &mut point, scratch);
        if !s_max.is_finite() {
            None
        } else if s_max <= 0.0 {
            Some(gamma_max)
        } else {
            let (mut lo, mut hi) = (0.0, gamma_max);
            let (mut s_lo, mut s_hi) = (slope0, s_max);
            let mut side = 0i8;
            let mut g = gamma_max;
            for _ in 0..100 {
                g = (lo * s_hi - hi * s_lo) / (s_hi - s_lo);
                if !(g > lo && g < hi) {
                    g = 0.5 * (lo + hi);
                }
                let s = slope_at(g, &mut point, scratch);
                if !s.is_finite() {
                    break;
                }
                if s.abs() <= 1e-9 * slope0.abs() || hi - lo <= 1e-15 * gamma_max {
                    break;
                }
                if s < 0.0 {
                    lo = g;
                    s_lo = s;
                    if side == -1 {
                        s_hi *= 0.5;
                    }
                    side = -1;
                } else {
                    hi = g;
                    s_hi = s;
                    if side == 1 {
                        s_lo *= 0.5;
                    }
                    side = 1;
                }
            }
            Some(g)
        }
    };

    let value_at = |g: f64, point: &mut Vec<f64>| {
        for j in 0..m {
            point[j] = theta[j] + g * dir[j];
        }
        obj.value(point)
    };
    let mut g = candidate.unwrap_or(gamma_max);
    for _ in 0..30 {
        let f = value_at(g, &mut point);
        if f.is_finite() && f <= f0 + roundoff(f0) {
            return Some((g, f));
        }
        g *= 0.5;
    }
    let g = (2.0 / (t as f64 + 2.0)).min(gamma_max);
    let f = value_at(g, &mut point);
    (f.is_finite() && f <= f0 + roundoff(f0)).then_some((g, f))
}

/// Away-step Frank–Wolfe from `start` (uniform weights if `None`).
///
/// The linear minimization oracle returns the lowest-index coordinate of
/// minimal gradient. Terminates once the Frank–Wolfe gap drops to
/// `gap_tolerance`; otherwise reports `converged = false`.
pub fn frank_wolfe_minimize(obj: &dyn SimplexObjective, config: &SolverConfig, start: Option<&SimplexWeights>) -> Result<SolverResult> {
    config.validate()?;
    let m = obj.dim();
    if m == 1 {
        return Ok(singleton(obj));
    }
    let mut theta = check_start(start, m)?;
    let mut grad = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut dir = vec![0.0; m];
    let mut f = obj.value(&theta);
    let mut history = vec![f];

    for t in 0..config.max_iterations {
        obj.gradient(&theta, &mut grad);
        if !f.is_finite() {
            return Err(Error::NonFinite { what: "objective", iteration: t });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", iteration: t });
        }
        let s = argmin(&grad);
        let g_theta = dot(&grad, &theta);
        let gap = (g_theta - grad[s]).max(0.0);
        if gap <= config.gap_tolerance {
            return finish(theta, f, gap, t, true, history);
        }

        let mut away = None;
        for j in 0..m {
            if theta[j] > 0.0 && away.is_none_or(|v: usize| grad[j] > grad[v]) {
                away = Some(j);
            }
        }
        let v = away.expect("simplex point has positive mass");
        let away_gap = grad[v] - g_theta;

        let (gamma_max, slope0, forward) = if gap >= away_gap || theta[v] >= 1.0 {
            for j in 0..m {
                dir[j] = -theta[j];
            }
            dir[s] += 1.0;
            (1.0, -gap, true)
        } else {
            dir.copy_from_slice(&theta);
            dir[v] -= 1.0;
            (theta[v] / (1.0 - theta[v]), -away_gap, false)
        };

        let Some((gamma, f_new)) = line_search(obj, &theta, &dir, gamma_max, slope0, f, t, &mut scratch) else {
            break;
        };
        if gamma <= 0.0 {
            break;
        }
        if forward {
            for tj in theta.iter_mut() {
                *tj *= 1.0 - gamma;
            }
            theta[s] += gamma;
        } else {
            for tj in theta.iter_mut() {
                *tj *= 1.0 + gamma;
            }
            theta[v] -= gamma;
            if gamma >= gamma_max {
                theta[v] = 0.0;
            }
        }
        for tj in theta.iter_mut() {
            if *tj < 0.0 {
                *tj = 0.0;
            }
        }
        let total: f64 = theta.iter().sum();
        theta.iter_mut().for_each(|tj| *tj /= total);
        f = obj.value(&theta);
        debug_assert!(f_new.is_finite());
        history.push(f);
    }

    obj.gradient(&theta, &mut grad);
    let gap = frank_wolfe_gap(&grad, &theta);
    let iterations = history.len() - 1;
    finish(theta, f, gap, iterations, gap <= config.gap_tolerance, history)
}

/// Entropic mirror descent (multiplicative weights) from the uniform point.
///
/// Step `eta_t = sqrt(2 log M / t) / G`, where `G` is the running maximum of
/// the centered gradient's sup-norm `(max_j g_j - min_j g_j) / 2`; adding a
/// constant to every coordinate leaves the update unchanged. Returns the best
/// iterate seen.
pub fn mirror_descent_minimize(obj: &dyn SimplexObjective, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    let m = obj.dim();
    if m == 1 {
        return Ok(singleton(obj));
    }
    let log_m = (m as f64).ln();
    let mut log_theta = vec![-log_m; m];
    let mut theta = vec![1.0 / m as f64; m];
    let mut grad = vec![0.0; m];
    let mut f = obj.value(&theta);
    let mut best = (f, theta.clone(), f64::INFINITY);
    let mut history = vec![f];
    let mut g_scale = 0.0f64;

    for t in 1..=config.max_iterations {
        obj.gradient(&theta, &mut grad);
        if !f.is_finite() {
            return Err(Error::NonFinite { what: "objective", iteration: t });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", iteration: t });
        }
        let gap = frank_wolfe_gap(&grad, &theta);
        if f <= best.0 {
            best = (f, theta.clone(), gap);
        }
        if gap <= config.gap_tolerance {
            break;
        }
        let (lo, hi) = grad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &g| (l.min(g), h.max(g)));
        g_scale = g_scale.max(0.5 * (hi - lo));
        if g_scale == 0.0 {
            break;
        }
        let eta = (2.0 * log_m / t as f64).sqrt() / g_scale;
        for j in 0..m {
            log_theta[j] -= eta * grad[j];
        }
        let top = log_theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let norm = top + log_theta.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
        for j in 0..m {
            log_theta[j] -= norm;
            theta[j] = log_theta[j].exp();
        }
        f = obj.value(&theta);
        history.push(f);
    }
    if f < best.0 {
        obj.gradient(&theta, &mut grad);
        best = (f, theta.clone(), frank_wolfe_gap(&grad, &theta));
    }
    let (value, point, mut gap) = best;
    if !gap.is_finite() {
        obj.gradient(&point, &mut grad);
        gap = frank_wolfe_gap(&grad, &point);
    }
    let iterations = history.len() - 1;
    finish(point, value, gap, iterations, gap <= config.gap_tolerance, history)
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Exhaustive search over the lattice `{k / G : sum k = G}` for `M <= 4`.
///
/// The certificate is the mesh bound `L * M / G` for the supplied (or the
/// objective's own) Lipschitz estimate `L` with respect to the l1 norm. Ties
/// keep the first point in lexicographic order of `k`.
pub fn grid_search_minimize(obj: &dyn SimplexObjective, config: &SolverConfig, lipschitz: Option<f64>) -> Result<SolverResult> {
    config.validate()?;
    let m = obj.dim();
    let res = config.grid_resolution;
    let points = binomial((res + m - 1) as u128, (m - 1) as u128);
    if m > 4 || points > GRID_POINT_BUDGET {
        return Err(Error::GridTooLarge { m, points, budget: GRID_POINT_BUDGET });
    }
    let lip = lipschitz
        .or_else(|| obj.lipschitz_bound())
        .ok_or_else(|| Error::InvalidParameter("grid search needs a Lipschitz estimate for its certificate".into()))?;
    if m == 1 {
        let mut r = singleton(obj);
        r.iterations = 1;
        return Ok(r);
    }

    let g = res as f64;
    let mut counts = vec![0usize; m];
    let mut theta = vec![0.0; m];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visited = 0usize;
    // enumerate compositions of `res` into `m` parts, lexicographically
    #[allow(clippy::too_many_arguments)]
    fn rec(
        j: usize,
        remaining: usize,
        counts: &mut [usize],
        theta: &mut [f64],
        g: f64,
        obj: &dyn SimplexObjective,
        best: &mut Option<(f64, Vec<usize>)>,
        visited: &mut usize,
    ) {
        let m = counts.len();
        if j == m - 1 {
            counts[j] = remaining;
            theta[j] = remaining as f64 / g;
            let v = obj.value(theta);
            *visited += 1;
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                *best = Some((v, counts.to_vec()));
            }
            return;
        }
        for k in 0..=remaining {
            counts[j] = k;
            theta[j] = k as f64 / g;
            rec(j + 1, remaining - k, counts, theta, g, obj, best, visited);
        }
    }
    rec(0, res, &mut counts, &mut theta, g, obj, &mut best, &mut visited);
    let (value, k) = best.expect("lattice is non-empty");
    if !value.is_finite() {
        return Err(Error::NonFinite { what: "objective", iteration: visited });
    }
    let point: Vec<f64> = k.iter().map(|&c| c as f64 / g).collect();
    finish(point, value, lip * m as f64 / g, visited, true, vec![value])
}

/// Dispatch on `config.method`. Non-convergence is reported in the result,
/// not as an error.
pub fn minimize(obj: &dyn SimplexObjective, config: &SolverConfig, start: Option<&SimplexWeights>) -> Result<SolverResult> {
    match config.method {
        SolverMethod::FrankWolfe => frank_wolfe_minimize(obj, config, start),
        SolverMethod::MirrorDescent => mirror_descent_minimize(obj, config),
        SolverMethod::Grid => grid_search_minimize(obj, config, None),
    }
}

/// Oracle weights `theta*` minimizing `R~(theta) + mu V(theta) + (beta/n) K(theta)`.
///
/// `mu <= (1 - nu) C_l / 2` keeps the objective convex on the simplex.
pub fn solve_oracle_weights(
    loss: &LossModel,
    pop: &PopulationModel,
    config: &AggregationConfig,
    mu: f64,
    n: usize,
    solver: &SolverConfig,
) -> Result<SolverResult> {
    let limit = (1.0 - config.nu) * loss.c_l / 2.0;
    if !(mu > 0.0) || mu > limit {
        return Err(Error::Precondition(format!("mu = {mu} must lie in (0, (1 - nu) C_l / 2 = {limit}]")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let beta = config.resolve_beta(loss)?;
    let obj = AggregationObjective::oracle(loss, pop, config.nu, beta, n, mu, &config.prior)?;
    minimize(&obj, solver, None)
}
