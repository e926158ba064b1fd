use serde::Serialize;

use super::checks::population_q;
use super::{frequency_and_se, mean_and_se, TailReport};
use crate::aggregators::{aggregate, q_aggregate, Method};
use crate::calibration::{calibrate, default_mu, CalibrationReport};
use crate::error::{Error, Result};
use crate::generators::{generate_problem, near_tie_gap, sample_from, GeneratorSpec};
use crate::loss::LossModel;
use crate::model::{AggregationConfig, LabeledSample, Matrix, PopulationModel, SimplexWeights};
use crate::replicate::{derive_seeds, run_replications};
use crate::report::{Aggregates, CalibrationEntry, ExperimentConfig, ExperimentReport, ReplicationRecord};
use crate::risk::{h_form, h_matrix, mixture, penalty_k, population_risk, population_vertex_risks, q_functional, spread_around};
use crate::solver::{solve_oracle_weights, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub threads: usize,
    pub solver: SolverConfig,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions { seed: 0, threads: 1, solver: SolverConfig::default() }
    }
}

fn calibrated(loss: &LossModel, config: &AggregationConfig, n: usize) -> Result<(f64, f64, CalibrationReport)> {
    let beta = config.resolve_beta(loss)?;
    let report = calibrate(loss, config.nu, Some(beta), n)?;
    Ok((beta, report.mu, report))
}

struct ZnContext<'a> {
    loss: &'a LossModel,
    pop: &'a PopulationModel,
    config: &'a AggregationConfig,
    mu: f64,
    s: f64,
    gram: Matrix,
    h: Matrix,
    theta_star: SimplexWeights,
    q_pop_star: f64,
}

impl ZnContext<'_> {
    fn z(&self, sample: &LabeledSample, theta_hat: &SimplexWeights) -> Result<f64> {
        let nu = self.config.nu;
        let pop_diff = population_q(self.loss, self.pop, theta_hat, nu)? - self.q_pop_star;
        let emp_diff = q_functional(self.loss, sample, theta_hat, nu)? - q_functional(self.loss, sample, &self.theta_star, nu)?;
        let spread = spread_around(theta_hat, &self.theta_star, &self.gram)?;
        let cross = h_form(theta_hat, &self.h, &self.theta_star)?;
        let k = penalty_k(theta_hat, &self.config.prior)?;
        Ok(pop_diff - emp_diff - self.mu * spread - self.mu * cross - k / self.s)
    }
}

/// `Z_n` for one sample given the aggregate and the oracle weights, with the
/// default `mu` and `s = 3n/beta`.
pub fn zn_statistic(
    loss: &LossModel,
    pop: &PopulationModel,
    config: &AggregationConfig,
    sample: &LabeledSample,
    theta_hat: &SimplexWeights,
    theta_star: &SimplexWeights,
) -> Result<f64> {
    let beta = config.resolve_beta(loss)?;
    let mu = default_mu(config.nu, loss.c_l)?;
    let gram = pop.gram();
    let ctx = ZnContext {
        loss,
        pop,
        config,
        mu,
        s: 3.0 * sample.n() as f64 / beta,
        h: h_matrix(&gram)?,
        gram,
        theta_star: theta_star.clone(),
        q_pop_star: population_q(loss, pop, theta_star, config.nu)?,
    };
    ctx.z(sample, theta_hat)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZnTail {
    pub x: f64,
    /// Frequency of `Z_n > beta x / n` against `exp(-x)`.
    pub report: TailReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZnReport {
    pub n: usize,
    pub beta: f64,
    pub mu: f64,
    pub s: f64,
    pub theta_star: Vec<f64>,
    /// Monte Carlo `E exp(n Z_n / beta)` against 1.
    pub exp_moment: TailReport,
    pub tails: Vec<ZnTail>,
    pub z_values: Vec<f64>,
}

impl ZnReport {
    pub fn all_pass(&self) -> bool {
        self.exp_moment.pass && self.tails.iter().all(|t| t.report.pass)
    }
}

/// Monte Carlo law of `Z_n` under the calibrated parameters. `theta*` is
/// solved once and shared by every replication.
pub fn zn_tail_experiment(
    loss: &LossModel,
    pop: &PopulationModel,
    config: &AggregationConfig,
    n: usize,
    replications: usize,
    x_grid: &[f64],
    opts: &ExperimentOptions,
) -> Result<ZnReport> {
    let (beta, mu, cal) = calibrated(loss, config, n)?;
    if !cal.all_satisfied() {
        let failed: Vec<&str> = cal.conditions.iter().filter(|c| !c.satisfied).map(|c| c.name.as_str()).collect();
        return Err(Error::Precondition(format!("calibration conditions fail at n = {n}: {failed:?}")));
    }
    let star = solve_oracle_weights(loss, pop, config, mu, n, &opts.solver)?;
    if !star.converged {
        return Err(Error::NotConverged { certificate: star.certificate, iterations: star.iterations, result: Box::new(star) });
    }
    let gram = pop.gram();
    let ctx = ZnContext {
        loss,
        pop,
        config,
        mu,
        s: cal.s,
        h: h_matrix(&gram)?,
        gram,
        q_pop_star: population_q(loss, pop, &star.theta_hat, config.nu)?,
        theta_star: star.theta_hat.clone(),
    };
    let z_values = run_replications(opts.seed, replications, opts.threads, |_, seed| {
        let sample = sample_from(pop, n, seed)?;
        let theta_hat = q_aggregate(loss, &sample, config, &opts.solver)?.theta_hat;
        ctx.z(&sample, &theta_hat)
    })?;
    let scale = n as f64 / beta;
    let moments: Vec<f64> = z_values.iter().map(|z| (scale * z).exp()).collect();
    let (m, se) = mean_and_se(&moments);
    let tails = x_grid
        .iter()
        .map(|&x| {
            let (p, pse) = frequency_and_se(z_values.iter().map(|z| *z > x / scale));
            ZnTail { x, report: TailReport::monte_carlo(p, pse, (-x).exp()) }
        })
        .collect();
    Ok(ZnReport {
        n,
        beta,
        mu,
        s: ctx.s,
        theta_star: star.theta_hat.into_vec(),
        exp_moment: TailReport::monte_carlo(m, se, 1.0),
        tails,
        z_values,
    })
}

/// Per-`n` population data shared by every replication at that `n`.
struct Cell {
    n: usize,
    pop: PopulationModel,
    best_risk: f64,
    bound: f64,
}

fn cell(loss: &LossModel, pop: PopulationModel, config: &AggregationConfig, beta: f64, n: usize) -> Result<Cell> {
    pop.validate(loss)?;
    if config.prior.dim() != pop.m() {
        return Err(Error::DimensionMismatch { what: "prior", expected: pop.m(), got: config.prior.dim() });
    }
    let risks = population_vertex_risks(loss, &pop)?;
    let best_risk = risks.iter().cloned().fold(f64::INFINITY, f64::min);
    let log_inv = config.prior.log_inverse();
    let penalized = risks.iter().zip(&log_inv).map(|(r, k)| r + beta / n as f64 * k).fold(f64::INFINITY, f64::min);
    Ok(Cell { n, pop, best_risk, bound: penalized - best_risk })
}

#[allow(clippy::too_many_arguments)]
fn run_experiment(
    loss: &LossModel,
    cells: Vec<Cell>,
    config: &AggregationConfig,
    replications: usize,
    x_grid: &[f64],
    methods: &[Method],
    opts: &ExperimentOptions,
    generator: Option<GeneratorSpec>,
    gap_per_n: bool,
) -> Result<ExperimentReport> {
    if methods.is_empty() {
        return Err(Error::InvalidParameter("at least one method is required".into()));
    }
    let beta = config.resolve_beta(loss)?;
    let mu = default_mu(config.nu, loss.c_l)?;
    let n_grid: Vec<usize> = cells.iter().map(|c| c.n).collect();
    let seeds = derive_seeds(opts.seed, cells.len());
    let mut records = Vec::new();
    let mut calibration = Vec::new();
    for (c, &seed) in cells.iter().zip(&seeds) {
        calibration.push(CalibrationEntry { n: c.n, report: calibrate(loss, config.nu, Some(beta), c.n)? });
        let per_rep = run_replications(seed, replications, opts.threads, |rep, s| {
            let sample = sample_from(&c.pop, c.n, s)?;
            methods
                .iter()
                .map(|&method| {
                    let out = aggregate(method, loss, &sample, config, &opts.solver)?;
                    let f = mixture(&out.theta_hat, &c.pop.support_predictions)?;
                    let risk = population_risk(loss, &c.pop, &f)?;
                    let excess = risk - c.best_risk;
                    let exceedances = x_grid.iter().map(|x| excess > c.bound + 2.0 * beta * x / c.n as f64).collect();
                    Ok(ReplicationRecord {
                        replication: rep,
                        n: c.n,
                        method,
                        risk,
                        excess_risk: excess,
                        bound: c.bound,
                        exceedances,
                        solver: out.solver,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        records.extend(per_rep.into_iter().flatten());
    }
    let aggregates = Aggregates::from_records(&records, methods, &n_grid, x_grid);
    Ok(ExperimentReport {
        config: ExperimentConfig {
            loss: loss.kind.name().to_string(),
            b: loss.b,
            c_b: loss.c_b,
            c_l: loss.c_l,
            nu: config.nu,
            beta,
            mu,
            prior: config.prior.as_slice().to_vec(),
            n_grid,
            replications,
            x_grid: x_grid.to_vec(),
            methods: methods.to_vec(),
            seed: opts.seed,
            generator,
            gap_per_n,
            solver: opts.solver,
        },
        calibration,
        replications: records,
        aggregates,
    })
}

/// Monte Carlo check of the oracle inequality on a fixed population: excess
/// risk of each method against `min_j [R(f_j) + (beta/n) log(1/pi_j)] - min_j R(f_j)`
/// and tail frequencies beyond `bound + 2 beta x / n`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_inequality_experiment(
    loss: &LossModel,
    pop: &PopulationModel,
    config: &AggregationConfig,
    n_grid: &[usize],
    replications: usize,
    x_grid: &[f64],
    methods: &[Method],
    opts: &ExperimentOptions,
    generator: Option<GeneratorSpec>,
) -> Result<ExperimentReport> {
    let beta = config.resolve_beta(loss)?;
    let cells = n_grid.iter().map(|&n| cell(loss, pop.clone(), config, beta, n)).collect::<Result<Vec<_>>>()?;
    run_experiment(loss, cells, config, replications, x_grid, methods, opts, generator, false)
}

/// Rate experiment on the near-tie problem with the label bias recalibrated to
/// `near_tie_gap(n)` at every grid point.
#[allow(clippy::too_many_arguments)]
pub fn rate_experiment(
    loss: &LossModel,
    base: &GeneratorSpec,
    config: &AggregationConfig,
    n_grid: &[usize],
    replications: usize,
    x_grid: &[f64],
    methods: &[Method],
    opts: &ExperimentOptions,
) -> Result<ExperimentReport> {
    let beta = config.resolve_beta(loss)?;
    let cells = n_grid
        .iter()
        .map(|&n| {
            let spec = GeneratorSpec { gap: near_tie_gap(n), ..base.clone() };
            cell(loss, generate_problem(&spec)?, config, beta, n)
        })
        .collect::<Result<Vec<_>>>()?;
    run_experiment(loss, cells, config, replications, x_grid, methods, opts, Some(base.clone()), true)
}
