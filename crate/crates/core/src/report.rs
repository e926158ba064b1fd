//! Experiment report records and their aggregate statistics.

use serde::Serialize;

use crate::aggregators::{Method, SolverDiagnostics};
use crate::calibration::CalibrationReport;
use crate::generators::GeneratorSpec;
use crate::solver::SolverConfig;
use crate::theory::{frequency_and_se, log_log_slope, mean_and_se, MC_SLACK_SE};

/// Fully resolved configuration, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub loss: String,
    pub b: f64,
    pub c_b: f64,
    pub c_l: f64,
    pub nu: f64,
    pub beta: f64,
    pub mu: f64,
    pub prior: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub x_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub generator: Option<GeneratorSpec>,
    /// Whether the population is regenerated per `n` with the near-tie gap.
    pub gap_per_n: bool,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub n: usize,
    pub report: CalibrationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub n: usize,
    pub method: Method,
    /// `R(f_theta_hat)`.
    pub risk: f64,
    /// `R(f_theta_hat) - min_j R(f_j)`.
    pub excess_risk: f64,
    /// `min_j [R(f_j) + (beta/n) log(1/pi_j)] - min_j R(f_j)`.
    pub bound: f64,
    /// Per `x`: whether the excess exceeded `bound + 2 beta x / n`.
    pub exceedances: Vec<bool>,
    pub solver: Option<SolverDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFrequency {
    pub x: f64,
    pub frequency: f64,
    pub standard_error: f64,
    /// `exp(-x)`.
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCell {
    pub method: Method,
    pub n: usize,
    pub replications: usize,
    pub mean_excess: f64,
    pub se_excess: f64,
    pub bound: f64,
    pub mean_within_bound: bool,
    pub tails: Vec<TailFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEntry {
    pub method: Method,
    /// Least-squares slope of `ln(mean excess)` on `ln n`; absent when a mean
    /// excess is not positive.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub cells: Vec<AggregateCell>,
    pub slopes: Vec<SlopeEntry>,
}

impl Aggregates {
    /// Recomputes every statistic from the per-replication records.
    pub fn from_records(records: &[ReplicationRecord], methods: &[Method], n_grid: &[usize], x_grid: &[f64]) -> Self {
        let mut cells = Vec::new();
        for &n in n_grid {
            for &method in methods {
                let rows: Vec<&ReplicationRecord> = records.iter().filter(|r| r.n == n && r.method == method).collect();
                if rows.is_empty() {
                    continue;
                }
                let excess: Vec<f64> = rows.iter().map(|r| r.excess_risk).collect();
                let (mean, se) = mean_and_se(&excess);
                let bound = rows[0].bound;
                let tails = x_grid
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| {
                        let (freq, fse) = frequency_and_se(rows.iter().map(|r| r.exceedances[k]));
                        let limit = (-x).exp();
                        TailFrequency { x, frequency: freq, standard_error: fse, limit, pass: freq <= limit + MC_SLACK_SE * fse }
                    })
                    .collect();
                cells.push(AggregateCell {
                    method,
                    n,
                    replications: rows.len(),
                    mean_excess: mean,
                    se_excess: se,
                    bound,
                    mean_within_bound: mean <= bound,
                    tails,
                });
            }
        }
        let slopes = methods
            .iter()
            .map(|&method| {
                let pts: Vec<(f64, f64)> = cells.iter().filter(|c| c.method == method).map(|c| (c.n as f64, c.mean_excess)).collect();
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                SlopeEntry { method, slope: if xs.len() >= 2 { log_log_slope(&xs, &ys) } else { None } }
            })
            .collect();
        Aggregates { cells, slopes }
    }

    pub fn cell(&self, method: Method, n: usize) -> Option<&AggregateCell> {
        self.cells.iter().find(|c| c.method == method && c.n == n)
    }

    pub fn slope(&self, method: Method) -> Option<f64> {
        self.slopes.iter().find(|s| s.method == method).and_then(|s| s.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub calibration: Vec<CalibrationEntry>,
    pub replications: Vec<ReplicationRecord>,
    pub aggregates: Aggregates,
}

impl ExperimentReport {
    /// Mean-excess and tail checks hold for Q-aggregation, the only method the
    /// oracle inequality covers.
    pub fn all_pass(&self) -> bool {
        self.aggregates
            .cells
            .iter()
            .filter(|c| c.method == Method::QAggregation)
            .all(|c| c.mean_within_bound && c.tails.iter().all(|t| t.pass))
    }
}
