//! Q-aggregation of a finite dictionary of predictors under strongly convex
//! Lipschitz losses, with comparator aggregators, simplex solvers, parameter
//! calibration and a Monte Carlo verification lab.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregators;
pub mod calibration;
pub mod error;
pub mod generators;
pub mod io;
pub mod loss;
pub mod model;
pub mod objective;
pub mod replicate;
pub mod report;
pub mod risk;
pub mod solver;
pub mod theory;

pub use aggregators::{aggregate, convex_erm, erm_select, exponential_weights, q_aggregate, AggregatorOutput, Method, SolverDiagnostics};
pub use calibration::{auto_beta, beta_lower_bound, calibrate, default_mu, validate_conditions, CalibrationReport, Condition};
pub use error::{Error, Result};
pub use generators::{generate_problem, near_tie_gap, sample_from, GeneratorKind, GeneratorSpec};
pub use io::{load_sample, save_report, save_sample};
pub use loss::{loss_constants, loss_eval, CustomLoss, LossKind, LossModel};
pub use model::{AggregationConfig, Beta, LabeledSample, Matrix, PopulationModel, PredictionMatrix, Prior, SimplexWeights};
pub use objective::{AggregationObjective, FnObjective, SimplexObjective};
pub use report::{Aggregates, ExperimentConfig, ExperimentReport, ReplicationRecord};
pub use solver::{
    frank_wolfe_minimize, grid_search_minimize, minimize, mirror_descent_minimize, solve_oracle_weights, SolverConfig, SolverMethod,
    SolverResult,
};
