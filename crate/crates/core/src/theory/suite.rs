use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checks::{certify_loss, identity_residuals, jensen_gap_check};
use super::experiments::{oracle_inequality_experiment, zn_tail_experiment, ExperimentOptions};
use super::laplace::{bernstein_laplace_check, rademacher_laplace_check, BoundedLaw, LaplaceCheckSpec};
use crate::aggregators::Method;
use crate::calibration::{calibrate, AUTO_BETA_FACTOR};
use crate::error::Result;
use crate::generators::{generate_problem, GeneratorSpec};
use crate::loss::LossModel;
use crate::model::{AggregationConfig, Beta, Prior, SimplexWeights};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replications for the Monte Carlo experiments.
    pub replications: usize,
    pub threads: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, replications: 500, threads: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        CheckOutcome { name: name.to_string(), pass, detail }
    }
}

const INSTANCES: usize = 1000;

fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> SimplexWeights {
    let raw: Vec<f64> = (0..m).map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln()).collect();
    SimplexWeights::normalized(raw).expect("positive weights")
}

fn random_population_spec(rng: &mut ChaCha8Rng, b: f64) -> GeneratorSpec {
    let m = rng.gen_range(2..=6);
    let support = rng.gen_range(2..=8);
    GeneratorSpec::random_dict(m, support, b, rng.gen())
}

fn identity_check(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut min_v) = (0.0f64, f64::INFINITY);
    for _ in 0..INSTANCES {
        let pop = generate_problem(&random_population_spec(&mut rng, 1.0))?;
        let theta = random_simplex(&mut rng, pop.m());
        let other = random_simplex(&mut rng, pop.m());
        let r = identity_residuals(&pop.gram(), &theta, &other)?;
        worst = worst.max(r.first).max(r.second);
        min_v = min_v.min(r.v_theta).min(r.v_other);
    }
    Ok(CheckOutcome::new(
        "identities",
        worst <= 1e-10 && min_v >= -1e-12,
        format!("{INSTANCES} instances, max relative residual {worst:.3e}, min V {min_v:.3e}"),
    ))
}

fn jensen_check(loss: &LossModel, name: &str, equality: bool, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pass, mut worst) = (true, f64::NEG_INFINITY);
    for _ in 0..INSTANCES {
        let pop = generate_problem(&random_population_spec(&mut rng, loss.b))?;
        let theta = random_simplex(&mut rng, pop.m());
        let r = jensen_gap_check(loss, &pop, &theta)?;
        let diff = r.estimate - r.bound;
        if equality {
            worst = worst.max(diff.abs());
            pass &= diff.abs() <= 1e-10;
        } else {
            worst = worst.max(diff);
            pass &= r.pass;
        }
    }
    let what = if equality { "max |gap|" } else { "max lhs - rhs" };
    Ok(CheckOutcome::new(name, pass, format!("{INSTANCES} instances, {what} {worst:.3e}")))
}

fn laplace_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    let spec = LaplaceCheckSpec { law: BoundedLaw::rademacher(1.0), c: 1.0, c0: 1.0, lambda: 0.5, n: 10, draws: 100_000, seed };
    let r = bernstein_laplace_check(&spec)?;
    let close = (r.upper.estimate - r.exact_upper).abs() <= 3.0 * r.upper.standard_error;
    let bern = CheckOutcome::new(
        "bernstein-laplace",
        close && r.upper.pass && r.lower.pass && r.upper.estimate <= 1.0,
        format!(
            "estimate {:.5} (SE {:.1e}), closed form {:.5}; sign-flipped {:.5}",
            r.upper.estimate, r.upper.standard_error, r.exact_upper, r.lower.estimate
        ),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut all = true;
    for _ in 0..100 {
        let len = rng.gen_range(1..=50);
        let a: Vec<f64> = (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect();
        all &= rademacher_laplace_check(&a).pass;
    }
    let rad = CheckOutcome::new("rademacher-laplace", all, "100 coefficient vectors, exact".into());
    Ok(vec![bern, rad])
}

fn calibration_check() -> Result<CheckOutcome> {
    let loss = LossModel::squared(1.0)?;
    let r = calibrate(&loss, 0.5, None, 10)?;
    let terms = [480.0, 12.0 * 3f64.sqrt(), 72.0];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    let mut pass = close(r.mu, 0.1) && close(r.beta_min, 480.0) && r.beta_terms.iter().zip(terms).all(|(a, b)| close(*a, b));
    let mut n = 10usize;
    while n <= 1_000_000 {
        pass &= calibrate(&loss, 0.5, Some(r.beta), n)?.all_satisfied();
        n *= 10;
    }
    Ok(CheckOutcome::new(
        "calibration",
        pass,
        format!("mu {}, beta_min {}, terms {:?}, conditions checked for n = 10..1e6", r.mu, r.beta_min, r.beta_terms),
    ))
}

/// Runs every exact and Monte Carlo check at desk scale.
pub fn run_verification_suite(opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for loss in [LossModel::squared(1.0)?, LossModel::logistic(1.0)?] {
        let c = certify_loss(&loss, 20_000);
        out.push(CheckOutcome::new(
            &format!("loss-constants-{}", loss.kind.name()),
            c.pass,
            format!(
                "{} triples, max ratio {:.6} vs C_b {:.6}, min slack {:.3e}",
                c.triples, c.max_lipschitz_ratio, loss.c_b, c.min_convexity_slack
            ),
        ));
    }
    out.push(identity_check(opts.seed)?);
    out.push(jensen_check(&LossModel::logistic(1.0)?, "jensen-logistic", false, opts.seed.wrapping_add(1))?);
    out.push(jensen_check(&LossModel::squared(1.0)?, "jensen-squared-equality", true, opts.seed.wrapping_add(2))?);
    out.extend(laplace_checks(opts.seed.wrapping_add(3))?);
    out.push(calibration_check()?);

    let loss = LossModel::squared(1.0)?;
    let experiment = ExperimentOptions { seed: opts.seed.wrapping_add(4), threads: opts.threads, solver: SolverConfig::default() };
    let m = 5;
    let pop = generate_problem(&GeneratorSpec::random_dict(m, 20, 1.0, opts.seed.wrapping_add(5)))?;
    let config = AggregationConfig::uniform(m);
    let zn = zn_tail_experiment(&loss, &pop, &config, 200, opts.replications, &[1.0, 2.0], &experiment)?;
    out.push(CheckOutcome::new(
        "zn-exponential-moment",
        zn.all_pass(),
        format!(
            "E exp(n Z/beta) = {:.4} (SE {:.1e}); tails {:?}",
            zn.exp_moment.estimate,
            zn.exp_moment.standard_error,
            zn.tails.iter().map(|t| (t.x, t.report.estimate)).collect::<Vec<_>>()
        ),
    ));

    let m = 20;
    let pop = generate_problem(&GeneratorSpec::random_dict(m, 50, 1.0, opts.seed.wrapping_add(6)))?;
    let config = AggregationConfig::new(0.5, Beta::Fixed(480.0 * AUTO_BETA_FACTOR), Prior::uniform(m))?;
    let report = oracle_inequality_experiment(
        &loss,
        &pop,
        &config,
        &[500],
        opts.replications,
        &[1.0, 2.0],
        &[Method::QAggregation],
        &experiment,
        None,
    )?;
    let cell = &report.aggregates.cells[0];
    out.push(CheckOutcome::new(
        "oracle-inequality",
        report.all_pass(),
        format!(
            "mean excess {:.4} (SE {:.1e}) vs bound {:.4}; tail frequencies {:?}",
            cell.mean_excess,
            cell.se_excess,
            cell.bound,
            cell.tails.iter().map(|t| (t.x, t.frequency)).collect::<Vec<_>>()
        ),
    ));
    Ok(out)
}
