//! `qagg` command-line harness.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qagg_core::io::report_to_string;
use qagg_core::report::ExperimentReport;
use qagg_core::risk::vertex_risks;
use qagg_core::theory::{oracle_inequality_experiment, rate_experiment, run_verification_suite, ExperimentOptions, SuiteOptions};
use qagg_core::{
    aggregate, calibrate, generate_problem, load_sample, AggregationConfig, Beta, GeneratorKind, GeneratorSpec, LossKind, LossModel,
    Method, Prior, SolverConfig, SolverMethod,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qagg", version, about = "Q-aggregation of finite dictionaries of predictors")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo replications per grid point.
    #[arg(long, global = true, default_value_t = 500)]
    replications: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the replication engine.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate the dictionary columns of a CSV sample.
    Aggregate(AggregateArgs),
    /// Temperature lower bound and calibration conditions.
    Calibrate(CalibrateArgs),
    /// Oracle-inequality experiment on a generated population.
    Simulate(SimulateArgs),
    /// Exact and Monte Carlo verification suite.
    Verify,
    /// Excess-risk rates of several methods on the near-tie problem.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct LossArgs {
    #[arg(long, default_value = "squared")]
    loss: String,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
}

impl LossArgs {
    fn model(&self) -> Result<LossModel> {
        Ok(LossModel::new(LossKind::parse(&self.loss)?, self.b)?)
    }
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = AggregationConfig::DEFAULT_NU)]
    nu: f64,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    beta: String,
    /// Comma-separated prior weights (uniform if omitted).
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    #[arg(long, default_value = "frank-wolfe")]
    solver: String,
}

impl ConfigArgs {
    fn config(&self, m: usize) -> Result<AggregationConfig> {
        let prior = match &self.prior {
            Some(p) if p.len() != m => bail!("--prior has {} weights but the dictionary has {m} elements", p.len()),
            Some(p) => Prior::new(p.clone())?,
            None => Prior::uniform(m),
        };
        Ok(AggregationConfig::new(self.nu, parse_beta(&self.beta)?, prior)?)
    }

    fn solver(&self) -> Result<SolverConfig> {
        Ok(SolverConfig::with_method(SolverMethod::parse(&self.solver)?))
    }
}

fn parse_beta(s: &str) -> Result<Beta> {
    if s == "auto" {
        return Ok(Beta::Auto);
    }
    let v: f64 = s.parse().with_context(|| format!("--beta: expected `auto` or a number, got `{s}`"))?;
    Ok(Beta::Fixed(v))
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    names.iter().map(|n| Method::parse(n).with_context(|| format!("--methods: {n}"))).collect()
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "q-aggregation")]
    method: String,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = AggregationConfig::DEFAULT_NU)]
    nu: f64,
    #[arg(long)]
    n: usize,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    beta: String,
}

#[derive(Debug, Args)]
struct GeneratorArgs {
    #[arg(long, default_value = "random-bounded-dict")]
    generator: String,
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Covariate atoms of the generated population.
    #[arg(long, default_value_t = 50)]
    support: usize,
    /// Label bias of the near-tie problem.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    /// Dictionary amplitude as a fraction of `b`.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Seed of the population itself (defaults to `--seed`).
    #[arg(long)]
    generator_seed: Option<u64>,
}

impl GeneratorArgs {
    fn spec(&self, b: f64, seed: u64) -> Result<GeneratorSpec> {
        let seed = self.generator_seed.unwrap_or(seed);
        let mut spec = match GeneratorKind::parse(&self.generator)? {
            GeneratorKind::TwoExpertNearTie => GeneratorSpec::near_tie(b, self.gap),
            GeneratorKind::RandomBoundedDict => GeneratorSpec::random_dict(self.m, self.support, b, seed),
            GeneratorKind::SignNoise => GeneratorSpec::sign_noise(self.m, self.support, b, 0.5, seed),
        };
        if let Some(a) = self.amplitude {
            spec.amplitude = a;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, value_delimiter = ',', default_value = "500")]
    n_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    x_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "q-aggregation")]
    methods: Vec<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
    n_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    x_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "q-aggregation,erm,convex-erm,exponential-weights")]
    methods: Vec<String>,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = report_to_string(value)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_weights(w: &[f64]) -> String {
    w.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
}

#[derive(Serialize)]
struct AggregateReport {
    method: Method,
    loss: String,
    n: usize,
    beta: f64,
    theta_hat: Vec<f64>,
    empirical_risk: f64,
    vertex_risks: Vec<f64>,
    solver: Option<qagg_core::SolverDiagnostics>,
}

fn cmd_aggregate(cli: &Cli, args: &AggregateArgs) -> Result<bool> {
    let loss = args.loss.model()?;
    let sample = load_sample(&args.input, &loss)?;
    let config = args.config.config(sample.m())?;
    let method = Method::parse(&args.method).context("--method")?;
    let out = aggregate(method, &loss, &sample, &config, &args.config.solver()?)?;
    let report = AggregateReport {
        method,
        loss: loss.kind.name().to_string(),
        n: sample.n(),
        beta: config.resolve_beta(&loss)?,
        theta_hat: out.theta_hat.as_slice().to_vec(),
        empirical_risk: out.empirical_risk,
        vertex_risks: vertex_risks(&loss, &sample)?,
        solver: out.solver,
    };
    println!("method: {}", method.name());
    println!("theta_hat: [{}]", fmt_weights(&report.theta_hat));
    println!("empirical risk: {:.9}", report.empirical_risk);
    println!("dictionary risks: [{}]", fmt_weights(&report.vertex_risks));
    if let Some(p) = &cli.out {
        emit(&report, Some(p))?;
    }
    Ok(true)
}

fn cmd_calibrate(cli: &Cli, args: &CalibrateArgs) -> Result<bool> {
    let loss = args.loss.model()?;
    let beta = match parse_beta(&args.beta)? {
        Beta::Auto => None,
        Beta::Fixed(b) => Some(b),
    };
    let r = calibrate(&loss, args.nu, beta, args.n)?;
    println!("loss {} b={} C_b={} C_l={} nu={} n={}", loss.kind.name(), loss.b, loss.c_b, loss.c_l, args.nu, args.n);
    println!("mu = {}", r.mu);
    println!("beta_min = {} (terms {}, {}, {})", r.beta_min, r.beta_terms[0], r.beta_terms[1], r.beta_terms[2]);
    println!("beta = {}", r.beta);
    println!("s = 3n/beta = {}", r.s);
    for c in &r.conditions {
        println!("  [{}] {:<48} slack {:.6e}", if c.satisfied { "ok" } else { "FAIL" }, c.name, c.slack);
    }
    if let Some(p) = &cli.out {
        emit(&r, Some(p))?;
    }
    Ok(r.all_satisfied())
}

fn print_summary(report: &ExperimentReport) {
    for c in &report.aggregates.cells {
        let tails: Vec<String> = c.tails.iter().map(|t| format!("x={}: {:.4}<={:.4}", t.x, t.frequency, t.limit)).collect();
        eprintln!(
            "{:<20} n={:<6} mean excess {:>11.6} (se {:.2e}) bound {:.6}  {}",
            c.method.name(),
            c.n,
            c.mean_excess,
            c.se_excess,
            c.bound,
            tails.join("  ")
        );
    }
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<bool> {
    let loss = args.loss.model()?;
    let spec = args.generator.spec(loss.b, cli.seed)?;
    let pop = generate_problem(&spec)?;
    let config = args.config.config(pop.m())?;
    let opts = ExperimentOptions { seed: cli.seed, threads: cli.threads as usize, solver: args.config.solver()? };
    let methods = parse_methods(&args.methods)?;
    let report =
        oracle_inequality_experiment(&loss, &pop, &config, &args.n_grid, cli.replications, &args.x_grid, &methods, &opts, Some(spec))?;
    print_summary(&report);
    emit(&report, cli.out.as_deref())?;
    Ok(report.all_pass())
}

fn cmd_compare(cli: &Cli, args: &CompareArgs) -> Result<bool> {
    let loss = args.loss.model()?;
    let config = args.config.config(2)?;
    let opts = ExperimentOptions { seed: cli.seed, threads: cli.threads as usize, solver: args.config.solver()? };
    let methods = parse_methods(&args.methods)?;
    let base = GeneratorSpec::near_tie(loss.b, 0.0);
    let report = rate_experiment(&loss, &base, &config, &args.n_grid, cli.replications, &args.x_grid, &methods, &opts)?;
    print_summary(&report);
    for s in &report.aggregates.slopes {
        match s.slope {
            Some(v) => eprintln!("slope {:<20} {v:.4}", s.method.name()),
            None => eprintln!("slope {:<20} undefined (non-positive mean excess)", s.method.name()),
        }
    }
    emit(&report, cli.out.as_deref())?;
    Ok(true)
}

fn cmd_verify(cli: &Cli) -> Result<bool> {
    let opts = SuiteOptions { seed: cli.seed, replications: cli.replications, threads: cli.threads as usize };
    let outcomes = run_verification_suite(&opts)?;
    for o in &outcomes {
        println!("[{}] {:<26} {}", if o.pass { "pass" } else { "FAIL" }, o.name, o.detail);
    }
    if let Some(p) = &cli.out {
        emit(&outcomes, Some(p))?;
    }
    Ok(outcomes.iter().all(|o| o.pass))
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Aggregate(a) => cmd_aggregate(cli, a),
        Command::Calibrate(a) => cmd_calibrate(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Verify => cmd_verify(cli),
        Command::Compare(a) => cmd_compare(cli, a),
    }
}

/// Parses `argv` (program name first) and runs the command. Returns 0 when
/// every requested check passes, 1 when a check fails or the command errors,
/// and 2 on usage errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
