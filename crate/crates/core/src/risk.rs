//! Risk and penalty functionals evaluated from their definitions.
//!
//! These are the reference evaluations; the solvers use the precomputed
//! [`crate::objective::AggregationObjective`], which is checked against them.

use crate::error::{Error, Result};
use crate::loss::LossModel;
use crate::model::{AggregationConfig, LabeledSample, Matrix, PopulationModel, PredictionMatrix, Prior, SimplexWeights};

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

/// `R_n(f) = (1/n) sum_i l(Y_i, f(X_i))`.
pub fn empirical_risk(loss: &LossModel, sample: &LabeledSample, f_values: &[f64]) -> Result<f64> {
    check_len("f values", sample.n(), f_values.len())?;
    let mut total = 0.0;
    for (&y, &a) in sample.labels.iter().zip(f_values) {
        total += loss.eval(y, a)?.0;
    }
    Ok(total / sample.n() as f64)
}

/// `R(f) = sum_s p_s l(y_s, f(x_s))`, exact on the finite support.
pub fn population_risk(loss: &LossModel, pop: &PopulationModel, f_values: &[f64]) -> Result<f64> {
    check_len("f values", pop.support_size(), f_values.len())?;
    let mut total = 0.0;
    for ((&p, &y), &a) in pop.probabilities.iter().zip(&pop.support_labels).zip(f_values) {
        total += p * loss.eval(y, a)?.0;
    }
    Ok(total)
}

/// `f_theta` evaluated on every row: `predictions . theta`.
pub fn mixture(theta: &SimplexWeights, predictions: &PredictionMatrix) -> Result<Vec<f64>> {
    check_len("theta", predictions.cols(), theta.dim())?;
    Ok(mixture_raw(theta.as_slice(), predictions))
}

pub(crate) fn mixture_raw(theta: &[f64], predictions: &PredictionMatrix) -> Vec<f64> {
    (0..predictions.rows()).map(|i| predictions.row(i).iter().zip(theta).map(|(p, t)| p * t).sum()).collect()
}

/// Empirical risks of every dictionary column.
pub fn vertex_risks(loss: &LossModel, sample: &LabeledSample) -> Result<Vec<f64>> {
    (0..sample.m()).map(|j| empirical_risk(loss, sample, &sample.predictions.column(j))).collect()
}

/// Population risks of every dictionary column.
pub fn population_vertex_risks(loss: &LossModel, pop: &PopulationModel) -> Result<Vec<f64>> {
    (0..pop.m()).map(|j| population_risk(loss, pop, &pop.support_predictions.column(j))).collect()
}

/// `Q(theta) = (1 - nu) R_n(f_theta) + nu sum_j theta_j R_n(f_j)`; `nu` may be 0 or 1.
pub fn q_functional(loss: &LossModel, sample: &LabeledSample, theta: &SimplexWeights, nu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::InvalidParameter(format!("nu must lie in [0, 1], got {nu}")));
    }
    let f_theta = mixture(theta, &sample.predictions)?;
    let mixed = empirical_risk(loss, sample, &f_theta)?;
    let linear: f64 = vertex_risks(loss, sample)?.iter().zip(theta.as_slice()).map(|(r, t)| r * t).sum();
    Ok((1.0 - nu) * mixed + nu * linear)
}

/// `K(theta) = sum_j theta_j log(1/pi_j)`.
pub fn penalty_k(theta: &SimplexWeights, prior: &Prior) -> Result<f64> {
    check_len("prior", theta.dim(), prior.dim())?;
    Ok(theta.as_slice().iter().zip(prior.as_slice()).map(|(t, p)| -t * p.ln()).sum())
}

/// Q-aggregation objective `Q(theta) + (beta/n) K(theta)`.
pub fn objective(loss: &LossModel, sample: &LabeledSample, config: &AggregationConfig, theta: &SimplexWeights) -> Result<f64> {
    let beta = config.resolve_beta(loss)?;
    let q = q_functional(loss, sample, theta, config.nu)?;
    Ok(q + beta / sample.n() as f64 * penalty_k(theta, &config.prior)?)
}

/// Gradient of [`objective`] in `theta` (a subgradient for non-smooth losses).
pub fn objective_subgradient(
    loss: &LossModel,
    sample: &LabeledSample,
    config: &AggregationConfig,
    theta: &SimplexWeights,
) -> Result<Vec<f64>> {
    check_len("prior", theta.dim(), config.prior.dim())?;
    let beta = config.resolve_beta(loss)?;
    let n = sample.n() as f64;
    let nu = config.nu;
    let f_theta = mixture(theta, &sample.predictions)?;
    let risks = vertex_risks(loss, sample)?;
    let mut grad = vec![0.0; theta.dim()];
    for (i, (&y, &a)) in sample.labels.iter().zip(&f_theta).enumerate() {
        let (_, d) = loss.eval(y, a)?;
        for (g, &p) in grad.iter_mut().zip(sample.predictions.row(i)) {
            *g += d * p;
        }
    }
    for (j, g) in grad.iter_mut().enumerate() {
        *g = (1.0 - nu) * *g / n + nu * risks[j] - beta / n * config.prior.as_slice()[j].ln();
    }
    Ok(grad)
}

fn check_gram(gram: &Matrix, m: usize) -> Result<()> {
    check_len("gram", m, gram.rows())?;
    if !gram.is_symmetric(1e-12) {
        return Err(Error::InvalidParameter("gram matrix is not symmetric".into()));
    }
    Ok(())
}

fn quad_form(gram: &Matrix, u: &[f64], v: &[f64]) -> f64 {
    (0..u.len()).map(|j| u[j] * (0..v.len()).map(|k| gram.get(j, k) * v[k]).sum::<f64>()).sum()
}

/// `V(theta) = sum_j theta_j ||f_j - f_theta||^2 = sum_j theta_j G_jj - theta' G theta`.
pub fn variance_v(theta: &SimplexWeights, gram: &Matrix) -> Result<f64> {
    check_gram(gram, theta.dim())?;
    let t = theta.as_slice();
    let diag: f64 = t.iter().enumerate().map(|(j, tj)| tj * gram.get(j, j)).sum();
    Ok(diag - quad_form(gram, t, t))
}

/// `||f_theta - f_theta'||_2^2 = (theta - theta')' G (theta - theta')`.
pub fn mixture_distance_sq(theta: &SimplexWeights, other: &SimplexWeights, gram: &Matrix) -> Result<f64> {
    check_gram(gram, theta.dim())?;
    check_len("theta", theta.dim(), other.dim())?;
    let d: Vec<f64> = theta.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a - b).collect();
    Ok(quad_form(gram, &d, &d))
}

/// `sum_j theta_j ||f_j - f_other||^2`.
pub fn spread_around(theta: &SimplexWeights, other: &SimplexWeights, gram: &Matrix) -> Result<f64> {
    check_gram(gram, theta.dim())?;
    check_len("theta", theta.dim(), other.dim())?;
    let o = other.as_slice();
    let oo = quad_form(gram, o, o);
    let m = theta.dim();
    Ok(theta
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, tj)| {
            let cross: f64 = (0..m).map(|k| gram.get(j, k) * o[k]).sum();
            tj * (gram.get(j, j) - 2.0 * cross + oo)
        })
        .sum())
}

/// `H_jk = ||f_j - f_k||^2 = G_jj + G_kk - 2 G_jk`.
pub fn h_matrix(gram: &Matrix) -> Result<Matrix> {
    check_gram(gram, gram.cols())?;
    let m = gram.rows();
    let mut h = Matrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            if j != k {
                h.set(j, k, gram.get(j, j) + gram.get(k, k) - 2.0 * gram.get(j, k));
            }
        }
    }
    Ok(h)
}

/// `theta' H other`.
pub fn h_form(theta: &SimplexWeights, h: &Matrix, other: &SimplexWeights) -> Result<f64> {
    check_len("H", theta.dim(), h.rows())?;
    check_len("theta", theta.dim(), other.dim())?;
    Ok(quad_form(h, theta.as_slice(), other.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Beta;

    fn sq() -> LossModel {
        LossModel::squared(1.0).unwrap()
    }

    #[test]
    fn empirical_risk_small_cases() {
        let s = LabeledSample::new(Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(), vec![0.0, 0.0]).unwrap();
        assert_eq!(empirical_risk(&sq(), &s, &[1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(empirical_risk(&sq(), &s, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn population_risk_small_cases() {
        let pop = PopulationModel::new(Matrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap(), vec![1.0, -1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(population_risk(&sq(), &pop, &[0.0, 0.0]).unwrap(), 1.0);
        let b2 = LossModel::squared(2.0).unwrap();
        let pop2 = PopulationModel::new(Matrix::from_rows(&[vec![0.0], vec![0.0]]).unwrap(), vec![2.0, -2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(population_risk(&b2, &pop2, &[0.0, 0.0]).unwrap(), 4.0);
        let one = PopulationModel::new(Matrix::from_rows(&[vec![0.3]]).unwrap(), vec![0.3], vec![1.0]).unwrap();
        assert_eq!(population_risk(&sq(), &one, &[0.3]).unwrap(), 0.0);
        // 0.25 * (1 - 0.5)^2 + 0.75 * (-1 - 0.2)^2
        let two = PopulationModel::new(Matrix::from_rows(&[vec![0.5], vec![0.2]]).unwrap(), vec![1.0, -1.0], vec![0.25, 0.75]).unwrap();
        let expected = 0.25 * 0.25 + 0.75 * 1.44;
        assert!((population_risk(&sq(), &two, &[0.5, 0.2]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mixture_vertices_and_midpoint() {
        let p = Matrix::from_rows(&[vec![0.2, -0.4], vec![1.0, 0.0]]).unwrap();
        assert_eq!(mixture(&SimplexWeights::vertex(2, 1), &p).unwrap(), vec![-0.4, 0.0]);
        assert_eq!(mixture(&SimplexWeights::uniform(2), &p).unwrap(), vec![-0.1, 0.5]);
        assert!(mixture(&SimplexWeights::uniform(3), &p).is_err());
    }

    #[test]
    fn q_functional_endpoints() {
        let s = LabeledSample::new(Matrix::from_rows(&[vec![0.5, -0.5], vec![0.1, 0.9]]).unwrap(), vec![1.0, -1.0]).unwrap();
        let th = SimplexWeights::new(vec![0.3, 0.7]).unwrap();
        let f = mixture(&th, &s.predictions).unwrap();
        let r = vertex_risks(&sq(), &s).unwrap();
        assert_eq!(q_functional(&sq(), &s, &th, 0.0).unwrap(), empirical_risk(&sq(), &s, &f).unwrap());
        assert!((q_functional(&sq(), &s, &th, 1.0).unwrap() - (0.3 * r[0] + 0.7 * r[1])).abs() < 1e-15);
        for nu in [0.0, 0.3, 1.0] {
            assert_eq!(q_functional(&sq(), &s, &SimplexWeights::vertex(2, 1), nu).unwrap(), r[1]);
        }
        assert!(q_functional(&sq(), &s, &th, 1.5).is_err());
    }

    #[test]
    fn objective_uniform_prior_and_singleton() {
        let s = LabeledSample::new(Matrix::from_rows(&[vec![0.5, -0.5, 0.1]]).unwrap(), vec![1.0]).unwrap();
        let cfg = AggregationConfig::new(0.5, Beta::Fixed(2.0), Prior::uniform(3)).unwrap();
        let th = SimplexWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        let q = q_functional(&sq(), &s, &th, 0.5).unwrap();
        assert!((objective(&sq(), &s, &cfg, &th).unwrap() - (q + 2.0 * 3f64.ln())).abs() < 1e-14);

        let s1 = LabeledSample::new(Matrix::from_rows(&[vec![0.5]]).unwrap(), vec![1.0]).unwrap();
        let cfg1 = AggregationConfig::new(0.5, Beta::Fixed(7.0), Prior::uniform(1)).unwrap();
        assert_eq!(objective(&sq(), &s1, &cfg1, &SimplexWeights::uniform(1)).unwrap(), 0.25);
    }

    #[test]
    fn subgradient_linear_and_hand_cases() {
        let s = LabeledSample::new(Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap(), vec![0.0]).unwrap();
        let cfg = AggregationConfig { nu: 0.0, beta: Beta::Fixed(0.0), prior: Prior::uniform(2) };
        let g = objective_subgradient(&sq(), &s, &cfg, &SimplexWeights::uniform(2)).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);

        let prior = Prior::new(vec![0.25, 0.75]).unwrap();
        let cfg = AggregationConfig { nu: 1.0, beta: Beta::Fixed(3.0), prior: prior.clone() };
        let r = vertex_risks(&sq(), &s).unwrap();
        let expected: Vec<f64> = (0..2).map(|j| r[j] - 3.0 * prior.as_slice()[j].ln()).collect();
        for th in [SimplexWeights::uniform(2), SimplexWeights::vertex(2, 0)] {
            let g = objective_subgradient(&sq(), &s, &cfg, &th).unwrap();
            for j in 0..2 {
                assert!((g[j] - expected[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn penalty_cases() {
        let p = Prior::uniform(4);
        let th = SimplexWeights::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((penalty_k(&th, &p).unwrap() - 4f64.ln()).abs() < 1e-15);
        let q = Prior::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((penalty_k(&SimplexWeights::vertex(4, 2), &q).unwrap() - (1.0 / 0.3f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn variance_and_h_small_cases() {
        // two orthonormal functions
        let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((variance_v(&SimplexWeights::uniform(2), &g).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(variance_v(&SimplexWeights::vertex(2, 0), &g).unwrap(), 0.0);
        let h = h_matrix(&g).unwrap();
        assert_eq!(h.get(0, 0), 0.0);
        assert_eq!(h.get(0, 1), 2.0);
        assert!(h.is_symmetric(0.0));
        let bad = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(variance_v(&SimplexWeights::uniform(2), &bad).is_err());
    }
}
