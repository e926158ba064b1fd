//! Domain types: dictionaries as value matrices, samples, finite-support
//! populations, simplex points and priors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::LossModel;

/// Tolerance on `sum = 1` for simplex points, priors and probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Dictionary values: rows are samples (or support atoms), columns are `f_1..f_M`.
pub type PredictionMatrix = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch { what: "matrix values", expected: rows * cols, got: values.len() });
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { what: "matrix row", expected: cols, got: r.len() });
            }
            values.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, values: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New matrix whose column `k` is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (k, &j) in perm.iter().enumerate() {
                out.set(i, k, self.get(i, j));
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..i).all(|j| {
                    let (a, b) = (self.get(i, j), self.get(j, i));
                    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
                })
            })
    }

    /// First out-of-box entry as `(row, col, value)`.
    pub fn find_out_of_box(&self, loss: &LossModel) -> Option<(usize, usize, f64)> {
        self.values.iter().position(|&v| !loss.in_box(v) || !v.is_finite()).map(|k| (k / self.cols, k % self.cols, self.values[k]))
    }
}

/// Observed dictionary evaluations with their labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledSample {
    pub predictions: PredictionMatrix,
    pub labels: Vec<f64>,
}

impl LabeledSample {
    pub fn new(predictions: PredictionMatrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != predictions.rows() {
            return Err(Error::DimensionMismatch { what: "labels", expected: predictions.rows(), got: labels.len() });
        }
        Ok(LabeledSample { predictions, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.predictions.cols()
    }

    /// Checks every label and prediction against the loss's box.
    pub fn validate(&self, loss: &LossModel) -> Result<()> {
        if let Some((i, j, v)) = self.predictions.find_out_of_box(loss) {
            return Err(Error::Domain(format!("prediction f_{}(X_{}) = {v} outside [-{b}, {b}]", j + 1, i + 1, b = loss.b)));
        }
        for (i, &y) in self.labels.iter().enumerate() {
            loss.check_label(y).map_err(|e| Error::Domain(format!("observation {}: {e}", i + 1)))?;
        }
        Ok(())
    }
}

/// Finite-support joint law of `(X, Y)`; atom `s` carries the dictionary
/// values `f_j(x_s)`, the label `y_s` and probability `p_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationModel {
    pub support_predictions: PredictionMatrix,
    pub support_labels: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl PopulationModel {
    pub fn new(support_predictions: PredictionMatrix, support_labels: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        let s = support_predictions.rows();
        if support_labels.len() != s {
            return Err(Error::DimensionMismatch { what: "support labels", expected: s, got: support_labels.len() });
        }
        if probabilities.len() != s {
            return Err(Error::DimensionMismatch { what: "probabilities", expected: s, got: probabilities.len() });
        }
        if probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        Ok(PopulationModel { support_predictions, support_labels, probabilities })
    }

    pub fn support_size(&self) -> usize {
        self.probabilities.len()
    }

    pub fn m(&self) -> usize {
        self.support_predictions.cols()
    }

    pub fn validate(&self, loss: &LossModel) -> Result<()> {
        if let Some((i, j, v)) = self.support_predictions.find_out_of_box(loss) {
            return Err(Error::Domain(format!("f_{}(x_{}) = {v} outside [-{b}, {b}]", j + 1, i + 1, b = loss.b)));
        }
        for &y in &self.support_labels {
            loss.check_label(y)?;
        }
        Ok(())
    }

    /// Gram matrix `G_jk = <f_j, f_k>` in `L2(P_X)`.
    pub fn gram(&self) -> Matrix {
        let m = self.m();
        let mut g = Matrix::zeros(m, m);
        for j in 0..m {
            for k in 0..=j {
                let v: f64 = self
                    .probabilities
                    .iter()
                    .enumerate()
                    .map(|(s, &p)| p * self.support_predictions.get(s, j) * self.support_predictions.get(s, k))
                    .sum();
                g.set(j, k, v);
                g.set(k, j, v);
            }
        }
        g
    }

    /// Same law with dictionary columns reordered as in [`Matrix::permute_columns`].
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        PopulationModel {
            support_predictions: self.support_predictions.permute_columns(perm),
            support_labels: self.support_labels.clone(),
            probabilities: self.probabilities.clone(),
        }
    }
}

/// A point of the flat simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter("simplex dimension must be at least 1".into()));
        }
        if theta.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("simplex weights must be nonnegative: {theta:?}")));
        }
        let total: f64 = theta.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!("simplex weights sum to {total}, not 1")));
        }
        Ok(SimplexWeights(theta))
    }

    /// Rescales a nonnegative vector with positive mass onto the simplex.
    pub fn normalized(mut theta: Vec<f64>) -> Result<Self> {
        let total: f64 = theta.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a vector without positive mass".into()));
        }
        theta.iter_mut().for_each(|t| *t /= total);
        SimplexWeights::new(theta)
    }

    pub fn uniform(m: usize) -> Self {
        SimplexWeights(vec![1.0 / m as f64; m])
    }

    pub fn vertex(m: usize, j: usize) -> Self {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        SimplexWeights(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        SimplexWeights(perm.iter().map(|&j| self.0[j]).collect())
    }
}

/// Strictly positive prior over the dictionary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::InvalidParameter("prior must be non-empty".into()));
        }
        if pi.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("prior weights must be strictly positive: {pi:?}")));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!("prior sums to {total}, not 1")));
        }
        Ok(Prior(pi))
    }

    pub fn uniform(m: usize) -> Self {
        Prior(vec![1.0 / m as f64; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_uniform(&self) -> bool {
        self.0.iter().all(|&p| p == self.0[0])
    }

    /// `log(1/pi_j)` for each j.
    pub fn log_inverse(&self) -> Vec<f64> {
        self.0.iter().map(|p| -p.ln()).collect()
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        Prior(perm.iter().map(|&j| self.0[j]).collect())
    }
}

/// Temperature setting. `Auto` resolves to the calibrated lower bound times
/// [`crate::calibration::AUTO_BETA_FACTOR`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Beta {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationConfig {
    pub nu: f64,
    pub beta: Beta,
    pub prior: Prior,
}

impl AggregationConfig {
    pub const DEFAULT_NU: f64 = 0.5;

    pub fn new(nu: f64, beta: Beta, prior: Prior) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!("nu must lie in (0, 1), got {nu}")));
        }
        if let Beta::Fixed(b) = beta {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("beta must be positive, got {b}")));
            }
        }
        Ok(AggregationConfig { nu, beta, prior })
    }

    /// Default mixing parameter, automatic temperature, uniform prior.
    pub fn uniform(m: usize) -> Self {
        AggregationConfig { nu: Self::DEFAULT_NU, beta: Beta::Auto, prior: Prior::uniform(m) }
    }

    /// Numeric temperature; `Auto` is resolved from the loss constants.
    pub fn resolve_beta(&self, loss: &LossModel) -> Result<f64> {
        match self.beta {
            Beta::Fixed(b) => Ok(b),
            Beta::Auto => crate::calibration::auto_beta(self.nu, loss),
        }
    }
}
