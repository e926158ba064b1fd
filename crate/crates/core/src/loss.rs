//! Loss models satisfying the bounded Lipschitz / strongly convex assumption.
//!
//! A [`LossModel`] carries the amplitude bound `b` together with the Lipschitz
//! constant `c_b` and the strong-convexity modulus `c_l` on `[-b, b]`. Built-in
//! kinds get tight constants from [`loss_constants`]; user-supplied losses must
//! state their own.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative slack accepted on the `[-b, b]` box to absorb rounding in convex
/// combinations. Nothing is ever clipped.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// A loss supplied by the caller. The derivative may be any element of the
/// subdifferential in the second argument.
pub trait CustomLoss: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, y: f64, a: f64) -> f64;
    fn derivative(&self, y: f64, a: f64) -> f64;
}

#[derive(Clone)]
pub enum LossKind {
    /// `(y - a)^2`
    Squared,
    /// `log(1 + exp(-y a))` with labels in `{-1, +1}`
    Logistic,
    Custom(Arc<dyn CustomLoss>),
}

impl LossKind {
    pub fn name(&self) -> &str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Logistic => "logistic",
            LossKind::Custom(c) => c.name(),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "squared" => Ok(LossKind::Squared),
            "logistic" => Ok(LossKind::Logistic),
            other => Err(Error::UnsupportedLoss(other.to_string())),
        }
    }
}

impl fmt::Debug for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for LossKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LossModel {
    pub kind: LossKind,
    pub b: f64,
    pub c_b: f64,
    pub c_l: f64,
}

impl LossModel {
    /// Built-in loss with tight constants on `[-b, b]`.
    pub fn new(kind: LossKind, b: f64) -> Result<Self> {
        let (c_b, c_l) = loss_constants(&kind, b)?;
        Ok(LossModel { kind, b, c_b, c_l })
    }

    pub fn squared(b: f64) -> Result<Self> {
        Self::new(LossKind::Squared, b)
    }

    pub fn logistic(b: f64) -> Result<Self> {
        Self::new(LossKind::Logistic, b)
    }

    /// Any kind with caller-stated constants. Overriding a built-in with a
    /// larger `c_b` or a smaller `c_l` is allowed; both stay valid bounds.
    pub fn with_constants(kind: LossKind, b: f64, c_b: f64, c_l: f64) -> Result<Self> {
        if !(b > 0.0 && c_b > 0.0 && c_l > 0.0) || !(b.is_finite() && c_b.is_finite() && c_l.is_finite()) {
            return Err(Error::InvalidParameter(format!("loss constants must be positive and finite (b = {b}, C_b = {c_b}, C_l = {c_l})")));
        }
        if matches!(kind, LossKind::Logistic) && b < 1.0 {
            return Err(Error::InvalidParameter(format!("logistic loss needs b >= 1 so that labels +-1 are admissible, got b = {b}")));
        }
        Ok(LossModel { kind, b, c_b, c_l })
    }

    #[inline]
    pub fn in_box(&self, v: f64) -> bool {
        v.abs() <= self.b * (1.0 + DOMAIN_SLACK)
    }

    /// Checks that a label is admissible for this loss.
    pub fn check_label(&self, y: f64) -> Result<()> {
        if !self.in_box(y) {
            return Err(Error::Domain(format!("label {y} outside [-{b}, {b}]", b = self.b)));
        }
        if matches!(self.kind, LossKind::Logistic) && y != 1.0 && y != -1.0 {
            return Err(Error::Domain(format!("logistic loss needs labels in {{-1, +1}}, got {y}")));
        }
        Ok(())
    }

    pub fn check_prediction(&self, a: f64) -> Result<()> {
        if !self.in_box(a) {
            return Err(Error::Domain(format!("prediction {a} outside [-{b}, {b}]", b = self.b)));
        }
        Ok(())
    }

    /// Returns `(l(y, a), d/da l(y, a))`.
    pub fn eval(&self, y: f64, a: f64) -> Result<(f64, f64)> {
        self.check_label(y)?;
        self.check_prediction(a)?;
        Ok(self.eval_unchecked(y, a))
    }

    /// Evaluation without the domain checks, for inner loops whose inputs were
    /// validated upstream.
    #[inline]
    pub(crate) fn eval_unchecked(&self, y: f64, a: f64) -> (f64, f64) {
        match &self.kind {
            LossKind::Squared => {
                let r = y - a;
                (r * r, -2.0 * r)
            }
            LossKind::Logistic => {
                let z = y * a;
                (softplus(-z), -y * sigmoid(-z))
            }
            LossKind::Custom(c) => (c.value(y, a), c.derivative(y, a)),
        }
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, y: f64, a: f64) -> f64 {
        match &self.kind {
            LossKind::Squared => (y - a) * (y - a),
            LossKind::Logistic => softplus(-y * a),
            LossKind::Custom(c) => c.value(y, a),
        }
    }
}

/// `loss_eval`: value and derivative of the loss at `(y, a)`.
pub fn loss_eval(loss: &LossModel, y: f64, a: f64) -> Result<(f64, f64)> {
    loss.eval(y, a)
}

/// Tight `(C_b, C_l)` for a built-in loss on `[-b, b]`.
///
/// Squared: `sup |2(a - y)| = 4b`, second derivative `2`.
/// Logistic (labels `+-1`): `|d/da| = sigma(-ya) <= sigma(b)`, second derivative
/// `sigma(a)(1 - sigma(a))` is smallest at `|a| = b`.
pub fn loss_constants(kind: &LossKind, b: f64) -> Result<(f64, f64)> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
    }
    match kind {
        LossKind::Squared => Ok((4.0 * b, 2.0)),
        LossKind::Logistic => {
            if b < 1.0 {
                return Err(Error::InvalidParameter(format!("logistic loss needs b >= 1 so that labels +-1 are admissible, got b = {b}")));
            }
            let s = sigmoid(b);
            Ok((s, s * (1.0 - s)))
        }
        LossKind::Custom(c) => {
            Err(Error::UnsupportedLoss(format!("{}: constants of a user-supplied loss must be given explicitly", c.name())))
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_closed_form() {
        let l = LossModel::squared(1.0).unwrap();
        assert_eq!(l.eval(1.0, 0.0).unwrap(), (1.0, -2.0));
        assert_eq!(l.eval(0.3, 0.3).unwrap(), (0.0, -0.0));
    }

    #[test]
    fn logistic_at_origin() {
        let l = LossModel::logistic(1.0).unwrap();
        let (v, d) = l.eval(1.0, 0.0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((d + 0.5).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let l = LossModel::squared(1.0).unwrap();
        assert!(matches!(l.eval(1.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(l.eval(0.0, -1.01), Err(Error::Domain(_))));
        let g = LossModel::logistic(2.0).unwrap();
        assert!(matches!(g.eval(0.5, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constants_of_builtins() {
        assert_eq!(loss_constants(&LossKind::Squared, 1.0).unwrap(), (4.0, 2.0));
        assert_eq!(loss_constants(&LossKind::Squared, 2.0).unwrap(), (8.0, 2.0));
        let (cb, cl) = loss_constants(&LossKind::Logistic, 1.0).unwrap();
        assert!((cb - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((cl - 0.196_611_933_241_481_85).abs() < 1e-12);
        assert!(loss_constants(&LossKind::Squared, 0.0).is_err());
    }

    struct Abs;
    impl CustomLoss for Abs {
        fn name(&self) -> &str {
            "abs"
        }
        fn value(&self, y: f64, a: f64) -> f64 {
            (y - a).abs()
        }
        fn derivative(&self, y: f64, a: f64) -> f64 {
            (a - y).signum()
        }
    }

    #[test]
    fn custom_loss_needs_explicit_constants() {
        let kind = LossKind::Custom(Arc::new(Abs));
        assert!(matches!(loss_constants(&kind, 1.0), Err(Error::UnsupportedLoss(_))));
        let l = LossModel::with_constants(kind, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(l.eval(0.5, -0.5).unwrap(), (1.0, -1.0));
    }
}
