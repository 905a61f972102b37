//! Aitchison algebra on the open probability simplex and its logit-space
//! representation.
//!
//! The simplex with perturbation (entrywise product, renormalised) and
//! powering (entrywise power, renormalised) is a vector space with the uniform
//! distribution as its zero. Taking logs maps it onto `R^D` modulo constant
//! shifts, where the same operations become ordinary `+` and `*`.

use super::space::centered_dot;
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// All entries strictly positive and finite, summing to one within 1e-12.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(Error::InvalidSimplex(format!(
                "need at least 2 classes, got {}",
                probabilities.len()
            )));
        }
        if let Some(bad) = probabilities.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidSimplex(format!("entry {bad} is not positive")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidSimplex(format!("entries sum to {total}")));
        }
        Ok(Self(probabilities))
    }

    /// Divides positive weights by their sum.
    pub fn normalize(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidSimplex(format!("cannot normalise weights summing to {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        Self::normalize(vec![1.0; classes])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }
}

/// A point of `R^D` read modulo constant shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::Empty("LogitVector::new"));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "LogitVector::new",
            });
        }
        Ok(Self(logits))
    }

    pub fn logits(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Representative with zero mean.
    pub fn canonical(&self) -> LogitVector {
        let mean = self.0.iter().sum::<f64>() / self.0.len() as f64;
        LogitVector(self.0.iter().map(|v| v - mean).collect())
    }

    /// True when the two vectors differ by a constant shift (within `tol`).
    pub fn equivalent(&self, other: &LogitVector, tol: f64) -> bool {
        self.classes() == other.classes()
            && self
                .canonical()
                .0
                .iter()
                .zip(&other.canonical().0)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

fn check_classes(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            context: "simplex",
            expected: format!("{a} classes"),
            actual: format!("{b} classes"),
        });
    }
    Ok(())
}

/// `Σ_i (x_i - mean(x)) (y_i - mean(y))`.
pub fn logit_inner_product(x: &LogitVector, y: &LogitVector) -> Result<f64> {
    check_classes(x.classes(), y.classes())?;
    Ok(centered_dot(&x.0, &y.0))
}

/// Aitchison inner product evaluated directly on the simplex, through log
/// ratios to the geometric mean.
pub fn aitchison_inner_product(x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
    check_classes(x.classes(), y.classes())?;
    let clr = |p: &SimplexPoint| {
        let logs: Vec<f64> = p.0.iter().map(|v| v.ln()).collect();
        let log_gmean = logs.iter().sum::<f64>() / logs.len() as f64;
        logs.into_iter().map(move |l| l - log_gmean)
    };
    Ok(clr(x).zip(clr(y)).map(|(a, b)| a * b).sum())
}

pub fn probability_to_logit(p: &SimplexPoint) -> LogitVector {
    LogitVector(p.0.iter().map(|v| v.ln()).collect())
}

/// Softmax; invariant under constant shifts of the input.
pub fn logit_to_probability(z: &LogitVector) -> SimplexPoint {
    let max = z.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.0.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    // exps contains exp(0) = 1, so total >= 1 and every entry is positive
    // unless it underflows to zero, which we clamp to the smallest normal.
    SimplexPoint(
        exps.into_iter()
            .map(|e| (e / total).max(f64::MIN_POSITIVE))
            .collect(),
    )
}

/// Perturbation `x ⊕ y = normalize(x_i y_i)`.
pub fn simplex_add(x: &SimplexPoint, y: &SimplexPoint) -> Result<SimplexPoint> {
    check_classes(x.classes(), y.classes())?;
    SimplexPoint::normalize(x.0.iter().zip(&y.0).map(|(a, b)| a * b).collect())
}

/// Powering `α ⊙ x = normalize(x_i^α)`.
pub fn simplex_scale(alpha: f64, x: &SimplexPoint) -> Result<SimplexPoint> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("scale {alpha} is not finite")));
    }
    // computed in log space so large |alpha| does not under/overflow
    let logits = LogitVector(x.0.iter().map(|v| alpha * v.ln()).collect());
    Ok(logit_to_probability(&logits))
}

/// One-hot style logit label: `positive` at `class_index`, `negative` elsewhere.
pub fn label_to_logits(class_index: usize, classes: usize, positive: f64, negative: f64) -> Result<LogitVector> {
    if class_index >= classes {
        return Err(Error::IndexOutOfRange {
            index: class_index,
            size: classes,
        });
    }
    if !(positive > negative) {
        return Err(Error::InvalidArgument(format!(
            "positive logit {positive} must exceed negative logit {negative}"
        )));
    }
    let mut v = vec![negative; classes];
    v[class_index] = positive;
    LogitVector::new(v)
}
