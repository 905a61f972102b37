use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{TaskDescriptor, TaskSample};
use crate::encoder::TaskSampler;
use crate::error::{Error, Result};
use crate::hilbert::{FunctionDataset, HilbertSpace};
use crate::numerics::Tensor;

/// Family of random polynomials on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTaskSpec {
    pub degree: usize,
    pub coefficient_low: f64,
    pub coefficient_high: f64,
    pub input_low: f64,
    pub input_high: f64,
    pub m_example: usize,
    pub m_query: usize,
    pub noise_std: f64,
}

impl Default for PolynomialTaskSpec {
    fn default() -> Self {
        Self::type1()
    }
}

impl PolynomialTaskSpec {
    /// Training family: quadratics with coefficients in [-3, 3].
    pub fn type1() -> Self {
        Self {
            degree: 2,
            coefficient_low: -3.0,
            coefficient_high: 3.0,
            input_low: -1.0,
            input_high: 1.0,
            m_example: 100,
            m_query: 1000,
            noise_std: 0.0,
        }
    }

    /// Quadratics with coefficients in [-20, 20].
    pub fn type2() -> Self {
        Self {
            coefficient_low: -20.0,
            coefficient_high: 20.0,
            ..Self::type1()
        }
    }

    /// Cubics with coefficients in [-3, 3].
    pub fn type3() -> Self {
        Self {
            degree: 3,
            ..Self::type1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.coefficient_low <= self.coefficient_high
            && self.input_low < self.input_high
            && self.m_example >= 1
            && self.m_query >= 1
            && self.noise_std >= 0.0
            && [self.coefficient_low, self.coefficient_high, self.input_low, self.input_high, self.noise_std]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid polynomial task spec {self:?}")))
        }
    }

    fn max_abs_coefficient(&self) -> f64 {
        self.coefficient_low.abs().max(self.coefficient_high.abs())
    }
}

/// Rejection rule applied to freshly drawn coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientConstraint {
    None,
    /// Some coefficient has magnitude above the bound.
    MaxAbsAbove(f64),
    /// The leading coefficient has magnitude at least the bound.
    LeadingAbsAtLeast(f64),
}

impl CoefficientConstraint {
    fn accepts(self, coefficients: &[f64]) -> bool {
        match self {
            CoefficientConstraint::None => true,
            CoefficientConstraint::MaxAbsAbove(b) => coefficients.iter().any(|c| c.abs() > b),
            CoefficientConstraint::LeadingAbsAtLeast(b) => coefficients.last().is_some_and(|c| c.abs() >= b),
        }
    }

    /// Whether the coefficient range can satisfy the rule at all; when it
    /// cannot, the rule is skipped instead of resampling forever.
    fn achievable(self, spec: &PolynomialTaskSpec) -> bool {
        match self {
            CoefficientConstraint::None => true,
            CoefficientConstraint::MaxAbsAbove(b) => spec.max_abs_coefficient() > b,
            CoefficientConstraint::LeadingAbsAtLeast(b) => spec.max_abs_coefficient() >= b,
        }
    }
}

/// `Σ_i c_i x^i` with `coefficients` in ascending powers.
pub fn eval_polynomial(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn draw_coefficients(spec: &PolynomialTaskSpec, constraint: CoefficientConstraint, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let check = constraint.achievable(spec);
    loop {
        let c: Vec<f64> = (0..=spec.degree)
            .map(|_| rng.random_range(spec.coefficient_low..=spec.coefficient_high))
            .collect();
        if !check || constraint.accepts(&c) {
            return c;
        }
    }
}

fn draw_inputs(spec: &PolynomialTaskSpec, m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m)
        .map(|_| rng.random_range(spec.input_low..spec.input_high))
        .collect()
}

fn polynomial_dataset(
    coefficients: &[f64],
    xs: Vec<f64>,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FunctionDataset> {
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let y = eval_polynomial(coefficients, x);
            if noise_std > 0.0 {
                y + noise.sample(rng)
            } else {
                y
            }
        })
        .collect();
    FunctionDataset::new(
        Tensor::new(vec![xs.len(), 1], xs)?,
        Tensor::new(vec![ys.len(), 1], ys)?,
        HilbertSpace::EuclideanL2MC,
    )
}

/// Draws one task: coefficients, then example inputs, then query inputs.
pub fn sample_polynomial(spec: &PolynomialTaskSpec, constraint: CoefficientConstraint, seed: u64) -> Result<TaskSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients = draw_coefficients(spec, constraint, &mut rng);
    let ex = draw_inputs(spec, spec.m_example, &mut rng);
    let q = draw_inputs(spec, spec.m_query, &mut rng);
    Ok(TaskSample {
        example_set: polynomial_dataset(&coefficients, ex, spec.noise_std, &mut rng)?,
        query_set: polynomial_dataset(&coefficients, q, spec.noise_std, &mut rng)?,
        descriptor: TaskDescriptor::Polynomial { coefficients },
    })
}

/// A task from the training family itself.
pub fn sample_type1_polynomial(spec: &PolynomialTaskSpec, seed: u64) -> Result<TaskSample> {
    sample_polynomial(spec, CoefficientConstraint::None, seed)
}

/// A task from the wide-coefficient family, resampled until some coefficient
/// exceeds 3 in magnitude so it lies outside the training hull.
pub fn sample_type2_polynomial(spec: &PolynomialTaskSpec, seed: u64) -> Result<TaskSample> {
    sample_polynomial(spec, CoefficientConstraint::MaxAbsAbove(3.0), seed)
}

/// A cubic with leading coefficient of magnitude at least 0.5, so it leaves
/// the quadratic span.
pub fn sample_type3_cubic(spec: &PolynomialTaskSpec, seed: u64) -> Result<TaskSample> {
    sample_polynomial(spec, CoefficientConstraint::LeadingAbsAtLeast(0.5), seed)
}

/// `Σ w_i f_i` evaluated at fresh inputs drawn from `spec`.
pub fn sample_linear_combination_task(
    spec: &PolynomialTaskSpec,
    base_tasks: &[TaskSample],
    weights: &[f64],
    seed: u64,
) -> Result<TaskSample> {
    spec.validate()?;
    if base_tasks.len() != weights.len() || base_tasks.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} base tasks but {} weights",
            base_tasks.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite {
            context: "linear combination weights",
        });
    }
    let mut combined: Vec<f64> = Vec::new();
    for (task, &w) in base_tasks.iter().zip(weights) {
        let TaskDescriptor::Polynomial { coefficients } = &task.descriptor else {
            return Err(Error::MissingDescriptor("base task is not a polynomial".into()));
        };
        if combined.len() < coefficients.len() {
            combined.resize(coefficients.len(), 0.0);
        }
        for (acc, c) in combined.iter_mut().zip(coefficients) {
            *acc += w * c;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ex = draw_inputs(spec, spec.m_example, &mut rng);
    let q = draw_inputs(spec, spec.m_query, &mut rng);
    Ok(TaskSample {
        example_set: polynomial_dataset(&combined, ex, spec.noise_std, &mut rng)?,
        query_set: polynomial_dataset(&combined, q, spec.noise_std, &mut rng)?,
        descriptor: TaskDescriptor::Polynomial { coefficients: combined },
    })
}

/// Training-time sampler: each call draws new coefficients and `points`
/// i.i.d. inputs.
#[derive(Debug, Clone)]
pub struct PolynomialSampler {
    pub spec: PolynomialTaskSpec,
    pub constraint: CoefficientConstraint,
    pub points: usize,
}

impl PolynomialSampler {
    pub fn new(spec: PolynomialTaskSpec, points: usize) -> Self {
        Self {
            spec,
            constraint: CoefficientConstraint::None,
            points,
        }
    }
}

impl TaskSampler for PolynomialSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<FunctionDataset> {
        let c = draw_coefficients(&self.spec, self.constraint, rng);
        let xs = draw_inputs(&self.spec, self.points, rng);
        polynomial_dataset(&c, xs, self.spec.noise_std, rng)
    }
}
