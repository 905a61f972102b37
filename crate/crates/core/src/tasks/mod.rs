//! Deterministic task generators and task file dumps.

mod classification;
mod dump;
mod polynomial;

pub use classification::{
    argmax_accuracy, sample_classification_task, ClassPool, ClassificationSampler, ClassificationTaskSpec,
};
pub use dump::{read_descriptor, read_task_csv, write_descriptor, write_task_csv};
pub use polynomial::{
    eval_polynomial, sample_linear_combination_task, sample_polynomial, sample_type1_polynomial,
    sample_type2_polynomial, sample_type3_cubic, CoefficientConstraint, PolynomialSampler, PolynomialTaskSpec,
};

use crate::hilbert::FunctionDataset;

/// Ground truth kept alongside generated data for oracle checks.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskDescriptor {
    /// Coefficients in ascending powers of `x`.
    Polynomial { coefficients: Vec<f64> },
    Class { class_id: usize },
}

/// Example set (for fitting coefficients) and query set (for scoring) of one
/// task, drawn from the same input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSample {
    pub example_set: FunctionDataset,
    pub query_set: FunctionDataset,
    pub descriptor: TaskDescriptor,
}
