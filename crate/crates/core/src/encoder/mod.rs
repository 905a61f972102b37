//! Coefficient solvers, prediction, training and model files.

mod coefficients;
mod config;
mod gram;
mod model;
mod persist;
mod train;

pub use coefficients::{
    coefficients_ip, coefficients_ls, combine, solve_coefficients, CoefficientMethod, Coefficients, Ridge,
};
pub use config::{EncoderConfig, LrSchedule};
pub use gram::{basis_gram, basis_projections, CholeskyFactor, GramMatrix};
pub use model::{residual_coefficients, ApproximationError, FunctionEncoderModel, TrainingRecord};
pub use persist::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use train::{split_point, train, train_with, training_step, StepLosses, TaskSampler};
