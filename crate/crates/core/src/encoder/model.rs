use super::coefficients::{combine, solve_coefficients, Coefficients};
use super::config::EncoderConfig;
use crate::error::{shape_err, Error, Result};
use crate::hilbert::{norm, FunctionDataset, HilbertSpace};
use crate::numerics::{BasisArchitecture, MlpParams, Tensor};

/// Seed offset for the average-function network, so it never shares an init
/// stream with the basis.
const AVERAGE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRecord {
    pub step: usize,
    pub loss: f64,
    pub reg_loss: f64,
    /// Mean-fit loss of the average function (zero without residuals).
    pub average_loss: f64,
    pub median_basis_norm: f64,
}

/// Error of one approximated function on a query set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproximationError {
    /// `‖f - f̂‖²_H`.
    pub squared: f64,
    /// `‖f - f̂‖_H / ‖f‖_H`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionEncoderModel {
    config: EncoderConfig,
    basis: BasisArchitecture,
    average: Option<MlpParams>,
    log: Vec<TrainingRecord>,
}

impl FunctionEncoderModel {
    /// Freshly initialised model for `config`.
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let basis = BasisArchitecture::new(
            config.mode,
            config.k,
            config.in_dim,
            &config.hidden,
            config.out_dim,
            config.activation,
            config.seed,
        )?;
        let average = if config.use_residuals {
            let mut sizes = vec![config.in_dim];
            sizes.extend_from_slice(&config.hidden);
            sizes.push(config.out_dim);
            Some(MlpParams::init(&sizes, config.activation, config.seed ^ AVERAGE_SEED_SALT)?)
        } else {
            None
        };
        Ok(Self {
            config,
            basis,
            average,
            log: Vec::new(),
        })
    }

    /// Assembles a model from parts; the average function must be present
    /// exactly when the config enables residuals.
    pub fn from_parts(config: EncoderConfig, basis: BasisArchitecture, average: Option<MlpParams>) -> Result<Self> {
        config.validate()?;
        if basis.k() != config.k || basis.out_dim() != config.out_dim || basis.in_dim() != config.in_dim {
            return Err(shape_err(
                "FunctionEncoderModel basis",
                (config.k, config.in_dim, config.out_dim),
                (basis.k(), basis.in_dim(), basis.out_dim()),
            ));
        }
        if average.is_some() != config.use_residuals {
            return Err(Error::InvalidArgument(
                "average function must be present iff use_residuals".into(),
            ));
        }
        Ok(Self {
            config,
            basis,
            average,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn basis(&self) -> &BasisArchitecture {
        &self.basis
    }

    pub fn average_function(&self) -> Option<&MlpParams> {
        self.average.as_ref()
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn space(&self) -> HilbertSpace {
        self.config.space
    }

    pub fn training_log(&self) -> &[TrainingRecord] {
        &self.log
    }

    pub fn param_count(&self) -> usize {
        self.basis.param_count() + self.average.as_ref().map_or(0, MlpParams::param_count)
    }

    pub(crate) fn push_record(&mut self, record: TrainingRecord) {
        self.log.push(record);
    }

    pub(crate) fn set_log(&mut self, log: Vec<TrainingRecord>) {
        self.log = log;
    }

    /// All trainable tensors, named `basis.*` and `average.*`.
    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = self.basis.named_params();
        if let Some(avg) = &self.average {
            out.extend(avg.named_params("average."));
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = self.basis.named_params_mut();
        if let Some(avg) = &mut self.average {
            out.extend(avg.named_params_mut("average."));
        }
        out
    }

    /// Basis values `[m, k, d]` at `x`.
    pub fn basis_values(&self, x: &Tensor) -> Result<Tensor> {
        self.basis.evaluate(x)
    }

    /// `f̄(x)` as `[m, d]`.
    pub fn average_values(&self, x: &Tensor) -> Result<Tensor> {
        self.average
            .as_ref()
            .ok_or(Error::MissingAverageFunction)?
            .forward(x)
    }

    /// `Σ_j c_j g_j(x)`, preceded by `f̄(x)` under the residuals method.
    /// Logit-space outputs stay logits.
    pub fn predict(&self, x: &Tensor, c: &Coefficients) -> Result<Tensor> {
        if c.len() != self.k() {
            return Err(shape_err("predict coefficients", self.k(), c.len()));
        }
        let combo = combine(&self.basis_values(x)?, c)?;
        match &self.average {
            Some(avg) => avg.forward(x)?.add(&combo),
            None => Ok(combo),
        }
    }

    /// Coefficients for `dataset` using the configured solver, fitting the
    /// residual `f - f̄` when the model has an average function.
    pub fn fit(&self, dataset: &FunctionDataset) -> Result<Coefficients> {
        if self.config.use_residuals {
            residual_coefficients(dataset, self)
        } else {
            self.solve(dataset.outputs(), &self.basis_values(dataset.inputs())?)
        }
    }

    fn solve(&self, targets: &Tensor, basis_vals: &Tensor) -> Result<Coefficients> {
        solve_coefficients(
            targets,
            basis_vals,
            self.space(),
            self.config.method,
            self.config.ridge_spec(),
        )
    }

    /// Fits coefficients on `examples` and measures the error on `queries`.
    pub fn approximation_error(&self, examples: &FunctionDataset, queries: &FunctionDataset) -> Result<ApproximationError> {
        let c = self.fit(examples)?;
        let predicted = self.predict(queries.inputs(), &c)?;
        let diff = queries.outputs().sub(&predicted)?;
        let err = norm(&diff, self.space())?;
        let target = norm(queries.outputs(), self.space())?;
        Ok(ApproximationError {
            squared: err * err,
            relative: if target > 0.0 { err / target } else { err },
        })
    }
}

/// Coefficients of `f - f̄` in the learned basis.
pub fn residual_coefficients(dataset: &FunctionDataset, model: &FunctionEncoderModel) -> Result<Coefficients> {
    let avg = model.average_values(dataset.inputs())?;
    let residual = dataset.outputs().sub(&avg)?;
    model.solve(&residual, &model.basis_values(dataset.inputs())?)
}
