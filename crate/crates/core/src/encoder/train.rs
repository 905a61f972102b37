//! Gradient training of the basis (and, with residuals, the average function).
//!
//! Each step draws `n` task datasets and splits every dataset into an example
//! part, used to solve for coefficients, and a query part, used to score the
//! approximation. The coefficient solve is treated as a constant: gradients
//! reach the parameters only through the basis values in the query loss and
//! in the norm regulariser `Σ_i (‖g_i‖² - 1)²`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::coefficients::solve_coefficients;
use super::config::EncoderConfig;
use super::model::{FunctionEncoderModel, TrainingRecord};
use crate::error::{Error, Result};
use crate::hilbert::FunctionDataset;
use crate::numerics::{AdamConfig, AdamState, NodeId, Tape, Tensor};

const TASK_STREAM_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// Source of training tasks. Implementations must be deterministic given the
/// generator state.
pub trait TaskSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<FunctionDataset>;
}

impl<F> TaskSampler for F
where
    F: Fn(&mut ChaCha8Rng) -> Result<FunctionDataset>,
{
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<FunctionDataset> {
        self(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    /// Mean squared approximation error over the batch (query parts).
    pub loss: f64,
    /// Basis-norm regulariser.
    pub reg_loss: f64,
    /// Average-function mean-fit loss; zero without residuals.
    pub average_loss: f64,
    pub median_basis_norm: f64,
}

/// Index splitting `m` rows into example and query parts.
pub fn split_point(m: usize, example_fraction: f64) -> Result<usize> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "a training dataset needs at least 2 samples, got {m}"
        )));
    }
    let s = (m as f64 * example_fraction).round() as usize;
    Ok(s.clamp(1, m - 1))
}

/// One optimizer step on `L + L_reg` (plus the average-function loss under the
/// residuals method).
pub fn training_step(
    model: &mut FunctionEncoderModel,
    batch: &[FunctionDataset],
    optimizer: &mut AdamState,
) -> Result<StepLosses> {
    if batch.is_empty() {
        return Err(Error::Empty("training_step batch"));
    }
    let config = model.config().clone();
    let space = config.space;
    let k = config.k;
    let d = config.out_dim;

    let inputs: Vec<&Tensor> = batch.iter().map(FunctionDataset::inputs).collect();
    let stacked = Tensor::vstack(&inputs)?;

    let mut tape = Tape::new();
    let x = tape.constant(stacked);
    let basis_node = model.basis().record(&mut tape, x)?;
    let average_node = match model.average_function() {
        Some(avg) => Some(avg.record(&mut tape, x, "average.")?),
        None => None,
    };

    let mut task_losses: Vec<NodeId> = Vec::with_capacity(batch.len());
    let mut average_losses: Vec<NodeId> = Vec::new();
    let mut offset = 0;
    for task in batch {
        let m = task.len();
        let split = split_point(m, config.example_fraction)?;
        let (ex_start, q_start, end) = (offset, offset + split, offset + m);
        offset = end;

        let avg_vals = match average_node {
            Some(node) => Some(tape.value(node).slice_rows(ex_start, end)?),
            None => None,
        };
        let target = match &avg_vals {
            Some(a) => task.outputs().sub(a)?,
            None => task.outputs().clone(),
        };

        let ex_basis = tape
            .value(basis_node)
            .slice_rows(ex_start, q_start)?
            .reshape(vec![split, k, d])?;
        let coeffs = solve_coefficients(
            &target.slice_rows(0, split)?,
            &ex_basis,
            space,
            config.method,
            config.ridge_spec(),
        )?;

        let q_basis = tape.slice_rows(basis_node, q_start, end)?;
        let pred = tape.combine_basis(q_basis, coeffs.values())?;
        let q_target = tape.constant(target.slice_rows(split, m)?);
        let mut resid = tape.sub(q_target, pred)?;
        if space.is_logit() {
            resid = tape.center_rows(resid)?;
        }
        task_losses.push(tape.mean_sq_norm(resid)?);

        if let Some(node) = average_node {
            let avg = tape.slice_rows(node, ex_start, end)?;
            let y = tape.constant(task.outputs().clone());
            let mut diff = tape.sub(y, avg)?;
            if space.is_logit() {
                diff = tape.center_rows(diff)?;
            }
            average_losses.push(tape.mean_sq_norm(diff)?);
        }
    }

    let n = batch.len() as f64;
    let loss = sum_nodes(&mut tape, &task_losses)?;
    let loss = tape.scale(loss, 1.0 / n);

    let sq_norms = tape.basis_sq_norms(basis_node, k, space.is_logit())?;
    let shifted = tape.add_scalar(sq_norms, -1.0);
    let squared = tape.square(shifted);
    let reg = tape.sum(squared);

    let mut total = tape.add(loss, reg)?;
    let mut average_loss = 0.0;
    if !average_losses.is_empty() {
        let a = sum_nodes(&mut tape, &average_losses)?;
        let a = tape.scale(a, 1.0 / n);
        average_loss = tape.value(a).data()[0];
        total = tape.add(total, a)?;
    }

    let grads = tape.backward(total)?;
    let losses = StepLosses {
        loss: tape.value(loss).data()[0],
        reg_loss: tape.value(reg).data()[0],
        average_loss,
        median_basis_norm: median(tape.value(sq_norms).data().iter().map(|v| v.max(0.0).sqrt()).collect()),
    };
    if !(losses.loss.is_finite() && losses.reg_loss.is_finite() && average_loss.is_finite()) {
        return Err(Error::NonFinite {
            context: "training_step loss",
        });
    }
    optimizer.step(model.named_params_mut(), &grads)?;
    Ok(losses)
}

fn sum_nodes(tape: &mut Tape, nodes: &[NodeId]) -> Result<NodeId> {
    let (first, rest) = nodes.split_first().ok_or(Error::Empty("sum_nodes"))?;
    let mut acc = *first;
    for &n in rest {
        acc = tape.add(acc, n)?;
    }
    Ok(acc)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// Trains a fresh model for `config.steps` steps.
pub fn train(sampler: &impl TaskSampler, config: EncoderConfig) -> Result<FunctionEncoderModel> {
    train_with(sampler, config, |_, _| Ok(()))
}

/// Like [`train`], calling `observer` after every step with the new log record.
pub fn train_with(
    sampler: &impl TaskSampler,
    config: EncoderConfig,
    mut observer: impl FnMut(&TrainingRecord, &FunctionEncoderModel) -> Result<()>,
) -> Result<FunctionEncoderModel> {
    let mut model = FunctionEncoderModel::new(config.clone())?;
    let mut optimizer = AdamState::new(AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TASK_STREAM_SALT);
    for step in 0..config.steps {
        let batch = (0..config.tasks_per_step)
            .map(|_| sampler.sample(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        optimizer.set_learning_rate(config.lr_schedule.rate(config.learning_rate, step, config.steps));
        let losses = training_step(&mut model, &batch, &mut optimizer)?;
        let record = TrainingRecord {
            step: step + 1,
            loss: losses.loss,
            reg_loss: losses.reg_loss,
            average_loss: losses.average_loss,
            median_basis_norm: losses.median_basis_norm,
        };
        model.push_record(record);
        observer(&record, &model)?;
    }
    Ok(model)
}
