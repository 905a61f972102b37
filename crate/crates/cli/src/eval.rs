//! Transfer evaluation: fit coefficients on each task's example set, score
//! on its query set, summarize per transfer type.

use fenc_core::encoder::{CoefficientMethod, FunctionEncoderModel};
use fenc_core::tasks::{
    argmax_accuracy, sample_classification_task, sample_type1_polynomial, sample_type2_polynomial,
    sample_type3_cubic, ClassPool, TaskSample,
};

use crate::config::{Family, TaskConfig};
use crate::error::{CliError, CliResult};

pub const TYPES: [&str; 3] = ["type1", "type2", "type3"];

/// Medians over the evaluated tasks of one type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeMetrics {
    /// Squared H-norm error on the query set.
    pub abs_sq: f64,
    /// H-norm error divided by the target's H-norm.
    pub rel: f64,
    /// Argmax accuracy, classification only.
    pub accuracy: Option<f64>,
}

/// One entry per transfer type; `None` where the family has no such type
/// (classification has seen-class and held-out-class tasks only).
pub type EvalResult = [Option<TypeMetrics>; 3];

/// SplitMix64 finalizer, used to derive independent task seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th task of transfer type `kind` in evaluation round
/// `round`. Each type gets its own stream so, for example, type-1 and type-2
/// tasks never share the underlying uniform draws.
pub fn task_seed(seed: u64, round: u64, kind: usize, index: usize) -> u64 {
    mix(mix(mix(seed ^ 0x6a09_e667_f3bc_c908).wrapping_add(round)).wrapping_add(kind as u64) ^ (index as u64).rotate_left(32))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// The same basis with a different coefficient solver.
pub fn with_method(model: &FunctionEncoderModel, method: CoefficientMethod) -> CliResult<FunctionEncoderModel> {
    let mut config = model.config().clone();
    config.method = method;
    Ok(FunctionEncoderModel::from_parts(
        config,
        model.basis().clone(),
        model.average_function().cloned(),
    )?)
}

/// Samples one task of transfer type `kind` (0-based).
pub fn sample_task(task: &TaskConfig, pool: Option<&ClassPool>, kind: usize, seed: u64) -> CliResult<Option<TaskSample>> {
    Ok(match task.family {
        Family::Polynomial => Some(match kind {
            0 => sample_type1_polynomial(&task.polynomial, seed)?,
            1 => sample_type2_polynomial(&task.type2_spec(), seed)?,
            _ => sample_type3_cubic(&task.type3_spec(), seed)?,
        }),
        Family::Classification => {
            let pool = pool.ok_or_else(|| CliError::Runtime("classification pool missing".into()))?;
            match kind {
                0 => Some(sample_classification_task(pool, seed, false)?),
                1 => Some(sample_classification_task(pool, seed, true)?),
                _ => None,
            }
        }
    })
}

pub fn class_pool(task: &TaskConfig) -> CliResult<Option<ClassPool>> {
    Ok(match task.family {
        Family::Classification => Some(ClassPool::new(task.classification.clone())?),
        Family::Polynomial => None,
    })
}

/// Rejects models whose input/output shape or space does not fit the task.
pub fn check_compatible(model: &FunctionEncoderModel, task: &TaskConfig) -> CliResult<()> {
    let cfg = model.config();
    let (in_dim, out_dim, logit) = match task.family {
        Family::Polynomial => (1, 1, false),
        Family::Classification => (task.classification.feature_dim, 2, true),
    };
    if cfg.in_dim != in_dim || cfg.out_dim != out_dim || cfg.space.is_logit() != logit {
        return Err(CliError::Runtime(format!(
            "model ({} -> {}, {} space) does not match {} tasks ({in_dim} -> {out_dim})",
            cfg.in_dim,
            cfg.out_dim,
            cfg.space.name(),
            task.family.name()
        )));
    }
    Ok(())
}

pub fn evaluate(
    model: &FunctionEncoderModel,
    task: &TaskConfig,
    pool: Option<&ClassPool>,
    seed: u64,
    round: u64,
    n_tasks: usize,
) -> CliResult<EvalResult> {
    let mut out: EvalResult = [None; 3];
    for (kind, slot) in out.iter_mut().enumerate() {
        let mut abs = Vec::with_capacity(n_tasks);
        let mut rel = Vec::with_capacity(n_tasks);
        let mut acc = Vec::new();
        for i in 0..n_tasks {
            let Some(t) = sample_task(task, pool, kind, task_seed(seed, round, kind, i))? else {
                break;
            };
            let err = model.approximation_error(&t.example_set, &t.query_set)?;
            abs.push(err.squared);
            rel.push(err.relative);
            if task.family == Family::Classification {
                let c = model.fit(&t.example_set)?;
                let predicted = model.predict(t.query_set.inputs(), &c)?;
                acc.push(argmax_accuracy(&predicted, t.query_set.outputs())?);
            }
        }
        if !abs.is_empty() {
            *slot = Some(TypeMetrics {
                abs_sq: median(&abs),
                rel: median(&rel),
                accuracy: (!acc.is_empty()).then(|| median(&acc)),
            });
        }
    }
    Ok(out)
}
