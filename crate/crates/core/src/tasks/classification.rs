//! Synthetic few-shot classification.
//!
//! A fixed pool of classes, each an isotropic Gaussian blob around a center on
//! a sphere in feature space. A task asks "is this point from class c?":
//! positives are drawn from class c, negatives uniformly from the other
//! classes of the same split. Labels are two-class logit vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{TaskDescriptor, TaskSample};
use crate::encoder::TaskSampler;
use crate::error::{Error, Result};
use crate::hilbert::{label_to_logits, FunctionDataset, HilbertSpace};
use crate::numerics::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationTaskSpec {
    pub classes: usize,
    /// The last `heldout_classes` ids never appear in training tasks.
    pub heldout_classes: usize,
    pub feature_dim: usize,
    pub center_radius: f64,
    pub spread: f64,
    pub examples_per_polarity: usize,
    pub queries_per_polarity: usize,
    pub positive_logit: f64,
    pub negative_logit: f64,
    pub master_seed: u64,
}

impl Default for ClassificationTaskSpec {
    fn default() -> Self {
        Self {
            classes: 100,
            heldout_classes: 10,
            feature_dim: 16,
            center_radius: 3.0,
            spread: 0.3,
            examples_per_polarity: 100,
            queries_per_polarity: 100,
            positive_logit: 2.0,
            negative_logit: -2.0,
            master_seed: 2024,
        }
    }
}

impl ClassificationTaskSpec {
    pub fn validate(&self) -> Result<()> {
        let train = self.classes.saturating_sub(self.heldout_classes);
        if train < 2 || self.heldout_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 training and 2 heldout classes, got {train} and {}",
                self.heldout_classes
            )));
        }
        if self.feature_dim == 0 || self.examples_per_polarity == 0 || self.queries_per_polarity == 0 {
            return Err(Error::Config("feature_dim and example counts must be positive".into()));
        }
        if !(self.spread >= 0.0 && self.center_radius > 0.0) {
            return Err(Error::Config("spread must be >= 0 and center_radius > 0".into()));
        }
        if !(self.positive_logit > self.negative_logit) {
            return Err(Error::Config("positive_logit must exceed negative_logit".into()));
        }
        Ok(())
    }

    pub fn training_ids(&self) -> std::ops::Range<usize> {
        0..self.classes - self.heldout_classes
    }

    pub fn heldout_ids(&self) -> std::ops::Range<usize> {
        self.classes - self.heldout_classes..self.classes
    }
}

/// Class centers, drawn once from the master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPool {
    spec: ClassificationTaskSpec,
    centers: Vec<Vec<f64>>,
}

impl ClassPool {
    pub fn new(spec: ClassificationTaskSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
        let centers = (0..spec.classes)
            .map(|_| {
                let v: Vec<f64> = (0..spec.feature_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                v.into_iter().map(|x| x * spec.center_radius / n).collect()
            })
            .collect();
        Ok(Self { spec, centers })
    }

    pub fn spec(&self) -> &ClassificationTaskSpec {
        &self.spec
    }

    pub fn center(&self, class_id: usize) -> &[f64] {
        &self.centers[class_id]
    }

    fn draw_point(&self, class_id: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.centers[class_id]
            .iter()
            .map(|&c| {
                let z: f64 = StandardNormal.sample(rng);
                c + self.spec.spread * z
            })
            .collect()
    }

    /// Alternating positive/negative rows, so any prefix of even length is
    /// balanced.
    fn dataset(&self, class_id: usize, ids: &std::ops::Range<usize>, per_polarity: usize, rng: &mut ChaCha8Rng) -> Result<FunctionDataset> {
        let pos = label_to_logits(0, 2, self.spec.positive_logit, self.spec.negative_logit)?;
        let neg = label_to_logits(1, 2, self.spec.positive_logit, self.spec.negative_logit)?;
        let mut xs = Vec::with_capacity(2 * per_polarity * self.spec.feature_dim);
        let mut ys = Vec::with_capacity(4 * per_polarity);
        for _ in 0..per_polarity {
            xs.extend(self.draw_point(class_id, rng));
            ys.extend_from_slice(pos.logits());
            // uniform over the other classes of the split
            let mut other = rng.random_range(ids.start..ids.end - 1);
            if other >= class_id {
                other += 1;
            }
            xs.extend(self.draw_point(other, rng));
            ys.extend_from_slice(neg.logits());
        }
        FunctionDataset::new(
            Tensor::new(vec![2 * per_polarity, self.spec.feature_dim], xs)?,
            Tensor::new(vec![2 * per_polarity, 2], ys)?,
            HilbertSpace::logit(2)?,
        )
    }

    fn split_ids(&self, heldout: bool) -> std::ops::Range<usize> {
        if heldout {
            self.spec.heldout_ids()
        } else {
            self.spec.training_ids()
        }
    }

    fn draw_task(&self, heldout: bool, rng: &mut ChaCha8Rng) -> Result<(usize, FunctionDataset, FunctionDataset)> {
        let ids = self.split_ids(heldout);
        let class_id = rng.random_range(ids.clone());
        let ex = self.dataset(class_id, &ids, self.spec.examples_per_polarity, rng)?;
        let q = self.dataset(class_id, &ids, self.spec.queries_per_polarity, rng)?;
        Ok((class_id, ex, q))
    }
}

pub fn sample_classification_task(pool: &ClassPool, seed: u64, heldout: bool) -> Result<TaskSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (class_id, example_set, query_set) = pool.draw_task(heldout, &mut rng)?;
    Ok(TaskSample {
        example_set,
        query_set,
        descriptor: TaskDescriptor::Class { class_id },
    })
}

/// Training sampler over the non-heldout classes. Each dataset is the example
/// set followed by the query set, so an example fraction of one half splits
/// it exactly between them.
#[derive(Debug, Clone)]
pub struct ClassificationSampler {
    pub pool: ClassPool,
}

impl TaskSampler for ClassificationSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<FunctionDataset> {
        let (_, ex, q) = self.pool.draw_task(false, rng)?;
        FunctionDataset::new(
            Tensor::vstack(&[ex.inputs(), q.inputs()])?,
            Tensor::vstack(&[ex.outputs(), q.outputs()])?,
            ex.space(),
        )
    }
}

/// Fraction of rows whose predicted class (argmax of logits) matches the label.
pub fn argmax_accuracy(predicted: &Tensor, labels: &Tensor) -> Result<f64> {
    if predicted.shape() != labels.shape() || predicted.rows() == 0 {
        return Err(crate::error::shape_err("argmax_accuracy", labels.shape(), predicted.shape()));
    }
    let argmax = |row: &[f64]| {
        row.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let correct = (0..labels.rows())
        .filter(|&i| argmax(predicted.row(i)) == argmax(labels.row(i)))
        .count();
    Ok(correct as f64 / labels.rows() as f64)
}
