use crate::error::{shape_err, Error, Result};
use crate::numerics::Tensor;

/// The inner product that governs coefficient solves and losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HilbertSpace {
    /// `(1/m) Σ_i f(x_i)ᵀ g(x_i)` over the sample set (volume taken as 1).
    #[default]
    EuclideanL2MC,
    /// Outputs are logit vectors over `classes` categories; pointwise inner
    /// product is the centered dot product of the logit space.
    LogitSpace { classes: usize },
}

impl HilbertSpace {
    pub fn logit(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "logit space needs at least 2 classes, got {classes}"
            )));
        }
        Ok(HilbertSpace::LogitSpace { classes })
    }

    pub fn is_logit(self) -> bool {
        matches!(self, HilbertSpace::LogitSpace { .. })
    }

    pub fn name(self) -> &'static str {
        match self {
            HilbertSpace::EuclideanL2MC => "euclidean",
            HilbertSpace::LogitSpace { .. } => "logit",
        }
    }

    /// Pointwise inner product of two output vectors.
    pub fn pointwise(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            HilbertSpace::EuclideanL2MC => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            HilbertSpace::LogitSpace { .. } => centered_dot(a, b),
        }
    }

    /// Validates that a sample tensor has `m >= 1` rows of the right width.
    pub(crate) fn check_values(self, values: &Tensor, context: &'static str) -> Result<(usize, usize)> {
        let m = values.rows();
        if values.ndim() < 2 || m == 0 {
            return Err(Error::Empty(context));
        }
        let d = values.row_len();
        if let HilbertSpace::LogitSpace { classes } = self {
            if d % classes != 0 {
                return Err(shape_err(context, format!("rows of {classes} logits"), values.shape()));
            }
        }
        Ok((m, d))
    }
}

pub(crate) fn centered_dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum()
}

/// Monte-Carlo inner product of two functions known through their values at
/// the same `m` samples (`[m, d]` tensors).
pub fn mc_inner_product(f_vals: &Tensor, g_vals: &Tensor, space: HilbertSpace) -> Result<f64> {
    if f_vals.shape() != g_vals.shape() {
        return Err(shape_err("mc_inner_product", f_vals.shape(), g_vals.shape()));
    }
    let (m, d) = space.check_values(f_vals, "mc_inner_product")?;
    let fd = f_vals.data();
    let gd = g_vals.data();
    let sum: f64 = (0..m)
        .map(|i| space.pointwise(&fd[i * d..(i + 1) * d], &gd[i * d..(i + 1) * d]))
        .sum();
    Ok(sum / m as f64)
}

/// Induced norm `sqrt(<f, f>)`.
pub fn norm(f_vals: &Tensor, space: HilbertSpace) -> Result<f64> {
    Ok(mc_inner_product(f_vals, f_vals, space)?.max(0.0).sqrt())
}
