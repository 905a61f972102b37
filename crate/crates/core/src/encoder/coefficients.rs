use super::gram::{basis_dims, basis_gram, basis_projections};
use crate::error::{shape_err, Error, Result};
use crate::hilbert::{FunctionDataset, HilbertSpace};
use crate::numerics::Tensor;

/// Coordinates of one function in a `k`-element basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "Coefficients::new",
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    /// Standard basis vector `e_index` of length `k`.
    pub fn unit(k: usize, index: usize) -> Self {
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Self(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientMethod {
    /// `c_j = <f, g_j>`; exact only for orthonormal bases.
    InnerProduct,
    /// `c = (G + λI)^{-1} v`: the least-squares projection onto the span.
    #[default]
    LeastSquares,
}

impl CoefficientMethod {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientMethod::InnerProduct => "ip",
            CoefficientMethod::LeastSquares => "ls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ip" => Ok(CoefficientMethod::InnerProduct),
            "ls" => Ok(CoefficientMethod::LeastSquares),
            other => Err(Error::Config(format!("unknown coefficient method '{other}'"))),
        }
    }
}

/// Ridge added to the Gram diagonal. When `relative`, the effective value is
/// `lambda` times the mean Gram diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ridge {
    pub lambda: f64,
    pub relative: bool,
}

impl Ridge {
    pub const NONE: Ridge = Ridge {
        lambda: 0.0,
        relative: false,
    };

    pub fn absolute(lambda: f64) -> Self {
        Self {
            lambda,
            relative: false,
        }
    }

    pub fn relative(lambda: f64) -> Self {
        Self {
            lambda,
            relative: true,
        }
    }
}

fn check_targets(outputs: &Tensor, basis_vals: &Tensor) -> Result<()> {
    let (m, _, d) = basis_dims(basis_vals)?;
    if outputs.rows() != m || outputs.row_len() != d {
        return Err(shape_err("coefficients", [m, d], outputs.shape()));
    }
    Ok(())
}

/// Coefficients for function values `outputs` (`[m, d]`) against basis values
/// (`[m, k, d]`) evaluated at the same inputs.
pub fn solve_coefficients(
    outputs: &Tensor,
    basis_vals: &Tensor,
    space: HilbertSpace,
    method: CoefficientMethod,
    ridge: Ridge,
) -> Result<Coefficients> {
    check_targets(outputs, basis_vals)?;
    let v = basis_projections(outputs, basis_vals, space)?;
    match method {
        CoefficientMethod::InnerProduct => Coefficients::new(v),
        CoefficientMethod::LeastSquares => {
            if !(ridge.lambda >= 0.0) {
                return Err(Error::InvalidArgument(format!("ridge {} must be >= 0", ridge.lambda)));
            }
            let gram = basis_gram(basis_vals, space)?;
            let lambda = if ridge.relative {
                ridge.lambda * gram.mean_diagonal()
            } else {
                ridge.lambda
            };
            Coefficients::new(gram.solve_ridged(&v, lambda)?)
        }
    }
}

/// Inner-product coefficients for a dataset.
pub fn coefficients_ip(dataset: &FunctionDataset, basis_vals: &Tensor) -> Result<Coefficients> {
    solve_coefficients(
        dataset.outputs(),
        basis_vals,
        dataset.space(),
        CoefficientMethod::InnerProduct,
        Ridge::NONE,
    )
}

/// Least-squares coefficients for a dataset with an absolute ridge `lambda`.
pub fn coefficients_ls(dataset: &FunctionDataset, basis_vals: &Tensor, lambda: f64) -> Result<Coefficients> {
    solve_coefficients(
        dataset.outputs(),
        basis_vals,
        dataset.space(),
        CoefficientMethod::LeastSquares,
        Ridge::absolute(lambda),
    )
}

/// `Σ_j c_j g_j` for basis values `[m, k, d]`, returned as `[m, d]`.
pub fn combine(basis_vals: &Tensor, coeffs: &Coefficients) -> Result<Tensor> {
    let (m, k, d) = basis_dims(basis_vals)?;
    if coeffs.len() != k {
        return Err(shape_err("combine", k, coeffs.len()));
    }
    let mut out = vec![0.0; m * d];
    for (o, row) in out.chunks_mut(d).zip(basis_vals.data().chunks(k * d)) {
        for (j, &c) in coeffs.values().iter().enumerate() {
            for t in 0..d {
                o[t] += c * row[j * d + t];
            }
        }
    }
    Tensor::new(vec![m, d], out)
}
