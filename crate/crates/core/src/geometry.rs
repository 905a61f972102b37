//! Transfer geometry: where does a target function sit relative to a set of
//! source functions?
//!
//! - Type 1: inside the convex hull of the sources (interpolation).
//! - Type 2: outside the hull but inside the linear span.
//! - Type 3: outside the span.
//!
//! Functions are compared through their values on one shared sample set, so
//! membership is decided with relative-residual tolerances.

use crate::encoder::GramMatrix;
use crate::error::{shape_err, Error, Result};
use crate::hilbert::{mc_inner_product, norm, FunctionDataset, HilbertSpace};
use crate::numerics::Tensor;

pub const DEFAULT_HULL_TOL: f64 = 1e-3;
pub const DEFAULT_SPAN_TOL: f64 = 1e-3;
const SPAN_FALLBACK_RIDGE: f64 = 1e-10;
const HULL_MAX_ITERATIONS: usize = 10_000;
const HULL_STEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpanReport {
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullReport {
    /// Nonnegative weights summing to one.
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferType {
    Type1,
    Type2,
    Type3,
}

impl TransferType {
    pub fn name(self) -> &'static str {
        match self {
            TransferType::Type1 => "type1",
            TransferType::Type2 => "type2",
            TransferType::Type3 => "type3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hull: f64,
    pub span: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hull: DEFAULT_HULL_TOL,
            span: DEFAULT_SPAN_TOL,
        }
    }
}

/// Full outcome of a classification.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub transfer_type: TransferType,
    pub tolerances: Tolerances,
    pub hull: HullReport,
    pub span: SpanReport,
}

/// Pairwise inner products of the sources and their products with the target.
struct Problem {
    gram: GramMatrix,
    rhs: Vec<f64>,
    target_sq: f64,
    space: HilbertSpace,
}

fn setup(target: &FunctionDataset, sources: &[FunctionDataset]) -> Result<Problem> {
    if sources.is_empty() {
        return Err(Error::Empty("transfer sources"));
    }
    for (i, s) in sources.iter().enumerate() {
        if s.inputs() != target.inputs() {
            return Err(Error::InvalidArgument(format!(
                "source {i} is not sampled on the target's inputs"
            )));
        }
        if s.outputs().shape() != target.outputs().shape() {
            return Err(shape_err("transfer source outputs", target.outputs().shape(), s.outputs().shape()));
        }
    }
    let space = target.space();
    let n = sources.len();
    let mut g = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        rhs[i] = mc_inner_product(target.outputs(), sources[i].outputs(), space)?;
        for j in i..n {
            let v = mc_inner_product(sources[i].outputs(), sources[j].outputs(), space)?;
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    Ok(Problem {
        gram: GramMatrix::from_entries(n, g)?,
        rhs,
        target_sq: mc_inner_product(target.outputs(), target.outputs(), space)?,
        space,
    })
}

/// Norm of `target - Σ w_i source_i` on the shared samples, and that norm
/// relative to `‖target‖`.
fn residual(target: &FunctionDataset, sources: &[FunctionDataset], weights: &[f64], space: HilbertSpace) -> Result<(f64, f64)> {
    let mut r = target.outputs().data().to_vec();
    for (s, &w) in sources.iter().zip(weights) {
        for (ri, si) in r.iter_mut().zip(s.outputs().data()) {
            *ri -= w * si;
        }
    }
    let r = Tensor::new(target.outputs().shape().to_vec(), r)?;
    let rn = norm(&r, space)?;
    let tn = norm(target.outputs(), space)?;
    let rel = if tn > 0.0 { rn / tn } else if rn > 0.0 { f64::INFINITY } else { 0.0 };
    Ok((rn, rel))
}

/// Least-squares projection of the target onto the span of the sources.
pub fn span_projection(target: &FunctionDataset, sources: &[FunctionDataset]) -> Result<SpanReport> {
    let p = setup(target, sources)?;
    let scale = p.gram.mean_diagonal().abs().max(f64::MIN_POSITIVE);
    let weights = match p.gram.cholesky(0.0) {
        Ok(f) => f.solve(&p.rhs),
        Err(_) => p.gram.cholesky(SPAN_FALLBACK_RIDGE * scale)?.solve(&p.rhs),
    };
    let (residual_norm, relative_residual) = residual(target, sources, &weights, p.space)?;
    Ok(SpanReport {
        weights,
        residual_norm,
        relative_residual,
    })
}

/// Euclidean projection of `v` onto the probability simplex (sort-based).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn largest_eigenvalue(g: &GramMatrix) -> f64 {
    let n = g.size();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g.get(i, j) * v[j]).sum()).collect();
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw;
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= 1e-12 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// Closest point of the convex hull of the sources to the target, found by
/// accelerated projected gradient with adaptive restart.
pub fn hull_projection(target: &FunctionDataset, sources: &[FunctionDataset]) -> Result<HullReport> {
    let p = setup(target, sources)?;
    let n = sources.len();
    let objective = |a: &[f64]| -> f64 {
        let mut q = p.target_sq;
        for i in 0..n {
            q -= 2.0 * a[i] * p.rhs[i];
            for j in 0..n {
                q += a[i] * p.gram.get(i, j) * a[j];
            }
        }
        q
    };
    let gradient = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 2.0 * ((0..n).map(|j| p.gram.get(i, j) * a[j]).sum::<f64>() - p.rhs[i]))
            .collect()
    };

    let lipschitz = 2.0 * largest_eigenvalue(&p.gram) * 1.1;
    let mut alpha = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = n == 1 || lipschitz == 0.0;
    if !converged {
        let step = 1.0 / lipschitz;
        let mut y = alpha.clone();
        let mut t = 1.0_f64;
        let mut prev_obj = objective(&alpha);
        while iterations < HULL_MAX_ITERATIONS {
            iterations += 1;
            let g = gradient(&y);
            let next = project_to_simplex(&y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect::<Vec<_>>());
            let change = next.iter().zip(&alpha).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let obj = objective(&next);
            if obj > prev_obj && y != alpha {
                // restart momentum when the objective goes up; the plain
                // projected step taken next is monotone up to rounding
                t = 1.0;
                y = alpha.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = next.iter().zip(&alpha).map(|(a, b)| a + beta * (a - b)).collect();
            alpha = next;
            t = t_next;
            prev_obj = obj;
            if change < HULL_STEP_TOL {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            objective: objective(&alpha),
            last_iterate: alpha,
        });
    }
    let (residual_norm, relative_residual) = residual(target, sources, &alpha, p.space)?;
    Ok(HullReport {
        weights: alpha,
        residual_norm,
        relative_residual,
        iterations,
    })
}

/// Type 1 if the hull residual is within `tol.hull`, else Type 2 if the span
/// residual is within `tol.span`, else Type 3. Both are relative residuals.
pub fn classify(hull: &HullReport, span: &SpanReport, tol: Tolerances) -> TransferType {
    if hull.relative_residual <= tol.hull {
        TransferType::Type1
    } else if span.relative_residual <= tol.span {
        TransferType::Type2
    } else {
        TransferType::Type3
    }
}

pub fn classify_transfer(target: &FunctionDataset, sources: &[FunctionDataset], tol: Tolerances) -> Result<TransferReport> {
    if !(tol.hull > 0.0 && tol.span > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let span = span_projection(target, sources)?;
    let hull = hull_projection(target, sources)?;
    Ok(TransferReport {
        transfer_type: classify(&hull, &span, tol),
        tolerances: tol,
        hull,
        span,
    })
}
