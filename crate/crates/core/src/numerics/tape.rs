//! Tensor-level reverse-mode automatic differentiation.
//!
//! A [`Tape`] is an append-only list of nodes. Every node stores the value it
//! produced and the primitive that produced it; parents always precede their
//! children, so a single reverse sweep over the node list is a valid
//! topological order for the backward pass.

use std::collections::BTreeMap;

use super::tensor::{gemm, Tensor};
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(String),
    MatMul(NodeId, NodeId),
    /// `[n, q] + [q]` broadcast over rows.
    AddBias(NodeId, NodeId),
    Relu(NodeId),
    Tanh(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Square(NodeId),
    Sum(NodeId),
    SliceRows(NodeId, usize),
    ConcatCols(Vec<NodeId>),
    CenterRows(NodeId),
    /// `[m, k*d]` basis values weighted by fixed coefficients into `[m, d]`.
    CombineBasis { basis: NodeId, coeffs: Vec<f64> },
    /// Per-basis mean squared norm `[m, k*d] -> [k]`.
    BasisSqNorms { basis: NodeId, k: usize, centered: bool },
    /// `(1/m) Σ_i Σ_t a_it²` over a `[m, d]` input.
    MeanSqNorm(NodeId),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients of a scalar loss, keyed by parameter name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    by_name: BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.by_name.iter()
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, Tensor> {
        self.by_name
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Constant, value)
    }

    /// A named leaf whose gradient is reported by [`Tape::backward`].
    pub fn param(&mut self, name: impl Into<String>, value: Tensor) -> NodeId {
        self.push(Op::Param(name.into()), value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), v))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let x = self.value(a);
        let b = self.value(bias);
        let (_, q) = x.dims2("add_bias")?;
        if b.len() != q {
            return Err(shape_err("add_bias", q, b.shape()));
        }
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(q) {
            for (o, bv) in row.iter_mut().zip(b.data()) {
                *o += bv;
            }
        }
        Ok(self.push(Op::AddBias(a, bias), out))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(Op::Relu(a), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.value(a).scale(s);
        self.push(Op::Scale(a, s), v)
    }

    pub fn add_scalar(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.value(a).map(|x| x + s);
        self.push(Op::AddScalar(a), v)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x * x);
        self.push(Op::Square(a), v)
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(Op::Sum(a), v)
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let v = self.value(a).slice_rows(start, end)?;
        Ok(self.push(Op::SliceRows(a, start), v))
    }

    /// Horizontal concatenation of 2-D nodes with equal row counts.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = parts.first().ok_or(Error::Empty("concat_cols"))?;
        let rows = self.value(*first).rows();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.value(p).dims2("concat_cols")?;
            if r != rows {
                return Err(shape_err("concat_cols", rows, r));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; rows * total];
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let src = self.value(p).data();
            for i in 0..rows {
                out[i * total + offset..i * total + offset + w]
                    .copy_from_slice(&src[i * w..(i + 1) * w]);
            }
            offset += w;
        }
        let v = Tensor::from_parts(vec![rows, total], out);
        Ok(self.push(Op::ConcatCols(parts.to_vec()), v))
    }

    /// Subtracts each row's mean from that row.
    pub fn center_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let x = self.value(a);
        let (_, d) = x.dims2("center_rows")?;
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(d) {
            let mean = row.iter().sum::<f64>() / d as f64;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        Ok(self.push(Op::CenterRows(a), out))
    }

    /// `out[i, t] = Σ_j c_j · basis[i, j*d + t]` with `d = cols / k`.
    ///
    /// The coefficients are constants: no gradient flows into them.
    pub fn combine_basis(&mut self, basis: NodeId, coeffs: &[f64]) -> Result<NodeId> {
        let b = self.value(basis);
        let (m, kd) = b.dims2("combine_basis")?;
        let k = coeffs.len();
        if k == 0 || kd % k != 0 {
            return Err(shape_err("combine_basis", format!("multiple of k={k}"), kd));
        }
        let d = kd / k;
        let mut out = vec![0.0; m * d];
        for i in 0..m {
            let row = &b.data()[i * kd..(i + 1) * kd];
            let o = &mut out[i * d..(i + 1) * d];
            for (j, &c) in coeffs.iter().enumerate() {
                for t in 0..d {
                    o[t] += c * row[j * d + t];
                }
            }
        }
        let v = Tensor::from_parts(vec![m, d], out);
        Ok(self.push(
            Op::CombineBasis {
                basis,
                coeffs: coeffs.to_vec(),
            },
            v,
        ))
    }

    /// Squared norm of each of the `k` basis functions under the sample-mean
    /// inner product; `centered` selects the logit-space inner product.
    pub fn basis_sq_norms(&mut self, basis: NodeId, k: usize, centered: bool) -> Result<NodeId> {
        let b = self.value(basis);
        let (m, kd) = b.dims2("basis_sq_norms")?;
        if k == 0 || kd % k != 0 || m == 0 {
            return Err(shape_err("basis_sq_norms", format!("[m>0, k*d] with k={k}"), b.shape()));
        }
        let d = kd / k;
        let mut norms = vec![0.0; k];
        let mut centered_buf = vec![0.0; d];
        for row in b.data().chunks(kd) {
            for (j, g) in row.chunks(d).enumerate() {
                centered_into(g, centered, &mut centered_buf);
                norms[j] += centered_buf.iter().map(|v| v * v).sum::<f64>();
            }
        }
        norms.iter_mut().for_each(|v| *v /= m as f64);
        let v = Tensor::from_parts(vec![k], norms);
        Ok(self.push(Op::BasisSqNorms { basis, k, centered }, v))
    }

    pub fn mean_sq_norm(&mut self, a: NodeId) -> Result<NodeId> {
        let x = self.value(a);
        let m = x.rows();
        if m == 0 {
            return Err(Error::Empty("mean_sq_norm"));
        }
        let v = x.data().iter().map(|v| v * v).sum::<f64>() / m as f64;
        Ok(self.push(Op::MeanSqNorm(a), Tensor::scalar(v)))
    }

    /// Reverse sweep from a scalar `loss` node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));
        let mut out = BTreeMap::new();

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(name) => {
                    match out.get_mut(name) {
                        Some(acc) => Tensor::add_assign(acc, &g)?,
                        None => {
                            out.insert(name.clone(), g);
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = gemm(&g, false, self.value(*b), true)?;
                    let gb = gemm(self.value(*a), true, &g, false)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::AddBias(a, bias) => {
                    let q = self.value(*bias).len();
                    let mut gb = vec![0.0; q];
                    for row in g.data().chunks(q) {
                        for (acc, v) in gb.iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                    let gb = Tensor::from_parts(self.value(*bias).shape().to_vec(), gb);
                    accumulate(&mut grads, *bias, gb)?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Relu(a) => {
                    let ga = g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { 0.0 })?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Tanh(a) => {
                    let ga = g.zip_map(&node.value, |gv, y| gv * (1.0 - y * y))?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.scale(-1.0))?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |gv, y| gv * y)?;
                    let gb = g.zip_map(self.value(*a), |gv, x| gv * x)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.scale(*s))?,
                Op::AddScalar(a) => accumulate(&mut grads, *a, g)?,
                Op::Square(a) => {
                    let ga = g.zip_map(self.value(*a), |gv, x| 2.0 * gv * x)?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Sum(a) => {
                    let ga = Tensor::full(self.value(*a).shape(), g.data()[0]);
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::SliceRows(a, start) => {
                    let src = self.value(*a);
                    let w = src.row_len();
                    // add into the parent's gradient in place; per-task slices
                    // of a large batch would otherwise each allocate the whole
                    let slot = grads[a.0].get_or_insert_with(|| Tensor::zeros(src.shape()));
                    for (acc, v) in slot.data_mut()[start * w..start * w + g.len()].iter_mut().zip(g.data()) {
                        *acc += v;
                    }
                }
                Op::ConcatCols(parts) => {
                    let (rows, total) = g.dims2("concat_cols backward")?;
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).row_len();
                        let mut gp = Vec::with_capacity(rows * w);
                        for i in 0..rows {
                            gp.extend_from_slice(&g.data()[i * total + offset..i * total + offset + w]);
                        }
                        offset += w;
                        accumulate(&mut grads, p, Tensor::from_parts(vec![rows, w], gp))?;
                    }
                }
                Op::CenterRows(a) => {
                    // Centering is an orthogonal projection, so it is its own adjoint.
                    let (_, d) = g.dims2("center_rows backward")?;
                    let mut ga = g;
                    for row in ga.data_mut().chunks_mut(d) {
                        let mean = row.iter().sum::<f64>() / d as f64;
                        row.iter_mut().for_each(|v| *v -= mean);
                    }
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::CombineBasis { basis, coeffs } => {
                    let src = self.value(*basis);
                    let (m, kd) = src.dims2("combine_basis backward")?;
                    let d = kd / coeffs.len();
                    let mut gb = vec![0.0; m * kd];
                    for i in 0..m {
                        let gi = &g.data()[i * d..(i + 1) * d];
                        let row = &mut gb[i * kd..(i + 1) * kd];
                        for (j, &c) in coeffs.iter().enumerate() {
                            for t in 0..d {
                                row[j * d + t] = c * gi[t];
                            }
                        }
                    }
                    accumulate(&mut grads, *basis, Tensor::from_parts(vec![m, kd], gb))?;
                }
                Op::BasisSqNorms { basis, k, centered } => {
                    let src = self.value(*basis);
                    let (m, kd) = src.dims2("basis_sq_norms backward")?;
                    let d = kd / k;
                    let scale = 2.0 / m as f64;
                    let mut gb = vec![0.0; m * kd];
                    let mut buf = vec![0.0; d];
                    for (row, grow) in src.data().chunks(kd).zip(gb.chunks_mut(kd)) {
                        for j in 0..*k {
                            centered_into(&row[j * d..(j + 1) * d], *centered, &mut buf);
                            let up = g.data()[j] * scale;
                            for t in 0..d {
                                grow[j * d + t] = up * buf[t];
                            }
                        }
                    }
                    accumulate(&mut grads, *basis, Tensor::from_parts(vec![m, kd], gb))?;
                }
                Op::MeanSqNorm(a) => {
                    let x = self.value(*a);
                    let s = 2.0 * g.data()[0] / x.rows() as f64;
                    accumulate(&mut grads, *a, x.scale(s))?;
                }
            }
        }
        Ok(Gradients { by_name: out })
    }
}

fn centered_into(src: &[f64], centered: bool, dst: &mut [f64]) {
    let mean = if centered {
        src.iter().sum::<f64>() / src.len() as f64
    } else {
        0.0
    };
    for (d, s) in dst.iter_mut().zip(src) {
        *d = s - mean;
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) -> Result<()> {
    match &mut grads[id.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}
