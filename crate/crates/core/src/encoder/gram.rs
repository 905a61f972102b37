use crate::error::{shape_err, CholeskyDiagnostics, Error, Result};
use crate::hilbert::HilbertSpace;
use crate::numerics::Tensor;

/// Symmetric matrix of pairwise basis inner products, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn from_entries(k: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != k * k {
            return Err(shape_err("GramMatrix", k * k, entries.len()));
        }
        Ok(Self { k, entries })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn mean_diagonal(&self) -> f64 {
        (0..self.k).map(|i| self.get(i, i)).sum::<f64>() / self.k as f64
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in i + 1..self.k {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Lower-triangular `L` with `L Lᵀ = G + ridge·I`.
    pub fn cholesky(&self, ridge: f64) -> Result<CholeskyFactor> {
        let n = self.k;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let lj = &l[j * n..j * n + j];
            let diag = self.get(j, j) + ridge - dot(lj, lj);
            if !(diag > 0.0) || !diag.is_finite() {
                let diagonal: Vec<f64> = (0..n).map(|i| self.get(i, i)).collect();
                return Err(Error::Cholesky(CholeskyDiagnostics {
                    size: n,
                    ridge,
                    failed_pivot: j,
                    pivot_value: diag,
                    min_diagonal: diagonal.iter().cloned().fold(f64::INFINITY, f64::min),
                    max_diagonal: diagonal.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                }));
            }
            let d = diag.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let (head, tail) = l.split_at_mut(i * n);
                let s = self.get(i, j) - dot(&tail[..j], &head[j * n..j * n + j]);
                tail[j] = s / d;
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    /// Solves `(G + ridge·I) c = v`. If factorization fails, retries once with
    /// ten times the ridge (or a 1e-12 relative floor when `ridge` is zero).
    pub fn solve_ridged(&self, v: &[f64], ridge: f64) -> Result<Vec<f64>> {
        if v.len() != self.k {
            return Err(shape_err("GramMatrix::solve", self.k, v.len()));
        }
        let factor = match self.cholesky(ridge) {
            Ok(f) => f,
            Err(first) => {
                let retry = if ridge > 0.0 {
                    10.0 * ridge
                } else {
                    1e-12 * self.mean_diagonal().abs().max(f64::MIN_POSITIVE)
                };
                self.cholesky(retry).map_err(|_| first)?
            }
        };
        Ok(factor.solve(v))
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for t in 0..4 {
            acc[t] += x[t] * y[t];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = y[i] - dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in i + 1..n {
                s -= self.l[p * n + i] * y[p];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Splits `[m, k, d]` (or `[m, k*d]` with explicit `k`) basis values into
/// `(m, k, d)`.
pub(crate) fn basis_dims(basis_vals: &Tensor) -> Result<(usize, usize, usize)> {
    match basis_vals.shape() {
        [m, k, d] => Ok((*m, *k, *d)),
        other => Err(shape_err("basis values", "[m, k, d]", other)),
    }
}

/// `G_ij = <g_i, g_j>` under the space's Monte-Carlo inner product, as
/// `Σ_t A_tᵀ A_t / m` where `A_t` is the `[m, k]` slice of output component `t`.
pub fn basis_gram(basis_vals: &Tensor, space: HilbertSpace) -> Result<GramMatrix> {
    let (m, k, d) = basis_dims(basis_vals)?;
    if m == 0 {
        return Err(Error::Empty("basis_gram"));
    }
    let centered;
    let data = if space.is_logit() {
        let mut c = basis_vals.data().to_vec();
        for g in c.chunks_mut(d) {
            let mean = g.iter().sum::<f64>() / d as f64;
            g.iter_mut().for_each(|v| *v -= mean);
        }
        centered = c;
        &centered[..]
    } else {
        basis_vals.data()
    };
    let mut g = vec![0.0; k * k];
    let (rs, cs) = ((k * d) as isize, d as isize);
    for t in 0..d {
        // SAFETY: every index (r, i) with r < m, i < k maps to
        // r * k * d + i * d + t < m * k * d, inside `data`; `g` is k × k.
        unsafe {
            let a = data.as_ptr().add(t);
            matrixmultiply::dgemm(k, m, k, 1.0 / m as f64, a, cs, rs, a, rs, cs, 1.0, g.as_mut_ptr(), k as isize, 1);
        }
    }
    // exact symmetry regardless of summation order
    for i in 0..k {
        for j in i + 1..k {
            g[j * k + i] = g[i * k + j];
        }
    }
    GramMatrix::from_entries(k, g)
}

/// `v_j = <f, g_j>` for function values `[m, d]`.
pub fn basis_projections(f_vals: &Tensor, basis_vals: &Tensor, space: HilbertSpace) -> Result<Vec<f64>> {
    let (m, k, d) = basis_dims(basis_vals)?;
    if m == 0 {
        return Err(Error::Empty("basis_projections"));
    }
    if f_vals.rows() != m || f_vals.row_len() != d {
        return Err(shape_err("basis_projections", [m, d], f_vals.shape()));
    }
    let mut v = vec![0.0; k];
    for (frow, brow) in f_vals.data().chunks(d).zip(basis_vals.data().chunks(k * d)) {
        for (j, vj) in v.iter_mut().enumerate() {
            *vj += space.pointwise(frow, &brow[j * d..(j + 1) * d]);
        }
    }
    v.iter_mut().for_each(|x| *x /= m as f64);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_basis_gram_is_one() {
        let vals = Tensor::new(vec![5, 1, 1], vec![1.0; 5]).unwrap();
        let g = basis_gram(&vals, HilbertSpace::EuclideanL2MC).unwrap();
        assert_eq!(g.entries(), &[1.0]);
    }

    #[test]
    fn duplicated_basis_is_singular() {
        let xs = [-0.9, -0.2, 0.3, 0.8];
        let mut data = Vec::new();
        for x in xs {
            data.extend_from_slice(&[x, x]);
        }
        let vals = Tensor::new(vec![4, 2, 1], data).unwrap();
        let g = basis_gram(&vals, HilbertSpace::EuclideanL2MC).unwrap();
        let det = g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0);
        assert!(det.abs() < 1e-10);
        assert!(g.cholesky(1e-6).is_ok());
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let g = GramMatrix::from_entries(2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let c = g.solve_ridged(&[2.0, 1.0], 0.0).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15 && c[1].abs() < 1e-15);
    }

    #[test]
    fn cholesky_failure_carries_diagnostics() {
        let g = GramMatrix::from_entries(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        match g.solve_ridged(&[1.0, 1.0], 1e-3) {
            Err(Error::Cholesky(d)) => {
                assert_eq!(d.failed_pivot, 1);
                assert_eq!(d.ridge, 1e-3);
                assert_eq!(d.max_diagonal, 1.0);
            }
            other => panic!("expected cholesky error, got {other:?}"),
        }
    }

    #[test]
    fn logit_gram_ignores_constant_shifts() {
        let vals = Tensor::new(vec![2, 2, 2], vec![1.0, -1.0, 5.0, 5.0, 0.5, -0.5, 2.0, 3.0]).unwrap();
        let g = basis_gram(&vals, HilbertSpace::logit(2).unwrap()).unwrap();
        assert!((g.get(0, 0) - (2.0 + 0.5) / 2.0).abs() < 1e-15);
        assert!((g.get(0, 1) - (-0.5) / 2.0).abs() < 1e-15);
        assert_eq!(g.get(0, 1), g.get(1, 0));
    }
}
