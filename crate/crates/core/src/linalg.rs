//! Dense and structured linear algebra used by the samplers.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{CwlError, Result};

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draw sqrt of a chi-square variate with `k` degrees of freedom.
pub fn chi<R: Rng + ?Sized>(rng: &mut R, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    ChiSquared::new(k as f64)
        .expect("positive degrees of freedom")
        .sample(rng)
        .sqrt()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Haar-distributed orthogonal matrix stored as a product of Householder
/// reflections, `Q = H_0 H_1 ... H_{m-2} D`, acting on coordinates
/// `offset..n` (the leading `offset` coordinates are left fixed).
///
/// Sampling costs `m²/2` normals and each application `O(m²)` flops, with no
/// `m³` factorization.
#[derive(Debug, Clone)]
pub struct HouseholderOrthogonal {
    n: usize,
    offset: usize,
    // unit reflection vectors; vectors[k] acts on coordinates offset+k..n
    vectors: Vec<Vec<f64>>,
    signs: Vec<f64>,
}

impl HouseholderOrthogonal {
    pub fn sample<R: Rng + ?Sized>(n: usize, offset: usize, rng: &mut R) -> Self {
        assert!(offset <= n);
        let m = n - offset;
        let mut vectors = Vec::with_capacity(m.saturating_sub(1));
        let mut signs = Vec::with_capacity(m);
        for k in 0..m.saturating_sub(1) {
            let mut x: Vec<f64> = (0..m - k).map(|_| std_normal(rng)).collect();
            let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
            let nx = norm(&x);
            x[0] += s * nx;
            let nv = norm(&x);
            if nv > 0.0 {
                x.iter_mut().for_each(|v| *v /= nv);
            }
            vectors.push(x);
            signs.push(-s);
        }
        if m > 0 {
            signs.push(if std_normal(rng) >= 0.0 { 1.0 } else { -1.0 });
        }
        Self {
            n,
            offset,
            vectors,
            signs,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn reflect(&self, k: usize, x: &mut [f64]) {
        let v = &self.vectors[k];
        let seg = &mut x[self.offset + k..];
        let c = 2.0 * dot(v, seg);
        seg.iter_mut().zip(v).for_each(|(s, vi)| *s -= c * vi);
    }

    /// `x ← Q x`.
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (xi, s) in x[self.offset..].iter_mut().zip(&self.signs) {
            *xi *= s;
        }
        for k in (0..self.vectors.len()).rev() {
            self.reflect(k, x);
        }
    }

    /// `x ← Qᵀ x`.
    pub fn apply_transpose(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for k in 0..self.vectors.len() {
            self.reflect(k, x);
        }
        for (xi, s) in x[self.offset..].iter_mut().zip(&self.signs) {
            *xi *= s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.apply(&mut e);
            q.column_mut(j).copy_from_slice(&e);
        }
        q
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `out = T x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        if n == 1 {
            out[0] = self.diag[0] * x[0];
            return;
        }
        out[0] = self.diag[0] * x[0] + self.off[0] * x[1];
        for i in 1..n - 1 {
            out[i] = self.off[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.off[i] * x[i + 1];
        }
        out[n - 1] = self.off[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let denom = if q == 0.0 { f64::MIN_POSITIVE } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        while hi - lo > 4.0 * f64::EPSILON * scale {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalue(self.dim() - 1)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }
}

/// Cholesky factorization of a positive semidefinite matrix.
///
/// Pivots below `tol · max diag` are treated as exact zeros and the
/// corresponding column of the factor is set to zero, so rank-deficient
/// inputs factor cleanly. Returns the lower factor in row-major order.
pub fn semidefinite_cholesky(k: &DMatrix<f64>, tol: f64) -> Result<Vec<f64>> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(CwlError::InvalidSpec(
            "cholesky of a non-square matrix".into(),
        ));
    }
    let max_diag = (0..n).map(|i| k[(i, i)].abs()).fold(0.0, f64::max);
    let floor = tol * max_diag.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = &mut l[j * n..j * n + n];
        let s: f64 = row_j[..j].iter().map(|v| v * v).sum();
        let d = k[(j, j)] - s;
        if d < -1e-8 * max_diag {
            return Err(CwlError::Numerical(format!(
                "negative pivot {d:e} at column {j} in semidefinite Cholesky"
            )));
        }
        if d <= floor {
            row_j[j] = 0.0;
            continue;
        }
        let ljj = d.sqrt();
        row_j[j] = ljj;
        let row_j: Vec<f64> = row_j[..j].to_vec();
        for i in j + 1..n {
            let row_i = &mut l[i * n..i * n + n];
            let s = dot(&row_i[..j], &row_j);
            row_i[j] = (k[(i, j)] - s) / ljj;
        }
    }
    Ok(l)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    eig.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn householder_product_is_orthogonal() {
        let mut rng = rng_from_seed(3);
        for offset in [0, 1, 3] {
            let q = HouseholderOrthogonal::sample(9, offset, &mut rng).to_dense();
            let e = (q.transpose() * &q - DMatrix::identity(9, 9)).abs().max();
            assert!(e < 1e-12);
            for i in 0..offset {
                assert!((q[(i, i)] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn householder_transpose_inverts() {
        let mut rng = rng_from_seed(5);
        let q = HouseholderOrthogonal::sample(6, 1, &mut rng);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let mut y = x.clone();
        q.apply(&mut y);
        q.apply_transpose(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn sturm_bisection_matches_dense_eigensolver() {
        let t = SymTridiagonal::new(vec![1.0, -2.0, 0.5, 3.0, 0.0], vec![0.3, 1.1, -0.7, 0.2]);
        let mut dense: Vec<f64> = t
            .to_dense()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect();
        dense.sort_by(f64::total_cmp);
        for (k, ev) in dense.iter().enumerate() {
            assert!((t.eigenvalue(k) - ev).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn cholesky_of_rank_one_matrix() {
        let k = DMatrix::from_element(4, 4, 1.0);
        let l = semidefinite_cholesky(&k, 1e-12).unwrap();
        for i in 0..4 {
            assert_eq!(l[i * 4], 1.0);
            for j in 1..4 {
                assert_eq!(l[i * 4 + j], 0.0);
            }
        }
    }

    #[test]
    fn cholesky_reconstructs_spd_matrix() {
        let a = DMatrix::from_fn(5, 5, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let k = &a * a.transpose() + DMatrix::identity(5, 5) * 0.1;
        let l = DMatrix::from_row_slice(5, 5, &semidefinite_cholesky(&k, 1e-14).unwrap());
        assert!((&l * l.transpose() - &k).abs().max() < 1e-13);
    }
}
