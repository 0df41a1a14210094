//! First sign change of `v₁` under a single fixed matrix.
//!
//! Before the first switch only the matrix of the starting cone acts, so the
//! persistence of the two-cone system reduces to these single-matrix
//! samplers. Each one works in a representation with the same joint law as
//! the dense matrix and Gaussian start, at linear cost per step where the
//! ensemble allows it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg::{chi, dot, norm, std_normal, SymTridiagonal};

const RENORM_EVERY: u64 = 32;

fn sign_of<R: Rng + ?Sized>(v: f64, rng: &mut R) -> bool {
    if v == 0.0 {
        rng.random()
    } else {
        v > 0.0
    }
}

fn rescale(x: &mut [f64]) {
    let s = norm(x);
    if s > 0.0 && s.is_finite() {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

/// Tridiagonal form of an orthogonally invariant symmetric matrix whose
/// similarity fixes `e₁`. With `p > 1` the extra probes are random
/// orthonormal vectors orthogonal to `e₁`, and the exit is the first change
/// in any of the `p` signs.
pub fn first_exit_tridiagonal<R: Rng + ?Sized>(
    t: &SymTridiagonal,
    p: usize,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let n = t.dim();
    assert!(p >= 1 && p <= n, "probe count {p} out of range for N = {n}");
    let mut x: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
    let mut probes: Vec<Vec<f64>> = Vec::with_capacity(p - 1);
    for _ in 1..p {
        let mut u: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 0.0 } else { std_normal(rng) })
            .collect();
        for q in &probes {
            let d = dot(q, &u);
            u.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        rescale(&mut u);
        probes.push(u);
    }
    let read = |x: &[f64], l: usize| if l == 0 { x[0] } else { dot(&probes[l - 1], x) };
    let signs: Vec<bool> = (0..p).map(|l| sign_of(read(&x, l), rng)).collect();
    let mut y = vec![0.0; n];
    for step in 1..=horizon {
        t.mul_vec(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        if step % RENORM_EVERY == 0 {
            rescale(&mut x);
        }
        for (l, s) in signs.iter().enumerate() {
            if sign_of(read(&x, l), rng) != *s {
                return Some(step);
            }
        }
    }
    None
}

/// Orthogonally invariant matrix stored by its eigenvalues: in the
/// eigenbasis `v_l(t) = Σ_a u_{l,a} ν_a^t y_a` with `u_l` the images of
/// `e_l` (random orthonormal) and `y` Gaussian.
pub fn first_exit_diagonal<R: Rng + ?Sized>(
    nu: &[f64],
    p: usize,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let n = nu.len();
    assert!(p >= 1 && p <= n, "probe count {p} out of range for N = {n}");
    let mut z: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
    let probes = random_orthonormal(n, p, rng);
    let signs: Vec<bool> = probes.iter().map(|u| sign_of(dot(u, &z), rng)).collect();
    for step in 1..=horizon {
        z.iter_mut().zip(nu).for_each(|(a, b)| *a *= b);
        if step % RENORM_EVERY == 0 {
            rescale(&mut z);
        }
        for (u, s) in probes.iter().zip(&signs) {
            if sign_of(dot(u, &z), rng) != *s {
                return Some(step);
            }
        }
    }
    None
}

/// Dense matrix in the original coordinates; probes `e₁ … e_p`.
pub fn first_exit_dense<R: Rng + ?Sized>(
    m: &DMatrix<f64>,
    p: usize,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let n = m.nrows();
    assert!(p >= 1 && p <= n, "probe count {p} out of range for N = {n}");
    let mut x = DVector::from_fn(n, |_, _| std_normal(rng));
    let mut y = DVector::zeros(n);
    let signs: Vec<bool> = (0..p).map(|l| sign_of(x[l], rng)).collect();
    for step in 1..=horizon {
        y.gemv(1.0, m, &x, 0.0);
        std::mem::swap(&mut x, &mut y);
        if step % RENORM_EVERY == 0 {
            let s = x.norm();
            if s > 0.0 && s.is_finite() {
                x /= s;
            }
        }
        for (l, s) in signs.iter().enumerate() {
            if sign_of(x[l], rng) != *s {
                return Some(step);
            }
        }
    }
    None
}

fn random_orthonormal<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(p);
    for _ in 0..p {
        let mut u: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
        for q in &out {
            let d = dot(q, &u);
            u.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        rescale(&mut u);
        out.push(u);
    }
    out
}

/// Real Ginibre matrix with entry standard deviation `sigma`. Its
/// transpose is orthogonally similar, by a rotation fixing `e₁`, to an
/// upper Hessenberg matrix with iid Gaussian entries on and above the
/// diagonal and `sigma·χ_{N−1−j}` below it, so `v₁(t) = ⟨Hᵗ e₁, w⟩` with
/// `w` Gaussian. Columns of `H` and entries of `w` are drawn only when the
/// support of `Hᵗ e₁` reaches them.
pub fn first_exit_ginibre<R: Rng + ?Sized>(
    n: usize,
    sigma: f64,
    horizon: u64,
    rng: &mut R,
) -> Option<u64> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<f64> = vec![std_normal(rng)];
    let mut h = vec![1.0];
    let s0 = sign_of(w[0], rng);
    for step in 1..=horizon {
        let support = h.len();
        while cols.len() < support {
            let j = cols.len();
            let mut c: Vec<f64> = (0..=j).map(|_| sigma * std_normal(rng)).collect();
            if j + 1 < n {
                c.push(sigma * chi(rng, n - 1 - j));
            }
            cols.push(c);
        }
        let new_support = (support + 1).min(n);
        let mut next = vec![0.0; new_support];
        for (j, hj) in h.iter().enumerate() {
            for (i, hij) in cols[j].iter().enumerate() {
                next[i] += hij * hj;
            }
        }
        while w.len() < new_support {
            w.push(std_normal(rng));
        }
        h = next;
        if step % RENORM_EVERY == 0 {
            rescale(&mut h);
        }
        let x: f64 = h.iter().zip(&w).map(|(a, b)| a * b).sum();
        if sign_of(x, rng) != s0 {
            return Some(step);
        }
    }
    None
}
