//! Large-N Gaussian-process surrogate for the first component.
//!
//! In the N→∞ limit the rescaled first component `φ(t)` of `A^t v(0)` is a
//! centered Gaussian process with covariance `f(t+s)/√(f(2t)f(2s))`. Paths
//! are drawn as `L z` with `L` a Cholesky factor of that covariance, and
//! persistence is measured by streaming first sign changes over blocks of
//! paths, so no path matrix is ever held in memory beyond one block.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{CwlError, Result};
use crate::linalg::{min_eigenvalue, semidefinite_cholesky, std_normal};
use crate::persistence::{log_tau_grid, CurveMeta, PersistenceCurve, Source, SurvivalCounter};
use crate::rng::task_rng;
use crate::spectral::{LogMoment, MomentFunction, SpectralModel};

/// Largest horizon supported by the dense covariance route.
pub const MAX_HORIZON: usize = 4096;

const NEGATIVE_EIGEN_TOL: f64 = -1e-8;
const JITTER: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-13;
const PATH_BLOCK: usize = 256;

/// `(T+1)×(T+1)` matrix of the rescaled correlator, checked to be positive
/// semidefinite.
pub fn build_covariance(spec: &SpectralModel, horizon: usize) -> Result<DMatrix<f64>> {
    if horizon > MAX_HORIZON {
        return Err(CwlError::InvalidSpec(format!(
            "horizon {horizon} exceeds the dense-covariance cap {MAX_HORIZON}"
        )));
    }
    let mf = MomentFunction::new(spec.clone());
    let lm: Vec<LogMoment> = (0..=2 * horizon as u64)
        .into_par_iter()
        .map(|k| mf.log_moment(k))
        .collect::<Result<_>>()?;
    let n = horizon + 1;
    for t in 0..n {
        if lm[2 * t].sign <= 0.0 {
            return Err(CwlError::DegenerateProcess(format!(
                "variance f({}) vanishes",
                2 * t
            )));
        }
    }
    let mut k = DMatrix::zeros(n, n);
    for t in 0..n {
        k[(t, t)] = 1.0;
        for s in 0..t {
            let c = lm[t + s];
            let v = if c.sign == 0.0 {
                0.0
            } else {
                (c.sign * (c.ln_abs - 0.5 * lm[2 * t].ln_abs - 0.5 * lm[2 * s].ln_abs).exp())
                    .clamp(-1.0, 1.0)
            };
            k[(t, s)] = v;
            k[(s, t)] = v;
        }
    }
    if n > 1 {
        let min_ev = min_eigenvalue(&k);
        if min_ev < NEGATIVE_EIGEN_TOL {
            return Err(CwlError::NotPsd {
                min_eigenvalue: min_ev,
            });
        }
        if min_ev < 0.0 {
            for t in 0..n {
                k[(t, t)] += JITTER;
            }
        }
    }
    Ok(k)
}

/// Cholesky factor with its all-zero columns removed: `K = F Fᵀ` with `F`
/// of size `(T+1) × rank`. `first_row[j]` is the first time index whose row
/// uses column `j`, so rows `0..r` only need the columns with
/// `first_row < r`.
#[derive(Debug, Clone)]
pub struct GpFactor {
    pub factor: DMatrix<f64>,
    first_row: Vec<usize>,
}

impl GpFactor {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        let l = semidefinite_cholesky(cov, PIVOT_TOL)?;
        let keep: Vec<usize> = (0..n).filter(|&j| l[j * n + j] != 0.0).collect();
        if keep.is_empty() {
            return Err(CwlError::Numerical(
                "covariance factor has rank zero".into(),
            ));
        }
        let factor = DMatrix::from_fn(n, keep.len(), |i, c| l[i * n + keep[c]]);
        Ok(Self {
            factor,
            first_row: keep,
        })
    }

    pub fn horizon(&self) -> usize {
        self.factor.nrows() - 1
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    fn columns_for_rows(&self, rows: usize) -> usize {
        self.first_row.partition_point(|&j| j < rows)
    }

    /// Standard normals for one block of paths, one column per path.
    fn normals(&self, paths: usize, seed: u64, block: u64) -> DMatrix<f64> {
        let mut rng = task_rng(seed, block);
        DMatrix::from_fn(self.rank(), paths, |_, _| std_normal(&mut rng))
    }
}

/// A batch of sampled paths kept in memory.
#[derive(Debug, Clone)]
pub struct GpPathBatch {
    pub covariance: DMatrix<f64>,
    /// One row per path, columns are times `0..=T`.
    pub paths: DMatrix<f64>,
    pub seed: u64,
}

impl GpPathBatch {
    pub fn horizon(&self) -> usize {
        self.paths.ncols() - 1
    }
}

fn block_sizes(total: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let len = PATH_BLOCK.min(total - start);
        out.push((start, len));
        start += len;
    }
    out
}

/// Paths `L z` with iid standard normal `z`; bit-reproducible per seed.
pub fn sample_gp_paths(cov: &DMatrix<f64>, n_paths: usize, seed: u64) -> Result<GpPathBatch> {
    let f = GpFactor::new(cov)?;
    let blocks: Vec<DMatrix<f64>> = block_sizes(n_paths)
        .into_par_iter()
        .enumerate()
        .map(|(b, (_, len))| &f.factor * f.normals(len, seed, b as u64))
        .collect();
    let n = cov.nrows();
    let mut paths = DMatrix::zeros(n_paths, n);
    for ((start, len), x) in block_sizes(n_paths).into_iter().zip(blocks) {
        for p in 0..len {
            for t in 0..n {
                paths[(start + p, t)] = x[(t, p)];
            }
        }
    }
    Ok(GpPathBatch {
        covariance: cov.clone(),
        paths,
        seed,
    })
}

/// First times `t ≥ 1` at which the sign of `φ(t)` differs from that of
/// `φ(0)`, separately over even and odd `t`. `u32::MAX` means no change up
/// to the horizon.
#[derive(Debug, Clone, Default)]
pub struct ExitTimes {
    pub even: Vec<u32>,
    pub odd: Vec<u32>,
}

pub const SURVIVED: u32 = u32::MAX;

impl ExitTimes {
    pub fn full(&self) -> Vec<u32> {
        self.even
            .iter()
            .zip(&self.odd)
            .map(|(a, b)| *a.min(b))
            .collect()
    }
}

fn row_blocks(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut len = 16;
    while start < n {
        let l = len.min(n - start);
        out.push((start, start + l));
        start += l;
        len = (len * 2).min(128);
    }
    out
}

/// Exit times for one block of paths. Rows are generated in blocks and only
/// for paths whose tracked events are still unresolved.
fn block_exit_times(
    f: &GpFactor,
    paths: usize,
    seed: u64,
    block: u64,
    both_parities: bool,
) -> ExitTimes {
    let z = f.normals(paths, seed, block);
    let n = f.horizon() + 1;
    let mut even = vec![SURVIVED; paths];
    let mut odd = vec![SURVIVED; paths];
    let mut s0 = vec![true; paths];
    let mut alive: Vec<usize> = (0..paths).collect();
    for (r0, r1) in row_blocks(n) {
        if alive.is_empty() {
            break;
        }
        let kc = f.columns_for_rows(r1);
        let zs = DMatrix::from_fn(kc, alive.len(), |i, j| z[(i, alive[j])]);
        let x = f.factor.view((r0, 0), (r1 - r0, kc)) * zs;
        let mut next = Vec::with_capacity(alive.len());
        for (j, &p) in alive.iter().enumerate() {
            for t in r0..r1 {
                let v = x[(t - r0, j)];
                if t == 0 {
                    s0[p] = v >= 0.0;
                    continue;
                }
                if (v >= 0.0) != s0[p] {
                    let slot = if t % 2 == 0 {
                        &mut even[p]
                    } else {
                        &mut odd[p]
                    };
                    if *slot == SURVIVED {
                        *slot = t as u32;
                    }
                }
            }
            let done = if both_parities {
                even[p] != SURVIVED && odd[p] != SURVIVED
            } else {
                even[p] != SURVIVED || odd[p] != SURVIVED
            };
            if !done {
                next.push(p);
            }
        }
        alive = next;
    }
    ExitTimes { even, odd }
}

/// Exit times of `n_paths` paths; with `both_parities` each path is followed
/// until both its even-time and odd-time subsequences have changed sign.
pub fn gp_exit_times(f: &GpFactor, n_paths: usize, seed: u64, both_parities: bool) -> ExitTimes {
    let parts: Vec<ExitTimes> = block_sizes(n_paths)
        .into_par_iter()
        .enumerate()
        .map(|(b, (_, len))| block_exit_times(f, len, seed, b as u64, both_parities))
        .collect();
    let mut out = ExitTimes::default();
    for p in parts {
        out.even.extend(p.even);
        out.odd.extend(p.odd);
    }
    out
}

fn to_option(t: u32) -> Option<u64> {
    (t != SURVIVED).then_some(t as u64)
}

fn curve_from_exits(exits: &[u32], horizon: usize, description: String) -> PersistenceCurve {
    let mut c = SurvivalCounter::new(horizon as u64);
    for &e in exits {
        c.record(to_option(e));
    }
    c.curve(
        &log_tau_grid(horizon as u64, 20),
        CurveMeta {
            source: Source::Gp,
            description,
            dimension: None,
            n_samples: exits.len(),
        },
    )
}

fn factor_for(spec: &SpectralModel, horizon: usize) -> Result<GpFactor> {
    if horizon < 1 {
        return Err(CwlError::InvalidSpec("horizon must be >= 1".into()));
    }
    GpFactor::new(&build_covariance(spec, horizon)?)
}

/// `Q₀(τ)`: fraction of surrogate paths with `sign φ(t) = sign φ(0)` for all
/// `1 ≤ t ≤ τ`, on a log-spaced τ grid.
pub fn estimate_persistence_gp(
    spec: &SpectralModel,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PersistenceCurve> {
    let f = factor_for(spec, horizon)?;
    let exits = gp_exit_times(&f, n_paths, seed, false);
    Ok(curve_from_exits(
        &exits.full(),
        horizon,
        format!("gp {spec}"),
    ))
}

/// Persistence of `p` independent copies all keeping their initial signs.
/// Each joint sample consumes `p` consecutive paths.
pub fn joint_persistence(
    spec: &SpectralModel,
    p: usize,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PersistenceCurve> {
    if p == 0 {
        return Err(CwlError::InvalidSpec("component count must be >= 1".into()));
    }
    let f = factor_for(spec, horizon)?;
    let exits = gp_exit_times(&f, n_paths * p, seed, false).full();
    let joint: Vec<u32> = exits
        .chunks_exact(p)
        .map(|c| *c.iter().min().unwrap())
        .collect();
    Ok(curve_from_exits(
        &joint,
        horizon,
        format!("gp {spec} joint p={p}"),
    ))
}

/// Full, even-time and odd-time survival measured on the same paths. The
/// odd-time subsequence is compared to the sign of `φ(0)` like the full one.
#[derive(Debug, Clone)]
pub struct ParityPersistence {
    pub full: PersistenceCurve,
    pub even: PersistenceCurve,
    pub odd: PersistenceCurve,
}

impl ParityPersistence {
    /// Largest `|Q_full − Q_even·Q_odd|` in units of the combined standard
    /// error, over grid points with `τ ≥ tau_min`.
    pub fn max_product_deviation(&self, tau_min: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.full.len() {
            if self.full.tau[i] < tau_min {
                continue;
            }
            let (q, e) = (self.full.q0[i], self.full.stderr[i]);
            let (qe, ee) = (self.even.q0[i], self.even.stderr[i]);
            let (qo, eo) = (self.odd.q0[i], self.odd.stderr[i]);
            let se = (e * e + (qo * ee).powi(2) + (qe * eo).powi(2)).sqrt();
            if se > 0.0 {
                worst = worst.max((q - qe * qo).abs() / se);
            }
        }
        worst
    }
}

pub fn parity_persistence(
    spec: &SpectralModel,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ParityPersistence> {
    let f = factor_for(spec, horizon)?;
    let exits = gp_exit_times(&f, n_paths, seed, true);
    Ok(ParityPersistence {
        full: curve_from_exits(&exits.full(), horizon, format!("gp {spec}")),
        even: curve_from_exits(&exits.even, horizon, format!("gp {spec} even times")),
        odd: curve_from_exits(&exits.odd, horizon, format!("gp {spec} odd times")),
    })
}

/// Default exponent-fitting window `[T/30, T]`.
pub fn default_fit_window(horizon: usize) -> (f64, f64) {
    (horizon as f64 / 30.0, horizon as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_horizon() {
        let k = build_covariance(&SpectralModel::symmetric_beta(3.0).unwrap(), 0).unwrap();
        assert_eq!(k, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn checkerboard_pattern() {
        let k = build_covariance(&SpectralModel::semicircle(0.0, 2.0).unwrap(), 9).unwrap();
        for t in 0..10 {
            for s in 0..10 {
                if (t + s) % 2 == 1 {
                    assert_eq!(k[(t, s)], 0.0);
                }
            }
            assert!((k[(t, t)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_one_paths_are_constant() {
        let cov = DMatrix::from_element(4, 4, 1.0);
        let b = sample_gp_paths(&cov, 50, 3).unwrap();
        for p in 0..50 {
            for t in 1..4 {
                assert_eq!(b.paths[(p, t)], b.paths[(p, 0)]);
            }
        }
    }

    #[test]
    fn atomic_spectrum_never_changes_sign() {
        let c = estimate_persistence_gp(&SpectralModel::atomic(0.8).unwrap(), 50, 1000, 1).unwrap();
        assert!(c.q0.iter().all(|q| *q == 1.0));
    }

    #[test]
    fn joint_with_one_copy_matches_single() {
        let spec = SpectralModel::symmetric_beta(2.0).unwrap();
        let a = estimate_persistence_gp(&spec, 40, 2000, 9).unwrap();
        let b = joint_persistence(&spec, 1, 40, 2000, 9).unwrap();
        assert_eq!(a.q0, b.q0);
    }

    #[test]
    fn horizon_cap_is_enforced() {
        let spec = SpectralModel::symmetric_beta(2.0).unwrap();
        assert!(build_covariance(&spec, MAX_HORIZON + 1).is_err());
    }
}
