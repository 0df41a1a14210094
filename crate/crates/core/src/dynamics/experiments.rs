//! Monte-Carlo experiments on ensembles of cone systems.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evolve::{gaussian_start, run, EvolveOptions};
use super::first_passage::{
    first_exit_dense, first_exit_diagonal, first_exit_ginibre, first_exit_tridiagonal,
};
use super::system::ConeSystem;
use crate::ensembles::{eigenvalues_with, goe_tridiagonal, EnsembleKind};
use crate::error::{CwlError, Result};
use crate::estimators::{fit_curve_truncated, sample_stdev, FitResult};
use crate::persistence::{log_tau_grid, CurveMeta, PersistenceCurve, Source, SurvivalCounter};
use crate::rng::{derive_seed, stream_seed, task_rng};

/// Grid density of the persistence curves produced here.
pub const POINTS_PER_DECADE: usize = 20;

/// First change of any of the signs of `v₁ … v_p` under one fresh matrix
/// of `kind`, started from a Gaussian vector.
pub fn first_exit<R: Rng + ?Sized>(
    kind: &EnsembleKind,
    n: usize,
    p: usize,
    horizon: u64,
    rng: &mut R,
) -> Result<Option<u64>> {
    if n < 2 || p == 0 || p > n {
        return Err(CwlError::InvalidSpec(format!(
            "need N >= 2 and 1 <= p <= N, got N = {n}, p = {p}"
        )));
    }
    Ok(match kind {
        EnsembleKind::GoeShiftedScaled { center, radius } => {
            first_exit_tridiagonal(&goe_tridiagonal(n, *center, *radius, rng), p, horizon, rng)
        }
        EnsembleKind::Elliptic { rho, radius } if *rho == 1.0 => {
            first_exit_tridiagonal(&goe_tridiagonal(n, 0.0, *radius, rng), p, horizon, rng)
        }
        EnsembleKind::Elliptic { rho, radius } if *rho == 0.0 && p == 1 => {
            first_exit_ginibre(n, radius / (2.0 * (n as f64).sqrt()), horizon, rng)
        }
        EnsembleKind::Elliptic { .. } => {
            first_exit_dense(&kind.sample(n, rng.random())?, p, horizon, rng)
        }
        EnsembleKind::InvariantFromDensity { spec, placement } => first_exit_diagonal(
            &eigenvalues_with(spec, n, *placement, rng)?,
            p,
            horizon,
            rng,
        ),
    })
}

fn survival_curve<F>(
    n_real: usize,
    horizon: u64,
    meta: CurveMeta,
    sample: F,
) -> Result<PersistenceCurve>
where
    F: Fn(u64) -> Result<Option<u64>> + Sync,
{
    if n_real == 0 || horizon == 0 {
        return Err(CwlError::InvalidSpec(
            "need at least one realization and a positive horizon".into(),
        ));
    }
    let counter = (0..n_real as u64)
        .into_par_iter()
        .try_fold(
            || SurvivalCounter::new(horizon),
            |mut c, i| {
                c.record(sample(i)?);
                Ok::<_, CwlError>(c)
            },
        )
        .try_reduce(
            || SurvivalCounter::new(horizon),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )?;
    Ok(counter.curve(&log_tau_grid(horizon, POINTS_PER_DECADE), meta))
}

/// `Q₀(τ)` of the two-cone system: a fresh pair and Gaussian start per
/// realization. Until the first switch only the starting cone's matrix
/// acts, and the start is in cone A or B with probability ½ each, so each
/// realization draws that one matrix.
pub fn estimate_persistence_matrix(
    ens_a: &EnsembleKind,
    ens_b: &EnsembleKind,
    n: usize,
    n_realizations: usize,
    horizon: u64,
    seed: u64,
) -> Result<PersistenceCurve> {
    ens_a.validate()?;
    ens_b.validate()?;
    let meta = CurveMeta {
        source: Source::MatrixDynamics,
        description: format!("A = {ens_a}, B = {ens_b}"),
        dimension: Some(n),
        n_samples: n_realizations,
    };
    survival_curve(n_realizations, horizon, meta, |i| {
        let mut rng = task_rng(seed, i);
        let kind = if rng.random::<bool>() { ens_a } else { ens_b };
        first_exit(kind, n, 1, horizon, &mut rng)
    })
}

/// Survival in the starting cone of a `2^p`-cone system whose matrices are
/// iid from `kind`.
pub fn estimate_persistence_multicone(
    kind: &EnsembleKind,
    p: usize,
    n: usize,
    n_realizations: usize,
    horizon: u64,
    seed: u64,
) -> Result<PersistenceCurve> {
    kind.validate()?;
    let meta = CurveMeta {
        source: Source::MatrixDynamics,
        description: format!("{} cones of {kind}", 1usize << p),
        dimension: Some(n),
        n_samples: n_realizations,
    };
    survival_curve(n_realizations, horizon, meta, |i| {
        let mut rng = task_rng(seed, i);
        first_exit(kind, n, p, horizon, &mut rng)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCollapse {
    pub dimensions: Vec<usize>,
    pub curves: Vec<PersistenceCurve>,
    pub mu: f64,
    /// Per dimension, `(u, Q₀·N^{2μ/3})` at the grid points with `Q₀ > 0`.
    pub rescaled: Vec<Vec<(f64, f64)>>,
    /// `Q₀(T)` at the smallest dimension.
    pub plateau: f64,
    /// The decade of `u` the spread is measured over.
    pub central_decade: (f64, f64),
    pub spread: f64,
}

/// Largest sample stdev across dimensions of `log₁₀(Q₀ N^{2μ/3})` at 21
/// log-spaced points of the central decade of the common `u` range.
pub fn collapse_spread(
    dimensions: &[usize],
    curves: &[PersistenceCurve],
    mu: f64,
) -> Result<((f64, f64), f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut logs = Vec::new();
    for (&n, c) in dimensions.iter().zip(curves) {
        let scale = (n as f64).powf(-2.0 / 3.0);
        let pts: Vec<(f64, f64)> = c
            .tau
            .iter()
            .zip(&c.q0)
            .filter(|(t, q)| **t > 0 && **q > 0.0)
            .map(|(&t, &q)| {
                (
                    (t as f64 * scale).log10(),
                    q.log10() + 2.0 * mu / 3.0 * (n as f64).log10(),
                )
            })
            .collect();
        let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
            return Err(CwlError::CollapseUndefined(format!(
                "curve for N = {n} has no positive values"
            )));
        };
        lo = lo.max(first.0);
        hi = hi.min(last.0);
        logs.push(pts);
    }
    if hi - lo < 1.0 {
        return Err(CwlError::CollapseUndefined(format!(
            "overlap of rescaled curves spans {:.2} decades, need 1",
            (hi - lo).max(0.0)
        )));
    }
    let mid = 0.5 * (lo + hi);
    let (a, b) = (mid - 0.5, mid + 0.5);
    let mut spread: f64 = 0.0;
    for k in 0..=20 {
        let u = a + (b - a) * k as f64 / 20.0;
        let vals: Vec<f64> = logs.iter().map(|pts| interpolate(pts, u)).collect();
        spread = spread.max(sample_stdev(&vals));
    }
    Ok(((10f64.powf(a), 10f64.powf(b)), spread))
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 < x);
    if i == 0 {
        return pts[0].1;
    }
    if i == pts.len() {
        return pts[i - 1].1;
    }
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Finite-size collapse `Q₀(τ, N) ≈ N^{−2μ/3} h(τ N^{−2/3})` for a pair of
/// independent matrices from the same ensemble.
pub fn scaling_collapse(
    dimensions: &[usize],
    family: &EnsembleKind,
    n_realizations: usize,
    horizon: u64,
    mu: f64,
    seed: u64,
) -> Result<ScalingCollapse> {
    if dimensions.len() < 3 {
        return Err(CwlError::InvalidSpec(format!(
            "collapse needs at least 3 dimensions, got {}",
            dimensions.len()
        )));
    }
    let min = *dimensions.iter().min().unwrap();
    let max = *dimensions.iter().max().unwrap();
    if max < 8 * min {
        return Err(CwlError::InvalidSpec(format!(
            "dimensions must span a factor 8, got {min}..{max}"
        )));
    }
    if !(mu > 0.0) {
        return Err(CwlError::Domain(format!(
            "collapse exponent must be positive, got {mu}"
        )));
    }
    let curves = dimensions
        .iter()
        .map(|&n| {
            estimate_persistence_matrix(
                family,
                family,
                n,
                n_realizations,
                horizon,
                stream_seed(seed, &format!("N={n}")),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (central_decade, spread) = collapse_spread(dimensions, &curves, mu)?;
    let rescaled = dimensions
        .iter()
        .zip(&curves)
        .map(|(&n, c)| {
            let nf = n as f64;
            c.tau
                .iter()
                .zip(&c.q0)
                .filter(|(t, q)| **t > 0 && **q > 0.0)
                .map(|(&t, &q)| (t as f64 * nf.powf(-2.0 / 3.0), q * nf.powf(2.0 * mu / 3.0)))
                .collect()
        })
        .collect();
    let smallest = dimensions.iter().position(|&n| n == min).unwrap();
    Ok(ScalingCollapse {
        dimensions: dimensions.to_vec(),
        plateau: *curves[smallest].q0.last().unwrap(),
        curves,
        mu,
        rescaled,
        central_decade,
        spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovMeta {
    pub dimension: usize,
    pub horizon: usize,
    pub ensemble_a: String,
    pub ensemble_b: String,
    pub seed: u64,
    /// `ln ν₊` of A and B.
    pub rates: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSamples {
    pub values: Vec<f64>,
    /// `(λ − r₁)/(r₂ − r₁)`; empty when `r₁ = r₂` or an edge is not positive.
    pub normalized: Vec<f64>,
    pub trapped: Vec<bool>,
    pub cycling: Vec<bool>,
    /// Growth rate over the trapping window.
    pub trailing_rates: Vec<f64>,
    pub final_cones: Vec<u32>,
    pub switches: Vec<usize>,
    /// Top eigenvalue of the final cone's matrix, for trapped runs.
    pub trap_top_eigenvalues: Vec<Option<f64>>,
    pub meta: LyapunovMeta,
}

impl LyapunovSamples {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Normalized exponents of runs neither trapped nor cycling.
    pub fn untagged_normalized(&self) -> Vec<f64> {
        self.normalized
            .iter()
            .zip(self.trapped.iter().zip(&self.cycling))
            .filter(|(_, (t, c))| !**t && !**c)
            .map(|(v, _)| *v)
            .collect()
    }
}

/// `λ = L(T)/T` for `n_realizations` independent pairs and Gaussian starts.
pub fn ensemble_lyapunov(
    ens_a: &EnsembleKind,
    ens_b: &EnsembleKind,
    n: usize,
    n_realizations: usize,
    horizon: usize,
    seed: u64,
) -> Result<LyapunovSamples> {
    let runs = (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let system = ConeSystem::sample_pair(ens_a, ens_b, n, &mut rng)?;
            let x0 = gaussian_start(&system, &mut rng);
            let mut opts = EvolveOptions::new(horizon);
            opts.tie_seed = derive_seed(seed, i);
            let tr = run(&system, &x0, &opts)?;
            let top = if tr.trapped {
                system.operator(tr.final_cone as usize).max_eigenvalue()
            } else {
                None
            };
            Ok((tr, top))
        })
        .collect::<Result<Vec<_>>>()?;
    let r1 = ens_a.upper_edge().ln();
    let r2 = ens_b.upper_edge().ln();
    let values: Vec<f64> = runs.iter().map(|(t, _)| t.lambda()).collect();
    let normalized = if r1 != r2 && r1.is_finite() && r2.is_finite() {
        values.iter().map(|l| (l - r1) / (r2 - r1)).collect()
    } else {
        Vec::new()
    };
    Ok(LyapunovSamples {
        normalized,
        trapped: runs.iter().map(|(t, _)| t.trapped).collect(),
        cycling: runs.iter().map(|(t, _)| t.cycle.is_some()).collect(),
        trailing_rates: runs.iter().map(|(t, _)| t.trailing_rate).collect(),
        final_cones: runs.iter().map(|(t, _)| t.final_cone).collect(),
        switches: runs.iter().map(|(t, _)| t.switches).collect(),
        trap_top_eigenvalues: runs.iter().map(|(_, e)| *e).collect(),
        values,
        meta: LyapunovMeta {
            dimension: n,
            horizon,
            ensemble_a: ens_a.to_string(),
            ensemble_b: ens_b.to_string(),
            seed,
            rates: (r1, r2),
        },
    })
}

/// `ς₁ = (x − ν₊) N^{2/3}/γ` with `γ = ν₊/2`.
pub fn varsigma(x: f64, nu_plus: f64, n: usize) -> f64 {
    (x - nu_plus) * (n as f64).powf(2.0 / 3.0) / (nu_plus / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEigenvalueCheck {
    pub dimension: usize,
    pub nu_plus: f64,
    pub gamma: f64,
    pub nu_max: Vec<f64>,
    pub varsigma: Vec<f64>,
}

impl TopEigenvalueCheck {
    /// Sorted `ς₁` values with their empirical CDF levels.
    pub fn ecdf(&self) -> Vec<(f64, f64)> {
        let mut v = self.varsigma.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / n))
            .collect()
    }

    pub fn stdev(&self) -> f64 {
        sample_stdev(&self.nu_max)
    }
}

/// Independent draws of the top eigenvalue `ν_max,N` of `kind`.
pub fn top_eigenvalue_check(
    kind: &EnsembleKind,
    n: usize,
    n_draws: usize,
    seed: u64,
) -> Result<TopEigenvalueCheck> {
    edge_draws(kind, n, n_draws, seed, false)
}

/// Like [`top_eigenvalue_check`], keeping only draws whose top eigenvalue
/// dominates in modulus (`ν_max > |ν_min|`). Power iteration in a cone can
/// only settle when this holds, so it is the law trapped runs sample.
pub fn dominant_top_eigenvalue_check(
    kind: &EnsembleKind,
    n: usize,
    n_draws: usize,
    seed: u64,
) -> Result<TopEigenvalueCheck> {
    edge_draws(kind, n, n_draws, seed, true)
}

fn edge_draws(
    kind: &EnsembleKind,
    n: usize,
    n_draws: usize,
    seed: u64,
    dominant_only: bool,
) -> Result<TopEigenvalueCheck> {
    kind.validate()?;
    let nu_plus = kind.upper_edge();
    if !(nu_plus > 0.0) {
        return Err(CwlError::Domain(format!(
            "upper edge must be positive, got {nu_plus}"
        )));
    }
    if let EnsembleKind::Elliptic { rho, .. } = kind {
        if *rho != 1.0 {
            return Err(CwlError::Domain(
                "top eigenvalue check needs a symmetric ensemble".into(),
            ));
        }
    }
    let draws = (0..n_draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            Ok(match kind {
                EnsembleKind::GoeShiftedScaled { center, radius } => {
                    let t = goe_tridiagonal(n, *center, *radius, &mut rng);
                    (t.eigenvalue(0), t.max_eigenvalue())
                }
                EnsembleKind::Elliptic { radius, .. } => {
                    let t = goe_tridiagonal(n, 0.0, *radius, &mut rng);
                    (t.eigenvalue(0), t.max_eigenvalue())
                }
                EnsembleKind::InvariantFromDensity { spec, placement } => {
                    let ev = eigenvalues_with(spec, n, *placement, &mut rng)?;
                    (ev[0], ev[n - 1])
                }
            })
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let nu_max: Vec<f64> = draws
        .into_iter()
        .filter(|(lo, hi)| !dominant_only || *hi > -*lo)
        .map(|(_, hi)| hi)
        .collect();
    Ok(TopEigenvalueCheck {
        dimension: n,
        nu_plus,
        gamma: nu_plus / 2.0,
        varsigma: nu_max.iter().map(|&x| varsigma(x, nu_plus, n)).collect(),
        nu_max,
    })
}

/// `ς₁` of trapped runs, from `e^λ` over the trapping window and from the
/// top eigenvalue of the same trapping matrix, each scaled with the edge of
/// the cone the run is trapped in.
pub fn trapped_varsigma(
    samples: &LyapunovSamples,
    ens_a: &EnsembleKind,
    ens_b: &EnsembleKind,
) -> (Vec<f64>, Vec<f64>) {
    let n = samples.meta.dimension;
    let mut from_rate = Vec::new();
    let mut from_matrix = Vec::new();
    for i in 0..samples.len() {
        if !samples.trapped[i] || samples.cycling[i] {
            continue;
        }
        let edge = if samples.final_cones[i] == 0 {
            ens_a.upper_edge()
        } else {
            ens_b.upper_edge()
        };
        from_rate.push(varsigma(samples.trailing_rates[i].exp(), edge, n));
        if let Some(top) = samples.trap_top_eigenvalues[i] {
            from_matrix.push(varsigma(top, edge, n));
        }
    }
    (from_rate, from_matrix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub rho: f64,
    pub curve: PersistenceCurve,
    pub fit: FitResult,
}

/// Persistence of a pair from the elliptic ensemble for each `ϱ`, with a
/// truncated power-law fit `Q₀ ∝ τ^{−μ} e^{−τ/T_cut}` over `window`.
pub fn elliptic_persistence(
    n: usize,
    rhos: &[f64],
    radius: f64,
    n_realizations: usize,
    horizon: u64,
    window: (f64, f64),
    seed: u64,
) -> Result<Vec<EllipticPoint>> {
    rhos.iter()
        .map(|&rho| {
            let kind = EnsembleKind::Elliptic { rho, radius };
            let curve = estimate_persistence_matrix(
                &kind,
                &kind,
                n,
                n_realizations,
                horizon,
                stream_seed(seed, &format!("rho={rho}")),
            )?;
            let fit = fit_curve_truncated(&curve, window)?;
            Ok(EllipticPoint { rho, curve, fit })
        })
        .collect()
}
