//! Fits, distribution distances and resampling shared by the experiments.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CwlError, Result};
use crate::persistence::PersistenceCurve;
use crate::rng::task_rng;

/// Result of a (possibly truncated) power-law fit
/// `ln y = prefactor_log + exponent · ln x − cutoff_rate · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Log-log slope; a decaying curve `x^{−μ}` has exponent `−μ`.
    pub exponent: f64,
    pub prefactor_log: f64,
    /// `1/T` of the exponential cutoff, 0 for a pure power law.
    pub cutoff_rate: f64,
    pub window: (f64, f64),
    pub stderr_exponent: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl FitResult {
    /// Decay exponent `μ = −exponent`.
    pub fn mu(&self) -> f64 {
        -self.exponent
    }
}

/// Weighted least squares for `y ≈ X β` (columns of `X` given separately).
/// Returns coefficients, their covariance scaled by the residual variance,
/// and R².
fn weighted_lstsq(
    cols: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let p = cols.len();
    let n = y.len();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..n {
        for r in 0..p {
            b[r] += w[i] * cols[r][i] * y[i];
            for c in 0..p {
                a[r][c] += w[i] * cols[r][i] * cols[c][i];
            }
        }
    }
    let inv = invert_small(&a).ok_or_else(|| CwlError::Fit("degenerate design matrix".into()))?;
    let beta: Vec<f64> = (0..p)
        .map(|r| (0..p).map(|c| inv[r][c] * b[c]).sum())
        .collect();
    let wsum: f64 = w.iter().sum();
    let ybar = (0..n).map(|i| w[i] * y[i]).sum::<f64>() / wsum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let fit: f64 = (0..p).map(|r| beta[r] * cols[r][i]).sum();
        ss_res += w[i] * (y[i] - fit).powi(2);
        ss_tot += w[i] * (y[i] - ybar).powi(2);
    }
    let dof = n.saturating_sub(p).max(1) as f64;
    // weights are relative, so the covariance is scaled by the residual variance
    let s2 = ss_res / dof;
    let cov = inv
        .iter()
        .map(|row| row.iter().map(|v| v * s2).collect())
        .collect();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok((beta, cov, r2))
}

fn invert_small(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let sv = m.clone().svd(false, false).singular_values;
    if !(sv.min() > 1e-13 * sv.max()) {
        return None;
    }
    let inv = m.try_inverse()?;
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| inv[(i, j)]).collect())
            .collect(),
    )
}

/// `(x, y, stderr)` restricted to a window.
type Windowed = (Vec<f64>, Vec<f64>, Option<Vec<f64>>);

fn select_window(
    x: &[f64],
    y: &[f64],
    stderr: Option<&[f64]>,
    window: (f64, f64),
) -> Result<Windowed> {
    if x.len() != y.len() || stderr.is_some_and(|e| e.len() != x.len()) {
        return Err(CwlError::Fit("series lengths differ".into()));
    }
    if !(window.0 < window.1) {
        return Err(CwlError::Fit(format!("empty window {:?}", window)));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut es = Vec::new();
    for i in 0..x.len() {
        if x[i] >= window.0 && x[i] <= window.1 {
            if !(y[i] > 0.0) || !(x[i] > 0.0) {
                return Err(CwlError::Fit(format!(
                    "non-positive value at x = {}: ({}, {})",
                    x[i], x[i], y[i]
                )));
            }
            xs.push(x[i]);
            ys.push(y[i]);
            if let Some(e) = stderr {
                es.push(e[i]);
            }
        }
    }
    Ok((xs, ys, stderr.map(|_| es)))
}

/// Weights for a fit in `ln y`: `(y/σ)²` when every standard error is
/// positive, uniform otherwise.
fn log_weights(y: &[f64], stderr: &Option<Vec<f64>>) -> Vec<f64> {
    match stderr {
        Some(e) if e.iter().all(|v| *v > 0.0) => {
            y.iter().zip(e).map(|(y, e)| (y / e).powi(2)).collect()
        }
        _ => vec![1.0; y.len()],
    }
}

/// Least squares of `ln y` on `ln x` over `window`.
pub fn fit_powerlaw(
    x: &[f64],
    y: &[f64],
    stderr: Option<&[f64]>,
    window: (f64, f64),
) -> Result<FitResult> {
    let (xs, ys, es) = select_window(x, y, stderr, window)?;
    if xs.len() < 5 {
        return Err(CwlError::Fit(format!(
            "{} points in window {:?}, need at least 5",
            xs.len(),
            window
        )));
    }
    let w = log_weights(&ys, &es);
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (beta, cov, r2) = weighted_lstsq(&[vec![1.0; lx.len()], lx], &ly, &w)?;
    Ok(FitResult {
        exponent: beta[1],
        prefactor_log: beta[0],
        cutoff_rate: 0.0,
        window,
        stderr_exponent: cov[1][1].max(0.0).sqrt(),
        r_squared: r2,
        n_points: xs.len(),
    })
}

pub fn fit_curve_powerlaw(curve: &PersistenceCurve, window: (f64, f64)) -> Result<FitResult> {
    let (x, y, e) = curve.window(window.0, window.1);
    fit_powerlaw(&x, &y, Some(&e), window)
}

/// Least squares of `ln y = a + exponent·ln x − x/T` with the constraint
/// `1/T ≥ 0`; when the unconstrained optimum has `1/T < 0` the fit falls back
/// to the pure power law.
pub fn fit_truncated_powerlaw(
    x: &[f64],
    y: &[f64],
    stderr: Option<&[f64]>,
    window: (f64, f64),
) -> Result<FitResult> {
    let (xs, ys, es) = select_window(x, y, stderr, window)?;
    if xs.len() < 8 {
        return Err(CwlError::Fit(format!(
            "{} points in window {:?}, need at least 8",
            xs.len(),
            window
        )));
    }
    let w = log_weights(&ys, &es);
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let negx: Vec<f64> = xs.iter().map(|v| -v).collect();
    let (beta, cov, r2) = weighted_lstsq(&[vec![1.0; lx.len()], lx, negx], &ly, &w)?;
    if beta[2] < 0.0 {
        return fit_powerlaw(x, y, stderr, window);
    }
    Ok(FitResult {
        exponent: beta[1],
        prefactor_log: beta[0],
        cutoff_rate: beta[2],
        window,
        stderr_exponent: cov[1][1].max(0.0).sqrt(),
        r_squared: r2,
        n_points: xs.len(),
    })
}

pub fn fit_curve_truncated(curve: &PersistenceCurve, window: (f64, f64)) -> Result<FitResult> {
    let (x, y, e) = curve.window(window.0, window.1);
    fit_truncated_powerlaw(&x, &y, Some(&e), window)
}

/// Bootstrap standard error of the power-law exponent, resampling points.
pub fn bootstrap_exponent_stderr(
    x: &[f64],
    y: &[f64],
    window: (f64, f64),
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    let (xs, ys, _) = select_window(x, y, None, window)?;
    let n = xs.len();
    let slopes: Vec<f64> = (0..resamples)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = task_rng(seed, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let bx: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            let by: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            fit_powerlaw(&bx, &by, None, window)
                .ok()
                .map(|f| f.exponent)
        })
        .collect();
    if slopes.len() < 2 {
        return Err(CwlError::Fit(
            "bootstrap produced no valid resamples".into(),
        ));
    }
    let m = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let v = slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64;
    Ok(v.sqrt())
}

/// Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 10 {
        return Err(CwlError::Fit(format!(
            "KS distance needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in s.iter().enumerate() {
        let f = cdf(*v);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d.min(1.0))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CwlError::Fit(
            "two-sample KS needs non-empty samples".into(),
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Samples lie above the edge.
    Above,
    /// Samples lie below the edge.
    Below,
}

/// Slope of the log density of `|x − edge|` on log-spaced bins.
///
/// Only samples on `side` of the edge whose distance lies in
/// `[window.0, window.1] × span` are used, where `span` is the sample range.
/// For a density `∝ |x − edge|^β` the returned exponent is `β`.
pub fn tail_exponent_at_edge(
    samples: &[f64],
    edge: f64,
    side: Side,
    window: (f64, f64),
) -> Result<FitResult> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(CwlError::Fit(format!("bad window {:?}", window)));
    }
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let span = max - min;
    let lo = window.0 * span;
    let hi = window.1 * span;
    let dists: Vec<f64> = samples
        .iter()
        .filter_map(|v| {
            let d = match side {
                Side::Above => v - edge,
                Side::Below => edge - v,
            };
            (d >= lo && d < hi).then_some(d)
        })
        .collect();
    if dists.len() < 1000 {
        return Err(CwlError::Fit(format!(
            "{} samples in the edge window, need at least 1000",
            dists.len()
        )));
    }
    let decades = (hi / lo).log10();
    let bins = ((8.0 * decades).ceil() as usize).max(6);
    let ratio = (hi / lo).powf(1.0 / bins as f64);
    let mut counts = vec![0u64; bins];
    for d in &dists {
        let k = (((d / lo).ln() / ratio.ln()) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut e = Vec::new();
    for (k, c) in counts.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let a = lo * ratio.powi(k as i32);
        let width = a * (ratio - 1.0);
        let dens = *c as f64 / (n * width);
        x.push(a * ratio.sqrt());
        y.push(dens);
        e.push(dens / (*c as f64).sqrt());
    }
    let xlo = x.first().copied().unwrap_or(lo);
    let xhi = x.last().copied().unwrap_or(hi);
    let mut fit = fit_powerlaw(&x, &y, Some(&e), (xlo, xhi))?;
    fit.window = (lo, hi);
    Ok(fit)
}

/// Normalized histogram on `bins` equal bins over `[lo, hi]`: (centers, density).
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for v in samples {
        if *v >= lo && *v < hi {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let n = samples.len().max(1) as f64;
    let centers = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
    let dens = counts.iter().map(|c| *c as f64 / (n * width)).collect();
    (centers, dens)
}

pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

pub fn sample_stdev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..=50).map(|k| k as f64 * 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-0.5)).collect();
        let f = fit_powerlaw(&x, &y, None, (1.0, 200.0)).unwrap();
        assert!((f.exponent + 0.5).abs() < 1e-12);
        assert!((f.prefactor_log - 3f64.ln()).abs() < 1e-12);
        assert!((f.mu() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_value_is_rejected() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.0, 0.5, 0.0, 0.2, 0.1, 0.05];
        assert!(matches!(
            fit_powerlaw(&x, &y, None, (0.5, 10.0)),
            Err(CwlError::Fit(_))
        ));
        assert!(fit_powerlaw(&x, &[1.0; 6], None, (7.0, 10.0)).is_err());
    }

    #[test]
    fn truncated_fit_recovers_parameters() {
        let x: Vec<f64> = (1..=40).map(|k| k as f64 * 2.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powf(-0.4) * (-v / 50.0).exp()).collect();
        let f = fit_truncated_powerlaw(&x, &y, None, (1.0, 100.0)).unwrap();
        assert!((f.mu() - 0.4).abs() < 1e-9);
        assert!((1.0 / f.cutoff_rate - 50.0).abs() < 1e-9);

        let y: Vec<f64> = x.iter().map(|v| 2f64.powf(-v)).collect();
        let f = fit_truncated_powerlaw(&x, &y, None, (1.0, 100.0)).unwrap();
        assert!(f.mu().abs() < 1e-9);
        assert!((f.cutoff_rate - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn truncated_fit_pins_cutoff_for_pure_power_law() {
        let x: Vec<f64> = (1..=40).map(|k| k as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v.powf(-0.4) * (1.0 + 0.01 * (v * 0.7).sin()))
            .collect();
        let t = fit_truncated_powerlaw(&x, &y, None, (1.0, 40.0)).unwrap();
        let p = fit_powerlaw(&x, &y, None, (1.0, 40.0)).unwrap();
        if t.cutoff_rate == 0.0 {
            assert!((t.exponent - p.exponent).abs() < 1e-9);
        }
        let y: Vec<f64> = x.iter().map(|v| v.powf(-0.4)).collect();
        let t = fit_truncated_powerlaw(&x, &y, None, (1.0, 40.0)).unwrap();
        assert!(t.cutoff_rate.abs() < 1e-9);
    }

    #[test]
    fn ks_of_constant_samples_is_large() {
        let s = vec![0.5; 100];
        let d = ks_distance(&s, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d >= 0.5);
        assert!(ks_distance(&[0.1; 5], |x| x).is_err());
    }

    #[test]
    fn two_sample_ks_identical_is_zero() {
        let a: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + 1000.0).collect();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
    }
}
