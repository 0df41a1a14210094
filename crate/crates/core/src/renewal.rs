//! Alternating renewal model of cone residence and the Lamperti analytics.
//!
//! Residence times are iid with the discrete power-law survival
//! `P(τ ≥ k) = (τ_min/k)^μ`, labels alternate strictly between the two cones,
//! and each interval of length `τ` in cone `i` adds `g_i(τ)` to the log-norm
//! accumulator `Λ`. The final interval is truncated at the horizon. For
//! `μ < 1` the law of `λ = Λ/t` tends to the Lamperti density; for `μ > 1`
//! it concentrates on `(m₁ + m₂)/(2 m_τ)`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{CwlError, Result};
use crate::persistence::{CurveMeta, PersistenceCurve, Source};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::rng::task_rng;
use crate::spectral::{MomentFunction, SpectralModel};

/// Parameters of the Lamperti law: edges `r₁`, `r₂` and exponent `μ ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LampertiParams {
    pub r1: f64,
    pub r2: f64,
    pub mu: f64,
}

impl LampertiParams {
    pub fn new(r1: f64, r2: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(CwlError::Domain(format!(
                "Lamperti exponent must lie in (0, 1), got {mu}"
            )));
        }
        if !(r1.is_finite() && r2.is_finite()) || r1 == r2 {
            return Err(CwlError::Domain(format!(
                "Lamperti edges must be distinct, got {r1}, {r2}"
            )));
        }
        Ok(Self { r1, r2, mu })
    }

    pub fn lo(&self) -> f64 {
        self.r1.min(self.r2)
    }

    pub fn hi(&self) -> f64 {
        self.r1.max(self.r2)
    }

    pub fn width(&self) -> f64 {
        (self.r2 - self.r1).abs()
    }
}

/// Density of the occupation fraction `x ∈ (0,1)`; the law is symmetric
/// under `x ↔ 1 − x`.
fn unit_pdf(mu: f64, x: f64, one_minus_x: f64) -> f64 {
    let (s, c) = (mu * std::f64::consts::PI).sin_cos();
    let a = x.powf(mu);
    let b = one_minus_x.powf(mu);
    s / std::f64::consts::PI * (x * one_minus_x).powf(mu - 1.0) / (a * a + b * b + 2.0 * a * b * c)
}

/// Lamperti density
/// `|r₂−r₁| (sin μπ/π) (z₁z₂)^{μ−1} / (z₁^{2μ} + z₂^{2μ} + 2(z₁z₂)^μ cos μπ)`
/// with `zᵢ = |λ − rᵢ|`; zero outside `[r₁, r₂]`.
pub fn lamperti_pdf(p: &LampertiParams, lambda: f64) -> Result<f64> {
    if lambda == p.r1 || lambda == p.r2 {
        return Err(CwlError::EndpointDivergence(lambda));
    }
    if lambda < p.lo() || lambda > p.hi() {
        return Ok(0.0);
    }
    let z1 = (lambda - p.r1).abs();
    let z2 = (lambda - p.r2).abs();
    let (s, c) = (p.mu * std::f64::consts::PI).sin_cos();
    let a = z1.powf(p.mu);
    let b = z2.powf(p.mu);
    Ok(
        p.width() * s / std::f64::consts::PI * (z1 * z2).powf(p.mu - 1.0)
            / (a * a + b * b + 2.0 * a * b * c),
    )
}

fn lamperti_quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 2000,
    }
}

/// `∫₀^{x} unit_pdf` for `x ≤ ½`, with `u = s^{1/μ}` removing the edge
/// singularity.
fn unit_cdf_from_zero(mu: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let inv = 1.0 / mu;
    let q = integrate_with_breaks(
        |s: f64| {
            let u = s.powf(inv);
            // unit_pdf · du/ds with the u^{μ−1} factor cancelled analytically
            let (sn, c) = (mu * std::f64::consts::PI).sin_cos();
            let a = s;
            let b = (1.0 - u).powf(mu);
            sn / std::f64::consts::PI * (1.0 - u).powf(mu - 1.0) / (a * a + b * b + 2.0 * a * b * c)
                * inv
        },
        &[0.0, x.powf(mu)],
        lamperti_quad(),
    )?;
    Ok(q.value)
}

/// CDF of the Lamperti law by quadrature from the nearer edge.
pub fn lamperti_cdf(p: &LampertiParams, lambda: f64) -> Result<f64> {
    if lambda <= p.lo() {
        return Ok(0.0);
    }
    if lambda >= p.hi() {
        return Ok(1.0);
    }
    let x = (lambda - p.lo()) / p.width();
    let v = if x <= 0.5 {
        unit_cdf_from_zero(p.mu, x)?
    } else {
        1.0 - unit_cdf_from_zero(p.mu, (p.hi() - lambda) / p.width())?
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Closed form `((y−r₁)^{μ−1} + (y−r₂)^{μ−1}) / ((y−r₁)^μ + (y−r₂)^μ)`.
pub fn stieltjes_rhs(p: &LampertiParams, y: f64) -> Result<f64> {
    if !(y > p.hi()) {
        return Err(CwlError::Domain(format!("y = {y} must exceed both edges")));
    }
    let a = y - p.r1;
    let b = y - p.r2;
    Ok((a.powf(p.mu - 1.0) + b.powf(p.mu - 1.0)) / (a.powf(p.mu) + b.powf(p.mu)))
}

/// `∫ φ(λ)/(y − λ) dλ` over the Lamperti density by quadrature.
pub fn stieltjes_lhs(p: &LampertiParams, y: f64) -> Result<f64> {
    if !(y > p.hi()) {
        return Err(CwlError::Domain(format!("y = {y} must exceed both edges")));
    }
    let w = p.width();
    let mu = p.mu;
    let inv = 1.0 / mu;
    let dy = y - p.hi();
    // distances of the pole from the upper edge, in units of the substituted variable
    let mut upper_breaks = vec![0.0];
    let mut d = dy / w;
    while d < 0.5 {
        upper_breaks.push(d.powf(mu));
        d *= 4.0;
    }
    upper_breaks.push(0.5f64.powf(mu));
    let lower = integrate_with_breaks(
        |s: f64| {
            let x = s.powf(inv);
            let f = unit_pdf(mu, x, 1.0 - x) * x.powf(1.0 - mu) * inv;
            f / (y - (p.lo() + w * x))
        },
        &[0.0, 0.5f64.powf(mu)],
        lamperti_quad(),
    )?;
    let upper = integrate_with_breaks(
        |s: f64| {
            let u = s.powf(inv);
            let f = unit_pdf(mu, 1.0 - u, u) * u.powf(1.0 - mu) * inv;
            f / (dy + w * u)
        },
        &upper_breaks,
        lamperti_quad(),
    )?;
    Ok(lower.value + upper.value)
}

/// The twenty evaluation points `max(r) + |Δ|·10^{−2+3k/19}`, k = 0..19.
pub fn stieltjes_grid(p: &LampertiParams) -> Vec<f64> {
    (0..20)
        .map(|k| p.hi() + p.width() * 10f64.powf(-2.0 + 3.0 * k as f64 / 19.0))
        .collect()
}

/// Draws `τ = ⌊τ_min U^{−1/μ}⌋`, `U ∈ (0,1]`, so that
/// `P(τ ≥ k) = (τ_min/k)^μ` exactly for integers `k ≥ τ_min`. Values beyond
/// `cap` are returned as `cap`.
pub fn sample_interval<R: Rng + ?Sized>(rng: &mut R, mu: f64, tau_min: u64, cap: u64) -> u64 {
    let u = 1.0 - rng.random::<f64>();
    let t = (tau_min as f64 * u.powf(-1.0 / mu)).floor();
    if t >= cap as f64 {
        cap
    } else {
        t as u64
    }
}

/// Exact `g(τ) = ½ ln f(2τ)` for `τ ≤ exact_max`; beyond that `g(τ) − τ r`
/// (with `r` the log of the largest edge magnitude) varies like `ln τ` and is
/// interpolated linearly in `ln τ` between exactly computed nodes.
#[derive(Debug, Clone)]
pub struct GTable {
    exact: Vec<f64>,
    rate: f64,
    node_ln: Vec<f64>,
    node_h: Vec<f64>,
}

pub const G_EXACT_MAX: u64 = 4096;
const G_NODES_PER_DECADE: f64 = 64.0;

impl GTable {
    pub fn new(spec: &SpectralModel, horizon: u64) -> Result<Self> {
        let mf = MomentFunction::new(spec.clone());
        let exact_max = G_EXACT_MAX.min(horizon.max(1));
        let mut exact: Vec<f64> = (1..=exact_max)
            .into_par_iter()
            .map(|t| mf.g(t))
            .collect::<Result<_>>()?;
        exact.insert(0, 0.0);
        let rate = spec.max_abs_edge().ln();
        let mut node_ln = Vec::new();
        let mut node_h = Vec::new();
        if horizon > exact_max {
            let lo = (exact_max as f64).ln();
            let hi = (horizon as f64).ln();
            let steps = (((hi - lo) / std::f64::consts::LN_10) * G_NODES_PER_DECADE)
                .ceil()
                .max(1.0) as usize;
            let taus: Vec<u64> = (0..=steps)
                .map(|k| (lo + (hi - lo) * k as f64 / steps as f64).exp().round() as u64)
                .collect();
            let hs: Vec<f64> = taus
                .par_iter()
                .map(|&t| Ok(mf.g(t)? - t as f64 * rate))
                .collect::<Result<_>>()?;
            node_ln = taus.iter().map(|t| (*t as f64).ln()).collect();
            node_h = hs;
        }
        Ok(Self {
            exact,
            rate,
            node_ln,
            node_h,
        })
    }

    pub fn g(&self, tau: u64) -> f64 {
        if (tau as usize) < self.exact.len() {
            return self.exact[tau as usize];
        }
        let x = (tau as f64).ln();
        let n = self.node_ln.len();
        let h = if n == 0 {
            let last = self.exact.len() - 1;
            self.exact[last] - last as f64 * self.rate
        } else if x >= self.node_ln[n - 1] {
            self.node_h[n - 1]
        } else {
            let i = self.node_ln.partition_point(|v| *v <= x).clamp(1, n - 1);
            let w = (x - self.node_ln[i - 1]) / (self.node_ln[i] - self.node_ln[i - 1]);
            self.node_h[i - 1] * (1.0 - w) + self.node_h[i] * w
        };
        h + tau as f64 * self.rate
    }
}

/// How an interval of length `τ` contributes to the log-norm.
#[derive(Debug, Clone, PartialEq)]
pub enum GMode {
    /// `gᵢ(τ) = rᵢ τ`.
    LinearRates { r1: f64, r2: f64 },
    /// `gᵢ(τ) = ½ ln ∫ρᵢ(ν) ν^{2τ} dν`.
    ExactSpectral {
        spec_a: SpectralModel,
        spec_b: SpectralModel,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub tau_min: u64,
    pub horizon: u64,
    pub g_mode: GMode,
    pub seed: u64,
}

impl RenewalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu1 > 0.0 && self.mu2 > 0.0) {
            return Err(CwlError::InvalidSpec(
                "tail exponents must be positive".into(),
            ));
        }
        if self.tau_min < 1 {
            return Err(CwlError::InvalidSpec("tau_min must be >= 1".into()));
        }
        if self.horizon < 10 * self.tau_min {
            return Err(CwlError::InvalidSpec(format!(
                "horizon {} must be at least 10·tau_min = {}",
                self.horizon,
                10 * self.tau_min
            )));
        }
        Ok(())
    }
}

/// One renewal history.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalRun {
    /// `(label, τ)` with label 1 or 2; the last entry is truncated at the
    /// horizon.
    pub intervals: Vec<(u8, u64)>,
    pub log_norm: f64,
    pub lambda: f64,
}

enum GEval {
    Linear(f64, f64),
    Tables(GTable, GTable),
}

impl GEval {
    fn new(mode: &GMode, horizon: u64) -> Result<Self> {
        Ok(match mode {
            GMode::LinearRates { r1, r2 } => GEval::Linear(*r1, *r2),
            GMode::ExactSpectral { spec_a, spec_b } => {
                GEval::Tables(GTable::new(spec_a, horizon)?, GTable::new(spec_b, horizon)?)
            }
        })
    }

    fn g(&self, label: u8, tau: u64) -> f64 {
        match self {
            GEval::Linear(r1, r2) => tau as f64 * if label == 1 { *r1 } else { *r2 },
            GEval::Tables(a, b) => {
                if label == 1 {
                    a.g(tau)
                } else {
                    b.g(tau)
                }
            }
        }
    }
}

fn run_one<R: Rng + ?Sized>(
    cfg: &RenewalConfig,
    g: &GEval,
    rng: &mut R,
    record: bool,
) -> RenewalRun {
    let mut label: u8 = if rng.random::<bool>() { 1 } else { 2 };
    let mut t = 0u64;
    let mut acc = 0.0;
    let mut intervals = Vec::new();
    let mut sum = |label: u8, tau: u64, acc: &mut f64| {
        *acc += g.g(label, tau);
        if record {
            intervals.push((label, tau));
        }
    };
    loop {
        let mu = if label == 1 { cfg.mu1 } else { cfg.mu2 };
        let remaining = cfg.horizon - t;
        let tau = sample_interval(rng, mu, cfg.tau_min, remaining);
        if tau >= remaining {
            sum(label, remaining, &mut acc);
            break;
        }
        sum(label, tau, &mut acc);
        t += tau;
        label = 3 - label;
    }
    RenewalRun {
        intervals,
        log_norm: acc,
        lambda: acc / cfg.horizon as f64,
    }
}

/// A single recorded history.
pub fn sample_renewal_run(cfg: &RenewalConfig) -> Result<RenewalRun> {
    cfg.validate()?;
    let g = GEval::new(&cfg.g_mode, cfg.horizon)?;
    let mut rng = task_rng(cfg.seed, 0);
    Ok(run_one(cfg, &g, &mut rng, true))
}

/// `λ = Λ/t` for `n_samples` independent histories.
pub fn sample_renewal_lyapunov(cfg: &RenewalConfig, n_samples: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    let g = GEval::new(&cfg.g_mode, cfg.horizon)?;
    Ok((0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(cfg.seed, i);
            run_one(cfg, &g, &mut rng, false).lambda
        })
        .collect())
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (a+k)^{−s}` for `s > 1`, `a > 0`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const B2K: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let n = 16usize;
    let mut sum: f64 = (0..n).map(|k| (a + k as f64).powf(-s)).sum();
    let x = a + n as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{−s−2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in B2K.iter().enumerate() {
        let term = b / fact * rising * xp;
        sum += term;
        let k = 2.0 * (j as f64 + 1.0);
        rising *= (s + k - 1.0) * (s + k);
        fact *= (k + 1.0) * (k + 2.0);
        xp /= x * x;
    }
    sum
}

/// `m_τ = E[τ] = (τ_min − 1) + τ_min^μ ζ(μ, τ_min)`.
pub fn mean_interval(mu: f64, tau_min: u64) -> Result<f64> {
    if !(mu > 1.0) {
        return Err(CwlError::DivergentMean(mu));
    }
    let tm = tau_min as f64;
    Ok(tm - 1.0 + tm.powf(mu) * hurwitz_zeta(mu, tm))
}

const SERIES_TERMS: u64 = 1_000_000;

/// `E[g(τ)]` by summation by parts,
/// `Σ p(k) g(k) = g(τ_min) + Σ_{k>τ_min} (g(k) − g(k−1)) (τ_min/k)^μ`,
/// summed exactly to `K = 10⁶` with the tail taken from the edge expansion
/// `g(k) − g(k−1) ≈ r − (α+1)/(2k)`.
fn mean_g(spec: &SpectralModel, mu: f64, tau_min: u64) -> Result<f64> {
    let k_max = SERIES_TERMS.max(tau_min * 10);
    let table = GTable::new(spec, k_max)?;
    let tm = tau_min as f64;
    let mut sum = table.g(tau_min);
    let mut prev = sum;
    for k in tau_min + 1..=k_max {
        let gk = table.g(k);
        sum += (gk - prev) * (tm / k as f64).powf(mu);
        prev = gk;
    }
    let r = spec.max_abs_edge().ln();
    let from = (k_max + 1) as f64;
    let mut tail = r * tm.powf(mu) * hurwitz_zeta(mu, from);
    if !spec.is_atomic() {
        tail -= 0.5 * (spec.alpha + 1.0) * tm.powf(mu) * hurwitz_zeta(mu + 1.0, from);
    }
    Ok(sum + tail)
}

/// Self-averaging limit `(m₁ + m₂)/(2 m_τ)` of `λ` for `μ > 1`.
pub fn self_averaging_value(g_mode: &GMode, mu: f64, tau_min: u64) -> Result<f64> {
    let m_tau = mean_interval(mu, tau_min)?;
    match g_mode {
        GMode::LinearRates { r1, r2 } => Ok(0.5 * (r1 + r2)),
        GMode::ExactSpectral { spec_a, spec_b } => {
            let m1 = mean_g(spec_a, mu, tau_min)?;
            let m2 = mean_g(spec_b, mu, tau_min)?;
            Ok((m1 + m2) / (2.0 * m_tau))
        }
    }
}

/// Empirical `P(τ ≥ k)` of the interval sampler on a log grid of `k`.
pub fn renewal_persistence_sanity(
    mu: f64,
    tau_min: u64,
    n: usize,
    seed: u64,
) -> Result<PersistenceCurve> {
    if !(mu > 0.0) || tau_min < 1 {
        return Err(CwlError::InvalidSpec("need mu > 0 and tau_min >= 1".into()));
    }
    let cap = tau_min.saturating_mul(100_000);
    let mut draws: Vec<u64> = (0..n as u64)
        .into_par_iter()
        .map(|i| sample_interval(&mut task_rng(seed, i), mu, tau_min, cap))
        .collect();
    draws.sort_unstable();
    let grid: Vec<u64> = crate::persistence::log_tau_grid(cap / 10, 10)
        .into_iter()
        .filter(|k| *k >= tau_min)
        .collect();
    let nf = n as f64;
    let mut q0 = Vec::new();
    let mut stderr = Vec::new();
    for &k in &grid {
        let below = draws.partition_point(|d| *d < k);
        let p = (n - below) as f64 / nf;
        q0.push(p);
        stderr.push((p * (1.0 - p) / nf).sqrt());
    }
    Ok(PersistenceCurve {
        tau: grid,
        q0,
        stderr,
        meta: CurveMeta {
            source: Source::Renewal,
            description: format!("interval survival mu={mu} tau_min={tau_min}"),
            dimension: None,
            n_samples: n,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcsine_midpoint() {
        let p = LampertiParams::new(0.0, 1.0, 0.5).unwrap();
        assert!((lamperti_pdf(&p, 0.5).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(matches!(
            lamperti_pdf(&p, 0.0),
            Err(CwlError::EndpointDivergence(_))
        ));
        assert_eq!(lamperti_pdf(&p, 1.5).unwrap(), 0.0);
        assert!((lamperti_cdf(&p, 0.5).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stieltjes_example() {
        let p = LampertiParams::new(0.0, 1.0, 0.5).unwrap();
        let rhs = stieltjes_rhs(&p, 2.0).unwrap();
        assert!((rhs - (0.5f64.sqrt() + 1.0) / (2f64.sqrt() + 1.0)).abs() < 1e-15);
        let lhs = stieltjes_lhs(&p, 2.0).unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 1e-9);
        assert!(stieltjes_rhs(&p, 1.0).is_err());
    }

    #[test]
    fn hurwitz_zeta_reference_values() {
        // ζ(2) = π²/6, ζ(1.5) = 2.612375348685488, ζ(2, 3) = π²/6 − 1 − 1/4
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((hurwitz_zeta(2.0, 1.0) - pi2 / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612375348685488).abs() < 1e-13);
        assert!((hurwitz_zeta(2.0, 3.0) - (pi2 / 6.0 - 1.25)).abs() < 1e-14);
    }

    #[test]
    fn linear_rates_average() {
        let g = GMode::LinearRates { r1: -1.0, r2: 3.0 };
        assert_eq!(self_averaging_value(&g, 1.5, 2).unwrap(), 1.0);
        assert!(matches!(
            self_averaging_value(&g, 0.9, 1),
            Err(CwlError::DivergentMean(_))
        ));
    }

    #[test]
    fn truncated_intervals_fill_the_horizon() {
        let cfg = RenewalConfig {
            mu1: 0.6,
            mu2: 0.8,
            tau_min: 3,
            horizon: 5000,
            g_mode: GMode::LinearRates { r1: 0.1, r2: -0.2 },
            seed: 4,
        };
        let run = sample_renewal_run(&cfg).unwrap();
        assert_eq!(run.intervals.iter().map(|(_, t)| t).sum::<u64>(), 5000);
        for w in run.intervals.windows(2) {
            assert_ne!(w[0].0, w[1].0);
        }
    }
}
