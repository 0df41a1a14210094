//! Spectral densities and their moment analytics.
//!
//! For a density `ρ` the moments `f(t) = ∫ρ(ν)ν^t dν` give the covariance of
//! the first component of `A^t v(0)` for Gaussian `v(0)` in the large-N limit.
//! Near the upper edge `ρ(ν) ≈ K |ν − ν₊|^α`, which fixes the large-time
//! correlator exponent and, through the diffusion correspondence
//! `d = 2(α + 1)`, the persistence exponent.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{CwlError, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Semicircle {
        center: f64,
        radius: f64,
    },
    /// Beta(d/2, d/2) on [0, 1].
    SymmetricBeta {
        d: f64,
    },
    Atomic {
        value: f64,
    },
    /// Piecewise-linear density through the points, normalized to unit mass.
    Tabulated {
        nu: Vec<f64>,
        rho: Vec<f64>,
    },
}

/// A compactly supported eigenvalue density with its edge behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub family: Family,
    pub nu_minus: f64,
    pub nu_plus: f64,
    /// Edge exponent at the upper edge.
    pub alpha: f64,
    /// `K` in `ρ(ν) ≈ K |ν − ν₊|^α`.
    pub edge_constant: f64,
    /// Edge exponent at the lower edge.
    pub alpha_minus: f64,
}

const QUAD_REL: f64 = 1e-12;
const QUAD_MAX_INTERVALS: usize = 4000;

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: QUAD_REL,
        max_intervals: QUAD_MAX_INTERVALS,
    }
}

impl SpectralModel {
    pub fn semicircle(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.is_finite() || !radius.is_finite() {
            return Err(CwlError::InvalidSpec(format!(
                "semicircle needs a finite center and radius > 0, got ({center}, {radius})"
            )));
        }
        Ok(Self {
            family: Family::Semicircle { center, radius },
            nu_minus: center - radius,
            nu_plus: center + radius,
            alpha: 0.5,
            edge_constant: 2.0 * 2f64.sqrt() / (std::f64::consts::PI * radius.powf(1.5)),
            alpha_minus: 0.5,
        })
    }

    pub fn symmetric_beta(d: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(CwlError::InvalidSpec(format!(
                "symmetric beta needs d > 0, got {d}"
            )));
        }
        let a = d / 2.0;
        Ok(Self {
            family: Family::SymmetricBeta { d },
            nu_minus: 0.0,
            nu_plus: 1.0,
            alpha: a - 1.0,
            edge_constant: 1.0 / beta_fn(a, a),
            alpha_minus: a - 1.0,
        })
    }

    pub fn atomic(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(CwlError::InvalidSpec(format!("atom at {value}")));
        }
        Ok(Self {
            family: Family::Atomic { value },
            nu_minus: value,
            nu_plus: value,
            alpha: f64::NAN,
            edge_constant: f64::NAN,
            alpha_minus: f64::NAN,
        })
    }

    /// Piecewise-linear density through `(nu[i], rho[i])`. The grid must be
    /// strictly increasing and the values non-negative; the result is
    /// renormalized to unit mass.
    pub fn tabulated(nu: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if nu.len() < 2 || nu.len() != rho.len() {
            return Err(CwlError::InvalidSpec(
                "tabulated density needs at least two (nu, rho) pairs".into(),
            ));
        }
        if nu.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CwlError::InvalidSpec(
                "tabulated grid must be strictly increasing".into(),
            ));
        }
        if rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(CwlError::InvalidSpec(
                "tabulated density has negative values: CDF would not be monotone".into(),
            ));
        }
        let mass: f64 = nu
            .windows(2)
            .zip(rho.windows(2))
            .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1]))
            .sum();
        if !(mass > 0.0) {
            return Err(CwlError::InvalidSpec(
                "tabulated density has zero mass".into(),
            ));
        }
        let rho: Vec<f64> = rho.iter().map(|r| r / mass).collect();
        let n = nu.len();
        let (alpha, k) = if rho[n - 1] > 0.0 {
            (0.0, rho[n - 1])
        } else {
            (1.0, (rho[n - 2] - rho[n - 1]) / (nu[n - 1] - nu[n - 2]))
        };
        let alpha_minus = if rho[0] > 0.0 { 0.0 } else { 1.0 };
        Ok(Self {
            nu_minus: nu[0],
            nu_plus: nu[n - 1],
            alpha,
            edge_constant: k,
            alpha_minus,
            family: Family::Tabulated { nu, rho },
        })
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.family, Family::Atomic { .. })
    }

    /// Largest edge magnitude `max(|ν₋|, |ν₊|)`.
    pub fn max_abs_edge(&self) -> f64 {
        self.nu_minus.abs().max(self.nu_plus.abs())
    }

    pub fn density(&self, nu: f64) -> f64 {
        self.density_at(nu, nu - self.nu_minus, self.nu_plus - nu)
    }

    /// Density at `nu` given its distances to the lower and upper edges.
    /// Callers that know these distances more accurately than `nu` itself
    /// (edge substitutions) avoid rounding the point onto the edge.
    fn density_at(&self, nu: f64, d_minus: f64, d_plus: f64) -> f64 {
        if !(d_minus >= 0.0 && d_plus >= 0.0) {
            return 0.0;
        }
        match &self.family {
            Family::Semicircle { radius, .. } => {
                2.0 / (std::f64::consts::PI * radius * radius) * (d_minus * d_plus).sqrt()
            }
            Family::SymmetricBeta { d } => {
                (d_minus * d_plus).powf(d / 2.0 - 1.0) * self.edge_constant
            }
            Family::Atomic { .. } => 0.0,
            Family::Tabulated { nu: xs, rho } => {
                let i = match xs.partition_point(|x| *x <= nu) {
                    0 => 0,
                    i if i >= xs.len() => xs.len() - 2,
                    i => i - 1,
                };
                let w = (nu - xs[i]) / (xs[i + 1] - xs[i]);
                rho[i] * (1.0 - w) + rho[i + 1] * w
            }
        }
    }

    /// Density as seen by `edge_integral` over `[lo, hi]`: distances to the
    /// support edges are taken from the substitution when a limit is an edge.
    fn density_in(&self, x: f64, lo: f64, hi: f64, dlo: f64, dhi: f64) -> f64 {
        let dm = if lo == self.nu_minus {
            dlo
        } else {
            x - self.nu_minus
        };
        let dp = if hi == self.nu_plus {
            dhi
        } else {
            self.nu_plus - x
        };
        self.density_at(x, dm, dp)
    }

    fn integrate_weighted<W: Fn(f64) -> f64>(
        &self,
        w: W,
        lo: f64,
        hi: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        focus: &[f64],
    ) -> Result<f64> {
        edge_integral(
            |x, dlo, dhi| self.density_in(x, lo, hi, dlo, dhi),
            w,
            lo,
            hi,
            alpha_lo,
            alpha_hi,
            focus,
        )
    }

    pub fn total_mass(&self) -> Result<f64> {
        if self.is_atomic() {
            return Ok(1.0);
        }
        self.integrate_weighted(
            |_| 1.0,
            self.nu_minus,
            self.nu_plus,
            self.alpha_minus,
            self.alpha,
            &[],
        )
    }

    pub fn cdf(&self, nu: f64) -> Result<f64> {
        if nu < self.nu_minus {
            return Ok(0.0);
        }
        if nu >= self.nu_plus {
            return Ok(1.0);
        }
        match self.family {
            Family::Atomic { .. } => return Ok(if nu >= self.nu_plus { 1.0 } else { 0.0 }),
            Family::Semicircle { center, radius } => {
                let x = ((nu - center) / radius).clamp(-1.0, 1.0);
                let v = 0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI;
                return Ok(v.clamp(0.0, 1.0));
            }
            Family::SymmetricBeta { d } => {
                return Ok(beta_reg(0.5 * d, 0.5 * d, nu).clamp(0.0, 1.0))
            }
            Family::Tabulated { .. } => {}
        }
        let mid = 0.5 * (self.nu_minus + self.nu_plus);
        let v = if nu <= mid {
            self.integrate_weighted(|_| 1.0, self.nu_minus, nu, self.alpha_minus, 0.0, &[])?
        } else {
            1.0 - self.integrate_weighted(|_| 1.0, nu, self.nu_plus, 0.0, self.alpha, &[])?
        };
        Ok(v.clamp(0.0, 1.0))
    }

    pub fn mean(&self) -> Result<f64> {
        moment_f(self, 1)
    }
}

impl fmt::Display for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Semicircle { center, radius } => write!(f, "semicircle:{center}:{radius}"),
            Family::SymmetricBeta { d } => write!(f, "beta:{d}"),
            Family::Atomic { value } => write!(f, "atomic:{value}"),
            Family::Tabulated { nu, .. } => {
                write!(
                    f,
                    "tabulated[{} points on {}..{}]",
                    nu.len(),
                    nu[0],
                    nu[nu.len() - 1]
                )
            }
        }
    }
}

/// Parses `semicircle:<center>:<radius>`, `beta:<d>`, `atomic:<value>` or
/// `tabulated:<path>` (two whitespace- or comma-separated columns).
impl FromStr for SpectralModel {
    type Err = CwlError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |x: &str| -> Result<f64> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CwlError::InvalidSpec(format!("cannot parse number '{x}' in '{s}'")))
        };
        match parts.as_slice() {
            ["semicircle", c, r] => SpectralModel::semicircle(num(c)?, num(r)?),
            ["beta", d] => SpectralModel::symmetric_beta(num(d)?),
            ["atomic", v] => SpectralModel::atomic(num(v)?),
            ["tabulated", rest @ ..] if !rest.is_empty() => {
                let path = rest.join(":");
                let text = std::fs::read_to_string(&path)?;
                let mut nu = Vec::new();
                let mut rho = Vec::new();
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let cols: Vec<&str> = line
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|c| !c.is_empty())
                        .collect();
                    if cols.len() < 2 {
                        return Err(CwlError::InvalidSpec(format!(
                            "tabulated density line '{line}' needs two columns"
                        )));
                    }
                    nu.push(num(cols[0])?);
                    rho.push(num(cols[1])?);
                }
                SpectralModel::tabulated(nu, rho)
            }
            _ => Err(CwlError::InvalidSpec(format!(
                "unknown spectral spec '{s}' (expected semicircle:c:r, beta:d, atomic:v or tabulated:path)"
            ))),
        }
    }
}

pub fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Moment stored as sign and log-magnitude so that large `t` neither
/// overflows nor underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMoment {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogMoment {
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Distances from the edge at which a `t`-th power weight is resolved.
fn focus_points(scale: f64, t: u64) -> Vec<f64> {
    if t == 0 {
        return Vec::new();
    }
    let base = scale / t as f64;
    (-4..12).map(|k| base * 2f64.powi(k)).collect()
}

/// `f(t)` in log space.
pub fn log_moment(spec: &SpectralModel, t: u64) -> Result<LogMoment> {
    if let Family::Atomic { value } = spec.family {
        return Ok(if t == 0 {
            LogMoment {
                sign: 1.0,
                ln_abs: 0.0,
            }
        } else if value == 0.0 {
            LogMoment {
                sign: 0.0,
                ln_abs: f64::NEG_INFINITY,
            }
        } else {
            let sign = if value < 0.0 && t % 2 == 1 { -1.0 } else { 1.0 };
            LogMoment {
                sign,
                ln_abs: t as f64 * value.abs().ln(),
            }
        });
    }
    let m = spec.max_abs_edge();
    if m == 0.0 {
        return Err(CwlError::InvalidSpec(
            "density supported at the origin only".into(),
        ));
    }
    let tf = t as f64;
    let weight = move |x: f64| -> f64 {
        if t == 0 {
            1.0
        } else {
            let r = x.abs() / m;
            if r == 0.0 {
                0.0
            } else {
                (tf * r.ln()).exp()
            }
        }
    };
    // positive branch [max(0, ν₋), ν₊]
    let pos = if spec.nu_plus > 0.0 {
        let lo = spec.nu_minus.max(0.0);
        let a_lo = if spec.nu_minus >= 0.0 {
            spec.alpha_minus
        } else {
            0.0
        };
        spec.integrate_weighted(
            weight,
            lo,
            spec.nu_plus,
            a_lo,
            spec.alpha,
            &focus_points(spec.nu_plus, t),
        )?
    } else {
        0.0
    };
    // negative branch, mirrored onto [max(0, −ν₊), −ν₋] so that a density
    // symmetric about zero sees exactly the same nodes on both sides
    let neg = if spec.nu_minus < 0.0 {
        let hi = -spec.nu_minus;
        let lo = (-spec.nu_plus).max(0.0);
        let a_lo = if spec.nu_plus <= 0.0 { spec.alpha } else { 0.0 };
        {
            // y = −ν: distance to ν₋ is hi − y, distance to ν₊ is y − lo
            let dens = |y: f64, dlo: f64, dhi: f64| {
                let dm = if hi == -spec.nu_minus {
                    dhi
                } else {
                    -y - spec.nu_minus
                };
                let dp = if lo == -spec.nu_plus {
                    dlo
                } else {
                    spec.nu_plus + y
                };
                spec.density_at(-y, dm, dp)
            };
            edge_integral(
                dens,
                weight,
                lo,
                hi,
                a_lo,
                spec.alpha_minus,
                &focus_points(hi, t),
            )?
        }
    } else {
        0.0
    };
    let total = if t % 2 == 1 { pos - neg } else { pos + neg };
    if total == 0.0 {
        return Ok(LogMoment {
            sign: 0.0,
            ln_abs: f64::NEG_INFINITY,
        });
    }
    Ok(LogMoment {
        sign: total.signum(),
        ln_abs: total.abs().ln() + tf * m.ln(),
    })
}

/// `∫ dens(x) w(x) dx` over `[lo, hi]`, using a power substitution at both
/// limits so that integrable edge singularities `|x − edge|^α` become smooth.
/// `focus` lists extra breakpoints, as distances from `hi`, for integrands
/// concentrated near the upper limit.
fn edge_integral<D: Fn(f64, f64, f64) -> f64, W: Fn(f64) -> f64>(
    dens: D,
    w: W,
    lo: f64,
    hi: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    focus: &[f64],
) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let half = mid - lo;
    // lower half: x = lo + s^{1/(a+1)}
    let pl = 1.0 / (alpha_lo + 1.0);
    let lower = integrate_with_breaks(
        |s: f64| {
            let dx = s.powf(pl);
            let x = lo + dx;
            dens(x, dx, hi - x) * w(x) * pl * dx / s
        },
        &[0.0, half.powf(alpha_lo + 1.0)],
        quad_opts(),
    )?;
    // upper half: x = hi − s^{1/(a+1)}
    let ph = 1.0 / (alpha_hi + 1.0);
    let mut ds: Vec<f64> = focus
        .iter()
        .cloned()
        .filter(|d| *d > 0.0 && *d < half)
        .collect();
    ds.sort_by(f64::total_cmp);
    let mut breaks = vec![0.0];
    breaks.extend(ds.iter().map(|d| d.powf(alpha_hi + 1.0)));
    breaks.push(half.powf(alpha_hi + 1.0));
    let upper = integrate_with_breaks(
        |s: f64| {
            let dx = s.powf(ph);
            let x = hi - dx;
            dens(x, x - lo, dx) * w(x) * ph * dx / s
        },
        &breaks,
        quad_opts(),
    )?;
    Ok(lower.value + upper.value)
}

/// `f(t) = ∫ ρ(ν) ν^t dν`.
pub fn moment_f(spec: &SpectralModel, t: u64) -> Result<f64> {
    Ok(log_moment(spec, t)?.value())
}

/// Laplace-method form `K Γ(α+1) ν₊^{t+α+1} t^{−α−1}` of the moments.
pub fn moment_asymptotic(spec: &SpectralModel, t: f64) -> Result<f64> {
    if spec.is_atomic() {
        return Err(CwlError::Domain(
            "edge exponent is undefined for an atomic spectrum".into(),
        ));
    }
    if !(spec.nu_plus > 0.0) {
        return Err(CwlError::Domain(format!(
            "upper edge {} must be positive for the edge asymptotics",
            spec.nu_plus
        )));
    }
    if !(t >= 1.0) {
        return Err(CwlError::Domain(format!("t = {t} must be >= 1")));
    }
    let a = spec.alpha;
    let ln = spec.edge_constant.ln() + ln_gamma(a + 1.0) + (t + a + 1.0) * spec.nu_plus.ln()
        - (a + 1.0) * t.ln();
    Ok(ln.exp())
}

/// Memoized moments of one spectral model. Safe to share across threads.
#[derive(Debug)]
pub struct MomentFunction {
    spec: SpectralModel,
    cache: Mutex<HashMap<u64, LogMoment>>,
}

impl MomentFunction {
    pub fn new(spec: SpectralModel) -> Self {
        Self {
            spec,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &SpectralModel {
        &self.spec
    }

    pub fn log_moment(&self, t: u64) -> Result<LogMoment> {
        if let Some(v) = self.cache.lock().expect("moment cache poisoned").get(&t) {
            return Ok(*v);
        }
        let v = log_moment(&self.spec, t)?;
        self.cache
            .lock()
            .expect("moment cache poisoned")
            .insert(t, v);
        Ok(v)
    }

    pub fn f(&self, t: u64) -> Result<f64> {
        Ok(self.log_moment(t)?.value())
    }

    /// `f(t+s) / √(f(2t) f(2s))`.
    pub fn correlator(&self, t: u64, s: u64) -> Result<f64> {
        let a = self.log_moment(2 * t)?;
        let b = self.log_moment(2 * s)?;
        if a.sign <= 0.0 || b.sign <= 0.0 {
            return Err(CwlError::DegenerateProcess(format!(
                "vanishing variance at t = {t} or s = {s}"
            )));
        }
        if t == s {
            return Ok(1.0);
        }
        let c = self.log_moment(t + s)?;
        if c.sign == 0.0 {
            return Ok(0.0);
        }
        let v = c.sign * (c.ln_abs - 0.5 * a.ln_abs - 0.5 * b.ln_abs).exp();
        Ok(v.clamp(-1.0, 1.0))
    }

    /// `½ ln f(2τ)`.
    pub fn g(&self, tau: u64) -> Result<f64> {
        let m = self.log_moment(2 * tau)?;
        if m.sign <= 0.0 {
            return Err(CwlError::DegenerateProcess(format!(
                "f(2τ) vanishes at τ = {tau}"
            )));
        }
        Ok(0.5 * m.ln_abs)
    }

    /// Odd moments vanish (to 1e-9), so even and odd times decouple.
    pub fn is_sign_symmetric(&self) -> Result<bool> {
        Ok(self.f(1)?.abs() + self.f(3)?.abs() < 1e-9)
    }
}

pub fn correlator(spec: &SpectralModel, t: u64, s: u64) -> Result<f64> {
    MomentFunction::new(spec.clone()).correlator(t, s)
}

pub fn g_function(spec: &SpectralModel, tau: u64) -> Result<f64> {
    MomentFunction::new(spec.clone()).g(tau)
}

/// `(2√(ts)/(t+s))^{α+1}`.
pub fn correlator_asymptotic(alpha: f64, t: f64, s: f64) -> f64 {
    (2.0 * (t * s).sqrt() / (t + s)).powf(alpha + 1.0)
}

/// Diffusion dimension `d = 2(α+1)` sharing the large-time correlator.
pub fn effective_dimension(alpha: f64) -> f64 {
    2.0 * (alpha + 1.0)
}

/// Persistence exponents θ(d) of the d-dimensional diffusion field.
pub const THETA_TABLE: [(u32, f64); 5] = [
    (1, 0.1205),
    (2, 3.0 / 16.0),
    (3, 0.2382),
    (4, 0.2806),
    (5, 0.3173),
];

pub fn theta_reference(d: f64) -> Result<f64> {
    let k = d.round();
    if (d - k).abs() > 1e-9 {
        return Err(CwlError::UnsupportedDimension(d));
    }
    THETA_TABLE
        .iter()
        .find(|(dd, _)| *dd as f64 == k)
        .map(|(_, th)| *th)
        .ok_or(CwlError::UnsupportedDimension(d))
}

/// Edge exponent above which the persistence exponent is expected to exceed
/// one; the reference table does not reach this far.
pub const ALPHA_VALIDATED_MAX: f64 = 22.0;

/// Predicted persistence exponent of the first component: θ(2(α+1)), doubled
/// when the spectrum is symmetric about zero.
pub fn persistence_exponent(spec: &SpectralModel) -> Result<f64> {
    if spec.is_atomic() {
        return Err(CwlError::Domain(
            "edge exponent is undefined for an atomic spectrum".into(),
        ));
    }
    if spec.alpha > ALPHA_VALIDATED_MAX {
        return Err(CwlError::Domain(format!(
            "alpha = {} is outside the validated range (alpha <= {ALPHA_VALIDATED_MAX})",
            spec.alpha
        )));
    }
    let theta = theta_reference(effective_dimension(spec.alpha))?;
    let doubled = MomentFunction::new(spec.clone()).is_sign_symmetric()?;
    Ok(if doubled { 2.0 * theta } else { theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_moment(a: f64, t: f64) -> f64 {
        (ln_gamma(a + t) + ln_gamma(2.0 * a) - ln_gamma(a) - ln_gamma(2.0 * a + t)).exp()
    }

    #[test]
    fn densities_are_normalized() {
        for spec in [
            SpectralModel::semicircle(0.0, 2.0).unwrap(),
            SpectralModel::semicircle(1.5, 0.3).unwrap(),
            SpectralModel::symmetric_beta(1.0).unwrap(),
            SpectralModel::symmetric_beta(3.0).unwrap(),
            SpectralModel::symmetric_beta(5.0).unwrap(),
            SpectralModel::tabulated(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap(),
        ] {
            let m = spec.total_mass().unwrap();
            assert!((m - 1.0).abs() < 1e-10, "{spec}: {m}");
        }
    }

    #[test]
    fn low_moments_match_closed_forms() {
        let uni = SpectralModel::symmetric_beta(2.0).unwrap();
        assert!((moment_f(&uni, 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let sc = SpectralModel::semicircle(0.0, 2.0).unwrap();
        assert!((moment_f(&sc, 4).unwrap() - 2.0).abs() < 1e-10);
        assert!((moment_f(&sc, 6).unwrap() - 5.0).abs() < 1e-10);
        assert_eq!(moment_f(&sc, 3).unwrap(), 0.0);
        let b3 = SpectralModel::symmetric_beta(3.0).unwrap();
        assert!((moment_f(&b3, 2).unwrap() - 5.0 / 16.0).abs() < 1e-11);
    }

    #[test]
    fn large_moments_match_gamma_closed_form() {
        for d in [1.0, 3.0, 5.0] {
            let spec = SpectralModel::symmetric_beta(d).unwrap();
            for t in [10u64, 1000, 10_000, 100_000] {
                let q = moment_f(&spec, t).unwrap();
                let exact = beta_moment(d / 2.0, t as f64);
                assert!(
                    ((q - exact) / exact).abs() < 1e-9,
                    "d={d} t={t} {q} {exact}"
                );
            }
        }
    }

    #[test]
    fn moments_beyond_overflow_stay_finite_in_log_space() {
        let spec = SpectralModel::semicircle(0.0, 4.0).unwrap();
        let m = log_moment(&spec, 2000).unwrap();
        assert!(m.ln_abs.is_finite() && m.ln_abs > 700.0);
        let asym =
            moment_asymptotic(&SpectralModel::semicircle(-3.0, 1.0).unwrap(), 1e4).unwrap_err();
        assert!(matches!(asym, CwlError::Domain(_)));
    }

    #[test]
    fn asymptotic_moment_ratio() {
        let b3 = SpectralModel::symmetric_beta(3.0).unwrap();
        let r = moment_asymptotic(&b3, 1e4).unwrap() / moment_f(&b3, 10_000).unwrap();
        assert!((r - 1.0).abs() < 0.02, "{r}");
        let uni = SpectralModel::symmetric_beta(2.0).unwrap();
        let r = moment_asymptotic(&uni, 1e4).unwrap() * (1e4 + 1.0);
        assert!((r - 1.0).abs() < 2e-4);
        assert!(moment_asymptotic(&SpectralModel::atomic(0.5).unwrap(), 10.0).is_err());
    }

    #[test]
    fn correlator_values() {
        let sc = MomentFunction::new(SpectralModel::semicircle(0.0, 2.0).unwrap());
        assert_eq!(sc.correlator(1, 2).unwrap(), 0.0);
        assert_eq!(sc.correlator(7, 7).unwrap(), 1.0);
        let b3 = MomentFunction::new(SpectralModel::symmetric_beta(3.0).unwrap());
        let c = b3.correlator(100, 200).unwrap();
        let a = correlator_asymptotic(0.5, 100.0, 200.0);
        assert!((c / a - 1.0).abs() < 0.01, "{c} {a}");
        assert!((correlator_asymptotic(0.5, 100.0, 400.0) - 0.8f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn g_function_values() {
        let e = SpectralModel::atomic(std::f64::consts::E).unwrap();
        assert!((g_function(&e, 5).unwrap() - 5.0).abs() < 1e-12);
        let sc = SpectralModel::semicircle(0.0, 2.0).unwrap();
        assert!(g_function(&sc, 1).unwrap().abs() < 1e-12);
        let b3 = SpectralModel::symmetric_beta(3.0).unwrap();
        let tau = 500.0;
        let g = g_function(&b3, 500).unwrap();
        let expected = 0.5 * moment_asymptotic(&b3, 2.0 * tau).unwrap().ln();
        assert!((g / tau - expected / tau).abs() < 0.01 * (1.5 * (2.0 * tau).ln() / (2.0 * tau)));
    }

    #[test]
    fn exponent_lookup() {
        assert_eq!(effective_dimension(0.5), 3.0);
        assert_eq!(theta_reference(3.0).unwrap(), 0.2382);
        assert_eq!(theta_reference(2.0).unwrap(), 3.0 / 16.0);
        assert!(matches!(
            theta_reference(6.0),
            Err(CwlError::UnsupportedDimension(_))
        ));
        assert!(matches!(
            theta_reference(2.5),
            Err(CwlError::UnsupportedDimension(_))
        ));
        let sc = SpectralModel::semicircle(0.0, 2.0).unwrap();
        assert!((persistence_exponent(&sc).unwrap() - 0.4764).abs() < 1e-12);
        let b3 = SpectralModel::symmetric_beta(3.0).unwrap();
        assert_eq!(persistence_exponent(&b3).unwrap(), 0.2382);
        for w in THETA_TABLE.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn edge_constants() {
        let sc = SpectralModel::semicircle(0.0, 2.0).unwrap();
        let eps = 1e-8;
        let ratio = sc.density(2.0 - eps) / (sc.edge_constant * eps.powf(0.5));
        assert!((ratio - 1.0).abs() < 1e-6);
        let b3 = SpectralModel::symmetric_beta(3.0).unwrap();
        let ratio = b3.density(1.0 - eps) / (b3.edge_constant * eps.powf(0.5));
        assert!((ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["semicircle:0:2", "beta:3", "atomic:0.7"] {
            let spec: SpectralModel = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("gauss:1".parse::<SpectralModel>().is_err());
        assert!(SpectralModel::tabulated(vec![0.0, 1.0], vec![1.0, -0.1]).is_err());
    }
}
