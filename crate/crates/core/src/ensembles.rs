//! Random matrix ensembles.
//!
//! All samplers are pure functions of their arguments and seed. GOE matrices
//! are normalized so that the semicircle edges sit exactly at
//! `center ± radius`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{CwlError, Result};
use crate::linalg::{chi, std_normal, SymTridiagonal};
use crate::rng::{rng_from_seed, CwlRng};
use crate::spectral::{Family, SpectralModel};

/// How eigenvalues of an invariant ensemble are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// `νᵢ = CDF⁻¹((i − ½)/N)`.
    Quantile,
    /// Independent draws from the density.
    Iid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleKind {
    GoeShiftedScaled {
        center: f64,
        radius: f64,
    },
    InvariantFromDensity {
        spec: SpectralModel,
        placement: Placement,
    },
    Elliptic {
        rho: f64,
        radius: f64,
    },
}

impl EnsembleKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnsembleKind::GoeShiftedScaled { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() || !center.is_finite() {
                    return Err(CwlError::InvalidSpec(format!(
                        "GOE radius must be positive and finite, got {radius}"
                    )));
                }
            }
            EnsembleKind::InvariantFromDensity { .. } => {}
            EnsembleKind::Elliptic { rho, radius } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(CwlError::InvalidSpec(format!(
                        "elliptic correlation must lie in [0, 1], got {rho}"
                    )));
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(CwlError::InvalidSpec(format!(
                        "elliptic radius must be positive, got {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Right edge of the limiting spectrum on the real axis.
    pub fn upper_edge(&self) -> f64 {
        match self {
            EnsembleKind::GoeShiftedScaled { center, radius } => center + radius,
            EnsembleKind::InvariantFromDensity { spec, .. } => spec.nu_plus,
            EnsembleKind::Elliptic { rho, radius } => 0.5 * (1.0 + rho) * radius,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, EnsembleKind::Elliptic { rho, .. } if *rho < 1.0)
    }

    /// Limiting spectral density, for symmetric ensembles.
    pub fn spectral_model(&self) -> Option<SpectralModel> {
        match self {
            EnsembleKind::GoeShiftedScaled { center, radius } => {
                SpectralModel::semicircle(*center, *radius).ok()
            }
            EnsembleKind::InvariantFromDensity { spec, .. } => Some(spec.clone()),
            EnsembleKind::Elliptic { rho, radius } if *rho == 1.0 => {
                SpectralModel::semicircle(0.0, *radius).ok()
            }
            EnsembleKind::Elliptic { .. } => None,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<DMatrix<f64>> {
        match self {
            EnsembleKind::GoeShiftedScaled { center, radius } => {
                sample_goe(n, *center, *radius, seed)
            }
            EnsembleKind::InvariantFromDensity { spec, placement } => {
                sample_invariant_with(spec, n, seed, *placement)
            }
            EnsembleKind::Elliptic { rho, radius } => sample_elliptic(n, *rho, *radius, seed),
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleKind::GoeShiftedScaled { center, radius } => write!(f, "goe:{center}:{radius}"),
            EnsembleKind::InvariantFromDensity { spec, placement } => match placement {
                Placement::Quantile => write!(f, "invariant:{spec}"),
                Placement::Iid => write!(f, "invariant-iid:{spec}"),
            },
            EnsembleKind::Elliptic { rho, radius } => write!(f, "elliptic:{rho}:{radius}"),
        }
    }
}

/// Parses `goe:<center>:<radius>`, `invariant:<spectral spec>`,
/// `invariant-iid:<spectral spec>` or `elliptic:<rho>:<radius>`.
impl FromStr for EnsembleKind {
    type Err = CwlError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |x: &str| -> Result<f64> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CwlError::InvalidSpec(format!("cannot parse number '{x}' in '{s}'")))
        };
        let kind = if let Some(rest) = s.strip_prefix("invariant-iid:") {
            EnsembleKind::InvariantFromDensity {
                spec: rest.parse()?,
                placement: Placement::Iid,
            }
        } else if let Some(rest) = s.strip_prefix("invariant:") {
            EnsembleKind::InvariantFromDensity {
                spec: rest.parse()?,
                placement: Placement::Quantile,
            }
        } else {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                ["goe", c, r] => EnsembleKind::GoeShiftedScaled {
                    center: num(c)?,
                    radius: num(r)?,
                },
                ["elliptic", rho, r] => EnsembleKind::Elliptic {
                    rho: num(rho)?,
                    radius: num(r)?,
                },
                _ => {
                    return Err(CwlError::InvalidSpec(format!(
                        "unknown ensemble '{s}' (expected goe:c:r, invariant:<spec>, invariant-iid:<spec> or elliptic:rho:r)"
                    )))
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Recipe for one N×N random matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub dimension: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, dimension: usize, seed: u64) -> Result<Self> {
        kind.validate()?;
        check_dimension(dimension)?;
        Ok(Self {
            kind,
            dimension,
            seed,
        })
    }

    pub fn sample(&self) -> Result<DMatrix<f64>> {
        self.kind.sample(self.dimension, self.seed)
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        return Err(CwlError::InvalidSpec(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    Ok(())
}

/// Symmetric Gaussian matrix with off-diagonal variance `(radius/2)²/N`,
/// diagonal variance twice that, shifted by `center·I`.
pub fn sample_goe(n: usize, center: f64, radius: f64, seed: u64) -> Result<DMatrix<f64>> {
    check_dimension(n)?;
    EnsembleKind::GoeShiftedScaled { center, radius }.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(goe_with(n, center, radius, &mut rng))
}

fn goe_with<R: Rng + ?Sized>(n: usize, center: f64, radius: f64, rng: &mut R) -> DMatrix<f64> {
    let sigma = radius / (2.0 * (n as f64).sqrt());
    let sd_diag = sigma * 2f64.sqrt();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = center + sd_diag * std_normal(rng);
        for j in i + 1..n {
            let v = sigma * std_normal(rng);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Tridiagonal matrix with the same eigenvalue law as [`sample_goe`]:
/// the GOE is orthogonally similar, by a rotation fixing `e₁`, to a
/// tridiagonal matrix with Gaussian diagonal and chi-distributed
/// off-diagonal entries.
pub fn goe_tridiagonal<R: Rng + ?Sized>(
    n: usize,
    center: f64,
    radius: f64,
    rng: &mut R,
) -> SymTridiagonal {
    let sigma = radius / (2.0 * (n as f64).sqrt());
    let sd_diag = sigma * 2f64.sqrt();
    let diag = (0..n).map(|_| center + sd_diag * std_normal(rng)).collect();
    let off = (0..n.saturating_sub(1))
        .map(|i| sigma * chi(rng, n - 1 - i))
        .collect();
    SymTridiagonal::new(diag, off)
}

/// Haar orthogonal matrix: QR of a Gaussian matrix with the columns of Q
/// multiplied by the signs of R's diagonal.
pub fn sample_haar_orthogonal(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n < 1 {
        return Err(CwlError::InvalidSpec("dimension must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok(haar_with(n, &mut rng))
}

pub(crate) fn haar_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| std_normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// ν with CDF(ν) = u, by bisection to absolute tolerance 1e-10.
pub fn inverse_cdf(spec: &SpectralModel, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(CwlError::Domain(format!("probability {u} outside [0, 1]")));
    }
    if let Family::Atomic { value } = spec.family {
        return Ok(value);
    }
    let (mut lo, mut hi) = (spec.nu_minus, spec.nu_plus);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if spec.cdf(mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `CDF⁻¹((i − ½)/N)` for i = 1..N, ascending.
pub fn quantile_eigenvalues(spec: &SpectralModel, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|i| inverse_cdf(spec, (i as f64 + 0.5) / n as f64))
        .collect()
}

pub fn eigenvalues_with<R: Rng + ?Sized>(
    spec: &SpectralModel,
    n: usize,
    placement: Placement,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match placement {
        Placement::Quantile => quantile_eigenvalues(spec, n),
        Placement::Iid => {
            let mut v = (0..n)
                .map(|_| inverse_cdf(spec, rng.random::<f64>()))
                .collect::<Result<Vec<f64>>>()?;
            v.sort_by(f64::total_cmp);
            Ok(v)
        }
    }
}

/// `Q diag(ν) Qᵀ` with Haar `Q` and quantile-placed eigenvalues.
pub fn sample_invariant(spec: &SpectralModel, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    sample_invariant_with(spec, n, seed, Placement::Quantile)
}

pub fn sample_invariant_with(
    spec: &SpectralModel,
    n: usize,
    seed: u64,
    placement: Placement,
) -> Result<DMatrix<f64>> {
    check_dimension(n)?;
    if let Family::Atomic { value } = spec.family {
        return Ok(DMatrix::identity(n, n) * value);
    }
    let mut rng = rng_from_seed(seed);
    let nu = eigenvalues_with(spec, n, placement, &mut rng)?;
    let q = haar_with(n, &mut rng);
    let mut qd = q.clone();
    for (j, v) in nu.iter().enumerate() {
        qd.column_mut(j).scale_mut(*v);
    }
    let m = qd * q.transpose();
    Ok((&m + m.transpose()) * 0.5)
}

/// `√((1+ϱ)/2) H + √((1−ϱ)/2) W` with `H` a GOE matrix of the given radius
/// and `W` antisymmetric with entry variance `(radius/2)²/N`; transposed
/// entries then have correlation ϱ.
pub fn sample_elliptic(n: usize, rho: f64, radius: f64, seed: u64) -> Result<DMatrix<f64>> {
    check_dimension(n)?;
    EnsembleKind::Elliptic { rho, radius }.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(elliptic_with(n, rho, radius, &mut rng))
}

fn elliptic_with(n: usize, rho: f64, radius: f64, rng: &mut CwlRng) -> DMatrix<f64> {
    let a = ((1.0 + rho) / 2.0).sqrt();
    let b = ((1.0 - rho) / 2.0).sqrt();
    let h = goe_with(n, 0.0, radius, rng);
    if b == 0.0 {
        return h;
    }
    let sigma = radius / (2.0 * (n as f64).sqrt());
    let mut m = h * a;
    for i in 0..n {
        for j in i + 1..n {
            let w = sigma * std_normal(rng);
            m[(i, j)] += b * w;
            m[(j, i)] -= b * w;
        }
    }
    m
}

/// Sample correlation of `(M_ij, M_ji)` over all off-diagonal pairs.
pub fn transpose_correlation(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (m[(i, j)], m[(j, i)]);
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
    }
    sxy / (sxx * syy).sqrt()
}

const MAGIC: &[u8; 4] = b"CWLM";
const FORMAT_VERSION: u32 = 1;

/// Row-major little-endian f64 dump behind a 16-byte header
/// (`CWLM`, N, format version, reserved).
pub fn write_matrix_binary(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(CwlError::InvalidSpec(
            "only square matrices can be dumped".into(),
        ));
    }
    let n = m.nrows();
    let mut buf = Vec::with_capacity(16 + 8 * n * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix_binary(path: &Path) -> Result<DMatrix<f64>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 16 || &buf[..4] != MAGIC {
        return Err(CwlError::InvalidSpec(format!(
            "{} is not a matrix dump",
            path.display()
        )));
    }
    let word = |k: usize| u32::from_le_bytes(buf[k..k + 4].try_into().unwrap());
    let n = word(4) as usize;
    if word(8) != FORMAT_VERSION {
        return Err(CwlError::InvalidSpec(format!(
            "unsupported dump version {}",
            word(8)
        )));
    }
    if buf.len() != 16 + 8 * n * n {
        return Err(CwlError::InvalidSpec(format!(
            "truncated matrix dump {}",
            path.display()
        )));
    }
    Ok(DMatrix::from_row_iterator(
        n,
        n,
        buf[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
    ))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goe_is_exactly_symmetric_and_reproducible() {
        let a = sample_goe(64, 0.0, 2.0, 1).unwrap();
        assert_eq!(a, a.transpose());
        assert_eq!(a, sample_goe(64, 0.0, 2.0, 1).unwrap());
        assert_ne!(a, sample_goe(64, 0.0, 2.0, 2).unwrap());
        assert!(sample_goe(1, 0.0, 2.0, 1).is_err());
        assert!(sample_goe(4, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn haar_is_orthogonal() {
        let q = sample_haar_orthogonal(8, 7).unwrap();
        assert!((q.transpose() * &q - DMatrix::identity(8, 8)).abs().max() < 1e-12);
        let one = sample_haar_orthogonal(1, 3).unwrap();
        assert_eq!(one[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn atomic_invariant_is_scaled_identity() {
        let spec = SpectralModel::atomic(0.7).unwrap();
        assert_eq!(
            sample_invariant(&spec, 16, 4).unwrap(),
            DMatrix::identity(16, 16) * 0.7
        );
    }

    #[test]
    fn quantile_placement_moments() {
        let spec = SpectralModel::symmetric_beta(3.0).unwrap();
        let m = sample_invariant(&spec, 512, 9).unwrap();
        assert!((&m - m.transpose()).abs().max() < 1e-12);
        let n = 512.0;
        assert!((m.trace() / n - 0.5).abs() < 1e-3);
        assert!(((&m * &m).trace() / n - 5.0 / 16.0).abs() < 1e-3);
    }

    #[test]
    fn inverse_cdf_symmetric_points() {
        let uni = SpectralModel::symmetric_beta(2.0).unwrap();
        assert!((inverse_cdf(&uni, 0.5).unwrap() - 0.5).abs() < 1e-10);
        let sc = SpectralModel::semicircle(0.0, 2.0).unwrap();
        assert!(inverse_cdf(&sc, 0.5).unwrap().abs() < 1e-10);
        assert!(inverse_cdf(&sc, 1.5).is_err());
    }

    #[test]
    fn elliptic_endpoints() {
        let m = sample_elliptic(32, 1.0, 2.0, 5).unwrap();
        assert_eq!(m, m.transpose());
        assert_eq!(m, sample_goe(32, 0.0, 2.0, 5).unwrap());
        assert!(sample_elliptic(8, 1.5, 2.0, 1).is_err());
    }

    #[test]
    fn ensemble_strings_round_trip() {
        for s in [
            "goe:0:2",
            "elliptic:0.5:2",
            "invariant:beta:3",
            "invariant-iid:semicircle:0:1",
        ] {
            let k: EnsembleKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("elliptic:2:1".parse::<EnsembleKind>().is_err());
    }

    #[test]
    fn binary_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = sample_goe(5, 1.0, 2.0, 3).unwrap();
        write_matrix_binary(&p, &m).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"CWLM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 5);
        assert_eq!(bytes.len(), 16 + 8 * 25);
        assert_eq!(read_matrix_binary(&p).unwrap(), m);
    }
}
