//! Cone systems: per-cone linear operators, the coordinate frames they are
//! stored in, and the probes that read the sign components `v₁ … v_p`.
//!
//! Dense systems keep every matrix in the original coordinates. Sampled
//! pairs of orthogonally invariant matrices are instead stored in their own
//! eigen- or tridiagonal frames, `A = U_A T_A U_Aᵀ`, with the state carried
//! in the frame of the active cone and moved across by `O = U_Bᵀ U_A` at
//! switches. When `U` comes from tridiagonalization it fixes `e₁`, so
//! the probe is `e₁` itself; when it is an eigenbasis the probe is the
//! image of `e₁`. The joint law of (operators, transfer, probes) is the same
//! as for the dense pair.

use nalgebra::{DMatrix, DVectorView, DVectorViewMut};
use rand::Rng;

use crate::ensembles::{eigenvalues_with, goe_tridiagonal, EnsembleKind};
use crate::error::{CwlError, Result};
use crate::linalg::{norm, std_normal, HouseholderOrthogonal, SymTridiagonal};

#[derive(Debug, Clone)]
pub enum Operator {
    Dense(DMatrix<f64>),
    Tridiagonal(SymTridiagonal),
    Diagonal(Vec<f64>),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Tridiagonal(t) => t.dim(),
            Operator::Diagonal(d) => d.len(),
        }
    }

    /// `out = Op x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Operator::Dense(m) => {
                let n = m.nrows();
                let xv = DVectorView::from_slice(x, n);
                let mut ov = DVectorViewMut::from_slice(out, n);
                ov.gemv(1.0, m, &xv, 0.0);
            }
            Operator::Tridiagonal(t) => t.mul_vec(x, out),
            Operator::Diagonal(d) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o = xi * di;
                }
            }
        }
    }

    /// Largest eigenvalue, for symmetric operators.
    pub fn max_eigenvalue(&self) -> Option<f64> {
        match self {
            Operator::Dense(m) => {
                if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
                    return None;
                }
                Some(crate::linalg::max_eigenvalue(m))
            }
            Operator::Tridiagonal(t) => Some(t.max_eigenvalue()),
            Operator::Diagonal(d) => d.iter().cloned().reduce(f64::max),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Probe {
    Unit(usize),
    Vector(Vec<f64>),
}

impl Probe {
    pub fn read(&self, x: &[f64]) -> f64 {
        match self {
            Probe::Unit(i) => x[*i],
            Probe::Vector(v) => crate::linalg::dot(v, x),
        }
    }
}

/// `2^p` cones, each with an operator living in one of at most two frames.
#[derive(Debug, Clone)]
pub struct ConeSystem {
    n: usize,
    components: usize,
    operators: Vec<Operator>,
    frame_of_cone: Vec<usize>,
    // probes[frame][l] reads v_{l+1}
    probes: Vec<Vec<Probe>>,
    // x_1 = O x_0
    transfer: Option<HouseholderOrthogonal>,
}

/// How an operator's storage frame relates to the original coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basis {
    /// Original coordinates.
    Identity,
    /// Rotation fixing `e₁` (tridiagonal form).
    FixesFirst,
    /// Haar eigenbasis.
    Haar,
}

impl ConeSystem {
    /// All matrices in the original coordinates; cone `c` has bit `l` set
    /// when `v_{l+1} < 0`.
    pub fn dense(matrices: Vec<DMatrix<f64>>, p: usize) -> Result<Self> {
        if p == 0 || p > 16 {
            return Err(CwlError::InvalidSpec(format!(
                "component count p = {p} out of range"
            )));
        }
        if matrices.len() != 1 << p {
            return Err(CwlError::InvalidSpec(format!(
                "{} matrices given, p = {p} needs {}",
                matrices.len(),
                1usize << p
            )));
        }
        let n = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(CwlError::InvalidSpec(
                "matrices must be square and of equal size".into(),
            ));
        }
        if n < p {
            return Err(CwlError::InvalidSpec(format!("dimension {n} < p = {p}")));
        }
        Ok(Self {
            n,
            components: p,
            frame_of_cone: vec![0; matrices.len()],
            operators: matrices.into_iter().map(Operator::Dense).collect(),
            probes: vec![(0..p).map(Probe::Unit).collect()],
            transfer: None,
        })
    }

    pub fn pair(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        Self::dense(vec![a, b], 1)
    }

    /// Independent draws from the two ensembles in their cheapest exact
    /// representation.
    pub fn sample_pair<R: Rng + ?Sized>(
        ens_a: &EnsembleKind,
        ens_b: &EnsembleKind,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        ens_a.validate()?;
        ens_b.validate()?;
        let (op_a, basis_a) = sample_operator(ens_a, n, rng)?;
        let (op_b, basis_b) = sample_operator(ens_b, n, rng)?;
        use Basis::*;
        let first_fixed = |b: Basis| b != Haar;
        let (transfer, probe_a, probe_b) = if basis_a == Identity && basis_b == Identity {
            (None, Probe::Unit(0), Probe::Unit(0))
        } else if first_fixed(basis_a) && first_fixed(basis_b) {
            let o = HouseholderOrthogonal::sample(n, 1, rng);
            (Some(o), Probe::Unit(0), Probe::Unit(0))
        } else {
            let o = HouseholderOrthogonal::sample(n, 0, rng);
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            match (first_fixed(basis_a), first_fixed(basis_b)) {
                (true, false) => {
                    o.apply(&mut e1);
                    (Some(o), Probe::Unit(0), Probe::Vector(e1))
                }
                (false, true) => {
                    o.apply_transpose(&mut e1);
                    (Some(o), Probe::Vector(e1), Probe::Unit(0))
                }
                _ => {
                    let mut u: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
                    let nu = norm(&u);
                    u.iter_mut().for_each(|v| *v /= nu);
                    let mut ou = u.clone();
                    o.apply(&mut ou);
                    (Some(o), Probe::Vector(u), Probe::Vector(ou))
                }
            }
        };
        let two_frames = transfer.is_some();
        Ok(Self {
            n,
            components: 1,
            operators: vec![op_a, op_b],
            frame_of_cone: vec![0, if two_frames { 1 } else { 0 }],
            probes: if two_frames {
                vec![vec![probe_a], vec![probe_b]]
            } else {
                vec![vec![probe_a]]
            },
            transfer,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn cone_count(&self) -> usize {
        self.operators.len()
    }

    pub fn operator(&self, cone: usize) -> &Operator {
        &self.operators[cone]
    }

    pub fn frame_of(&self, cone: usize) -> usize {
        self.frame_of_cone[cone]
    }

    /// Reads `v_{l+1}` from a state held in `frame`.
    pub fn probe(&self, frame: usize, l: usize, x: &[f64]) -> f64 {
        self.probes[frame][l].read(x)
    }

    /// Moves a state from frame `from` to frame `to` in place.
    pub fn change_frame(&self, from: usize, to: usize, x: &mut [f64]) {
        if from == to {
            return;
        }
        let o = self.transfer.as_ref().expect("two frames need a transfer");
        if from == 0 {
            o.apply(x);
        } else {
            o.apply_transpose(x);
        }
    }
}

fn sample_operator<R: Rng + ?Sized>(
    kind: &EnsembleKind,
    n: usize,
    rng: &mut R,
) -> Result<(Operator, Basis)> {
    if n < 2 {
        return Err(CwlError::InvalidSpec(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    Ok(match kind {
        EnsembleKind::GoeShiftedScaled { center, radius } => (
            Operator::Tridiagonal(goe_tridiagonal(n, *center, *radius, rng)),
            Basis::FixesFirst,
        ),
        EnsembleKind::Elliptic { rho, radius } if *rho == 1.0 => (
            Operator::Tridiagonal(goe_tridiagonal(n, 0.0, *radius, rng)),
            Basis::FixesFirst,
        ),
        EnsembleKind::InvariantFromDensity { spec, placement } => (
            Operator::Diagonal(eigenvalues_with(spec, n, *placement, rng)?),
            Basis::Haar,
        ),
        EnsembleKind::Elliptic { .. } => (
            Operator::Dense(kind.sample(n, rng.random())?),
            Basis::Identity,
        ),
    })
}
