//! Trajectory runner for cone systems.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::system::ConeSystem;
use crate::error::{CwlError, Result};
use crate::linalg::{norm, std_normal};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub horizon: usize,
    /// Keep per-step `L(t)`, cones and `√N v̄₁(t)`.
    pub record: bool,
    /// Trapping window; `None` means `max(1000, T/10)`, capped at T.
    pub trap_window: Option<usize>,
    /// Steps between cycle-detection snapshots; 0 disables detection.
    pub cycle_stride: usize,
    pub cycle_grid: f64,
    /// Seed of the coin used to break exact ties `v_l = 0`.
    pub tie_seed: u64,
}

impl EvolveOptions {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            record: false,
            trap_window: None,
            cycle_stride: 16,
            cycle_grid: 1e-6,
            tie_seed: 0,
        }
    }

    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn window(&self) -> usize {
        self.trap_window
            .unwrap_or_else(|| (self.horizon / 10).max(1000))
            .min(self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    /// Steps between two identical snapshots, a multiple of the period.
    pub period: usize,
    pub detected_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub horizon: usize,
    pub dimension: usize,
    /// `L(t) = ln ‖v(t)‖/‖v(0)‖` for t = 0..=T when recorded.
    pub log_norm: Vec<f64>,
    /// Cone applied at step t (t = 0..T−1) when recorded.
    pub cones: Vec<u32>,
    /// `√N v₁(t)/‖v(t)‖` for t = 0..=T when recorded.
    pub vbar1: Vec<f64>,
    /// Completed stays `(cone, length)`; the open stay is kept apart.
    pub residence: Vec<(u32, u64)>,
    pub open_residence: (u32, u64),
    pub final_log_norm: f64,
    /// Unit state at T, in the frame of `final_cone`.
    pub direction: Vec<f64>,
    pub final_cone: u32,
    pub switches: usize,
    pub trapped: bool,
    /// Growth rate over the trapping window.
    pub trailing_rate: f64,
    pub cycle: Option<Cycle>,
}

impl Trajectory {
    pub fn lambda(&self) -> f64 {
        self.final_log_norm / self.horizon as f64
    }

    pub fn last_switch(&self) -> u64 {
        self.horizon as u64 - self.open_residence.1
    }

    /// Signs of `v₁` at steps 0..T−1 (recorded runs only).
    pub fn signs(&self) -> Vec<i8> {
        self.cones
            .iter()
            .map(|c| if c & 1 == 0 { 1 } else { -1 })
            .collect()
    }
}

fn snapshot_key(frame: usize, x: &[f64], grid: f64) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    frame.hash(&mut h);
    for v in x {
        ((v / grid).round() as i64).hash(&mut h);
    }
    h.finish()
}

/// Runs `v(t+1) = M_{c(t)} v(t)` for `opts.horizon` steps; `x0` is given in
/// the frame of cone 0.
pub fn run(system: &ConeSystem, x0: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let n = system.dim();
    let t_max = opts.horizon;
    if x0.len() != n {
        return Err(CwlError::InvalidSpec(format!(
            "initial vector has length {}, expected {n}",
            x0.len()
        )));
    }
    if t_max == 0 {
        return Err(CwlError::InvalidSpec("horizon must be positive".into()));
    }
    let n0 = norm(x0);
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(CwlError::InvalidSpec(
            "initial vector must be nonzero and finite".into(),
        ));
    }
    let mut x: Vec<f64> = x0.iter().map(|v| v / n0).collect();
    let mut y = vec![0.0; n];
    let mut frame = system.frame_of(0);
    let mut coin = rng_from_seed(opts.tie_seed);
    let p = system.components();
    let window = opts.window();
    let sqrt_n = (n as f64).sqrt();

    let mut log_norm = 0.0;
    let mut rec_l = Vec::new();
    let mut rec_c = Vec::new();
    let mut rec_v = Vec::new();
    if opts.record {
        rec_l.reserve(t_max + 1);
        rec_c.reserve(t_max);
        rec_v.reserve(t_max + 1);
        rec_l.push(0.0);
    }
    let mut residence = Vec::new();
    let mut cur_cone = u32::MAX;
    let mut start = 0usize;
    let mut switches = 0usize;
    let mut l_window_start = 0.0;
    let mut seen: HashMap<u64, (usize, usize)> = HashMap::new();
    let mut cycle = None;

    for t in 0..t_max {
        let mut cone = 0u32;
        for l in 0..p {
            let v = system.probe(frame, l, &x);
            if l == 0 && opts.record {
                rec_v.push(sqrt_n * v);
            }
            if v < 0.0 || (v == 0.0 && coin.random::<bool>()) {
                cone |= 1 << l;
            }
        }
        if cone != cur_cone {
            if t > 0 {
                residence.push((cur_cone, (t - start) as u64));
                switches += 1;
            }
            cur_cone = cone;
            start = t;
        }
        let target = system.frame_of(cone as usize);
        system.change_frame(frame, target, &mut x);
        frame = target;
        system.operator(cone as usize).apply(&x, &mut y);
        let ny = norm(&y);
        if !(ny > 0.0 && ny.is_finite()) {
            return Err(CwlError::DegenerateDynamics { step: t });
        }
        log_norm += ny.ln();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        if t + 1 == t_max - window {
            l_window_start = log_norm;
        }
        if opts.record {
            rec_l.push(log_norm);
            rec_c.push(cone);
        }
        if opts.cycle_stride > 0 && cycle.is_none() && (t + 1) % opts.cycle_stride == 0 {
            let key = snapshot_key(frame, &x, opts.cycle_grid);
            match seen.get(&key) {
                Some(&(t0, s0)) if switches > s0 => {
                    cycle = Some(Cycle {
                        period: t + 1 - t0,
                        detected_at: t + 1,
                    })
                }
                Some(_) => {}
                None => {
                    seen.insert(key, (t + 1, switches));
                }
            }
        }
    }
    if opts.record {
        rec_v.push(sqrt_n * system.probe(frame, 0, &x));
    }
    let open = (t_max - start) as u64;
    Ok(Trajectory {
        horizon: t_max,
        dimension: n,
        log_norm: rec_l,
        cones: rec_c,
        vbar1: rec_v,
        residence,
        open_residence: (cur_cone, open),
        final_log_norm: log_norm,
        direction: x,
        final_cone: cur_cone,
        switches,
        trapped: open as usize >= window,
        trailing_rate: (log_norm - l_window_start) / window as f64,
        cycle,
    })
}

/// Two-cone dynamics with explicit matrices and initial vector.
pub fn evolve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v0: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let system = ConeSystem::pair(a.clone(), b.clone())?;
    run(&system, v0, opts)
}

/// `2^p` cones in the original coordinates.
pub fn evolve_multicone(
    matrices: &[DMatrix<f64>],
    p: usize,
    v0: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let system = ConeSystem::dense(matrices.to_vec(), p)?;
    run(&system, v0, opts)
}

/// Gaussian initial state for `system`, in the frame of cone 0.
pub fn gaussian_start<R: Rng + ?Sized>(system: &ConeSystem, rng: &mut R) -> Vec<f64> {
    (0..system.dim()).map(|_| std_normal(rng)).collect()
}
