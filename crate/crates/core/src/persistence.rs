//! Persistence curves `Q₀(τ)` and the survival counter that builds them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Gp,
    MatrixDynamics,
    Renewal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub source: Source,
    pub description: String,
    /// Matrix dimension; `None` for the N→∞ surrogate.
    pub dimension: Option<usize>,
    pub n_samples: usize,
}

/// Estimated probability `Q₀(τ)` that the sign of the first component has
/// not changed during steps `1..=τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceCurve {
    pub tau: Vec<u64>,
    pub q0: Vec<f64>,
    pub stderr: Vec<f64>,
    pub meta: CurveMeta,
}

impl PersistenceCurve {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Value at `tau`, if it is on the grid.
    pub fn at(&self, tau: u64) -> Option<(f64, f64)> {
        self.tau
            .binary_search(&tau)
            .ok()
            .map(|i| (self.q0[i], self.stderr[i]))
    }

    /// `(τ, q0, stderr)` restricted to `lo ≤ τ ≤ hi` and `q0 > 0`.
    pub fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut e = Vec::new();
        for i in 0..self.len() {
            let t = self.tau[i] as f64;
            if t >= lo && t <= hi && self.q0[i] > 0.0 {
                x.push(t);
                y.push(self.q0[i]);
                e.push(self.stderr[i]);
            }
        }
        (x, y, e)
    }
}

/// Integer grid `0, 1, 2, …` continuing with about `per_decade`
/// logarithmically spaced points up to and including `t_max`.
pub fn log_tau_grid(t_max: u64, per_decade: usize) -> Vec<u64> {
    let mut grid = vec![0u64];
    if t_max == 0 {
        return grid;
    }
    let per_decade = per_decade.max(1) as f64;
    let mut k = 0.0;
    loop {
        let t = 10f64.powf(k / per_decade).round() as u64;
        if t > t_max {
            break;
        }
        if *grid.last().unwrap() != t {
            grid.push(t);
        }
        k += 1.0;
    }
    if *grid.last().unwrap() != t_max {
        grid.push(t_max);
    }
    grid
}

/// Histogram of first exit times up to a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCounter {
    horizon: u64,
    // exits[τ] counts samples whose first sign change happened at step τ
    exits: Vec<u64>,
    n: u64,
}

impl SurvivalCounter {
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            exits: vec![0; horizon as usize + 1],
            n: 0,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn samples(&self) -> u64 {
        self.n
    }

    /// Records one sample; `None` means no sign change up to the horizon.
    pub fn record(&mut self, exit: Option<u64>) {
        self.n += 1;
        if let Some(t) = exit {
            if t <= self.horizon {
                self.exits[t as usize] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &SurvivalCounter) {
        assert_eq!(self.horizon, other.horizon);
        self.n += other.n;
        for (a, b) in self.exits.iter_mut().zip(&other.exits) {
            *a += b;
        }
    }

    /// Survival fraction for every τ in `0..=horizon`.
    pub fn survival(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        let mut alive = self.n;
        let mut out = Vec::with_capacity(self.exits.len());
        for (t, e) in self.exits.iter().enumerate() {
            if t > 0 {
                alive -= e;
            }
            out.push(alive as f64 / n);
        }
        out
    }

    pub fn curve(&self, grid: &[u64], meta: CurveMeta) -> PersistenceCurve {
        let s = self.survival();
        let n = self.n.max(1) as f64;
        let mut tau = Vec::new();
        let mut q0 = Vec::new();
        let mut stderr = Vec::new();
        for &t in grid.iter().filter(|t| **t <= self.horizon) {
            let p = s[t as usize];
            tau.push(t);
            q0.push(p);
            stderr.push((p * (1.0 - p) / n).sqrt());
        }
        PersistenceCurve {
            tau,
            q0,
            stderr,
            meta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CurveMeta {
        CurveMeta {
            source: Source::Gp,
            description: String::new(),
            dimension: None,
            n_samples: 0,
        }
    }

    #[test]
    fn grid_is_increasing_and_bounded() {
        let g = log_tau_grid(1000, 10);
        assert_eq!(g[0], 0);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.contains(&1) && g.contains(&10) && g.contains(&100));
    }

    #[test]
    fn survival_counts() {
        let mut c = SurvivalCounter::new(5);
        for e in [Some(1), Some(3), None, Some(3)] {
            c.record(e);
        }
        assert_eq!(c.survival(), vec![1.0, 0.75, 0.75, 0.25, 0.25, 0.25]);
        let curve = c.curve(&[0, 2, 5], meta());
        assert_eq!(curve.q0, vec![1.0, 0.75, 0.25]);
        assert_eq!(curve.stderr[0], 0.0);
    }
}
