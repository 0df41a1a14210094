//! One function per subcommand. Each resolves its parameters, runs the
//! experiment through `cwl_core` and writes its outputs into the run
//! directory.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cwl_core::dynamics::{
    elliptic_persistence, ensemble_lyapunov, estimate_persistence_matrix,
    estimate_persistence_multicone, gaussian_start, run, scaling_collapse, ConeSystem,
    EvolveOptions,
};
use cwl_core::ensembles::EnsembleKind;
use cwl_core::estimators::{
    fit_curve_powerlaw, ks_distance, mean_and_stderr, sample_stdev, FitResult,
};
use cwl_core::persistence::PersistenceCurve;
use cwl_core::renewal::{
    lamperti_cdf, lamperti_pdf, sample_renewal_lyapunov, self_averaging_value, stieltjes_grid,
    stieltjes_lhs, stieltjes_rhs, GMode, LampertiParams, RenewalConfig,
};
use cwl_core::rng::{rng_from_seed, stream_seed};
use cwl_core::spectral::{moment_asymptotic, moment_f, persistence_exponent, SpectralModel};
use cwl_core::surrogate::{default_fit_window, estimate_persistence_gp, joint_persistence};
use cwl_core::validation::{run_criteria, Scale, VerifyOptions, MU_SEMICIRCLE};

use crate::config::{layer, load_config, required, resolve_seed, FileConfig};
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

/// Options shared by every experiment.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML configuration file, or the manifest.json of an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides CWL_SEED and the configuration file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: runs/<experiment>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub threads: Option<usize>,
}

/// A resolved experiment ready to write into its run directory.
struct Session<P> {
    params: P,
    merged: Value,
    seed: u64,
    dir: RunDir,
    started: Instant,
}

impl<P> Session<P> {
    fn finish(self) -> CliResult<()> {
        let secs = self.started.elapsed().as_secs_f64();
        println!("wrote {}", self.dir.path.display());
        self.dir
            .finish(&self.merged, self.seed, rayon::current_num_threads(), secs)
    }
}

fn start<P: Serialize + DeserializeOwned>(
    experiment: &str,
    common: &Common,
    flags: &P,
    defaults: Value,
) -> CliResult<Session<P>> {
    let file = match &common.config {
        Some(path) => load_config(path, experiment)?,
        None => FileConfig::default(),
    };
    let (params, merged) = layer(defaults, &file, flags)?;
    let seed = resolve_seed(common.seed, file.seed)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(experiment));
    let dir = RunDir::open(&out, experiment)?;
    Ok(Session {
        params,
        merged,
        seed,
        dir,
        started: Instant::now(),
    })
}

fn ensemble(s: &str) -> CliResult<EnsembleKind> {
    Ok(s.parse::<EnsembleKind>()?)
}

fn spectral(s: &str) -> CliResult<SpectralModel> {
    Ok(s.parse::<SpectralModel>()?)
}

fn window_of(w: &Option<Vec<f64>>, default: (f64, f64)) -> CliResult<(f64, f64)> {
    match w.as_deref() {
        None => Ok(default),
        Some([lo, hi]) if lo < hi => Ok((*lo, *hi)),
        Some(other) => Err(CliError::Validation(format!(
            "window must be two increasing numbers, got {other:?}"
        ))),
    }
}

fn fit_json(fit: &FitResult, predicted: Option<f64>) -> Value {
    json!({
        "slope": fit.exponent,
        "slope_stderr": fit.stderr_exponent,
        "mu": fit.mu(),
        "window": [fit.window.0, fit.window.1],
        "r_squared": fit.r_squared,
        "n_points": fit.n_points,
        "cutoff_rate": fit.cutoff_rate,
        "predicted_mu": predicted,
    })
}

fn write_curves(
    dir: &mut RunDir,
    name: &str,
    curves: &[(&str, String, &PersistenceCurve)],
) -> CliResult<()> {
    let label = curves.first().map(|c| c.0).unwrap_or("N");
    let mut csv = dir.csv(name, &["tau", "q0", "stderr", label])?;
    for (_, key, c) in curves {
        for i in 0..c.len() {
            csv.row(&[&c.tau[i], &c.q0[i], &c.stderr[i], key])?;
        }
    }
    csv.close()
}

fn dim_label(c: &PersistenceCurve) -> String {
    c.meta
        .dimension
        .map(|n| n.to_string())
        .unwrap_or_else(|| "inf".into())
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryArgs {
    /// Ensemble of the matrix acting when v₁ > 0.
    #[arg(long)]
    pub ensemble_a: Option<String>,
    /// Ensemble of the matrix acting when v₁ < 0.
    #[arg(long)]
    pub ensemble_b: Option<String>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
}

pub fn trajectory(common: &Common, flags: &TrajectoryArgs) -> CliResult<()> {
    let mut s = start(
        "trajectory",
        common,
        flags,
        json!({"ensemble_a": "goe:0:2", "ensemble_b": "goe:0:2", "horizon": 10000}),
    )?;
    let p = &s.params;
    let n = required(&p.n, "n")?;
    let horizon = required(&p.horizon, "horizon")?;
    let a = ensemble(&required(&p.ensemble_a, "ensemble_a")?)?;
    let b = ensemble(&required(&p.ensemble_b, "ensemble_b")?)?;
    let mut rng = rng_from_seed(s.seed);
    let system = ConeSystem::sample_pair(&a, &b, n, &mut rng)?;
    let x0 = gaussian_start(&system, &mut rng);
    let traj = run(&system, &x0, &EvolveOptions::new(horizon).recording())?;

    let mut csv = s.dir.csv(
        "trajectory.csv",
        &["t", "sign", "vbar1", "log_norm", "cone"],
    )?;
    for t in 0..=horizon {
        let v = traj.vbar1[t];
        let sign: i8 = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        let cone = if t < horizon {
            traj.cones[t]
        } else {
            traj.final_cone
        };
        csv.row(&[&t, &sign, &v, &traj.log_norm[t], &cone])?;
    }
    csv.close()?;
    s.dir.json(
        "summary.json",
        &json!({
            "lambda": traj.lambda(),
            "switches": traj.switches,
            "last_switch": traj.last_switch(),
            "trapped": traj.trapped,
            "trailing_rate": traj.trailing_rate,
            "final_cone": traj.final_cone,
            "cycle_period": traj.cycle.as_ref().map(|c| c.period),
        }),
    )?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct GpArgs {
    /// Eigenvalue density, e.g. beta:3 or semicircle:0:2.
    #[arg(long)]
    pub spectral: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    /// Fit window in τ as `lo,hi` [default: T/30,T].
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
}

pub fn gp_persistence(common: &Common, flags: &GpArgs) -> CliResult<()> {
    let mut s = start(
        "gp-persistence",
        common,
        flags,
        json!({"horizon": 1000, "n_paths": 200000}),
    )?;
    let p = &s.params;
    let spec = spectral(&required(&p.spectral, "spectral")?)?;
    let horizon = required(&p.horizon, "horizon")?;
    let window = window_of(&p.window, default_fit_window(horizon))?;
    let curve = estimate_persistence_gp(&spec, horizon, required(&p.n_paths, "n_paths")?, s.seed)?;
    let fit = fit_curve_powerlaw(&curve, window)?;
    write_curves(
        &mut s.dir,
        "persistence.csv",
        &[("N", dim_label(&curve), &curve)],
    )?;
    s.dir.json(
        "fit.json",
        &fit_json(&fit, persistence_exponent(&spec).ok()),
    )?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct MatrixPersistenceArgs {
    #[arg(long)]
    pub ensemble_a: Option<String>,
    #[arg(long)]
    pub ensemble_b: Option<String>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_realizations: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Fit window in τ as `lo,hi` [default: T/30,T].
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
}

pub fn matrix_persistence(common: &Common, flags: &MatrixPersistenceArgs) -> CliResult<()> {
    let mut s = start(
        "matrix-persistence",
        common,
        flags,
        json!({"ensemble_a": "goe:0:2", "ensemble_b": "goe:0:2", "n_realizations": 10000, "horizon": 1000}),
    )?;
    let p = &s.params;
    let a = ensemble(&required(&p.ensemble_a, "ensemble_a")?)?;
    let b = ensemble(&required(&p.ensemble_b, "ensemble_b")?)?;
    let n = required(&p.n, "n")?;
    let horizon = required(&p.horizon, "horizon")?;
    let window = window_of(&p.window, default_fit_window(horizon as usize))?;
    let curve = estimate_persistence_matrix(
        &a,
        &b,
        n,
        required(&p.n_realizations, "n_realizations")?,
        horizon,
        s.seed,
    )?;
    let fit = fit_curve_powerlaw(&curve, window)?;
    let predicted = match (a.spectral_model(), a == b) {
        (Some(m), true) => persistence_exponent(&m).ok(),
        _ => None,
    };
    write_curves(
        &mut s.dir,
        "persistence.csv",
        &[("N", n.to_string(), &curve)],
    )?;
    s.dir.json("fit.json", &fit_json(&fit, predicted))?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct LyapunovArgs {
    #[arg(long)]
    pub ensemble_a: Option<String>,
    #[arg(long)]
    pub ensemble_b: Option<String>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_realizations: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Lamperti exponent to compare the untagged normalized exponents with.
    #[arg(long)]
    pub mu: Option<f64>,
}

pub fn lyapunov(common: &Common, flags: &LyapunovArgs) -> CliResult<()> {
    let mut s = start(
        "lyapunov",
        common,
        flags,
        json!({"n_realizations": 1000, "horizon": 10000}),
    )?;
    let p = &s.params;
    let a = ensemble(&required(&p.ensemble_a, "ensemble_a")?)?;
    let b = ensemble(&required(&p.ensemble_b, "ensemble_b")?)?;
    let n = required(&p.n, "n")?;
    let samples = ensemble_lyapunov(
        &a,
        &b,
        n,
        required(&p.n_realizations, "n_realizations")?,
        required(&p.horizon, "horizon")?,
        s.seed,
    )?;
    let mut csv = s.dir.csv(
        "lyapunov.csv",
        &[
            "lambda",
            "normalized",
            "trapped",
            "cycling",
            "trailing_rate",
            "final_cone",
            "switches",
        ],
    )?;
    for i in 0..samples.len() {
        let normalized = samples
            .normalized
            .get(i)
            .map(|v| v.to_string())
            .unwrap_or_default();
        csv.row(&[
            &samples.values[i],
            &normalized,
            &u8::from(samples.trapped[i]),
            &u8::from(samples.cycling[i]),
            &samples.trailing_rates[i],
            &samples.final_cones[i],
            &samples.switches[i],
        ])?;
    }
    csv.close()?;
    let untagged = samples.untagged_normalized();
    let ks = match p.mu {
        Some(mu) if !untagged.is_empty() => {
            let law = LampertiParams::new(0.0, 1.0, mu)?;
            Some(ks_distance(&untagged, |x| {
                lamperti_cdf(&law, x).unwrap_or(f64::NAN)
            })?)
        }
        _ => None,
    };
    let (mean, stderr) = mean_and_stderr(&samples.values);
    s.dir.json(
        "summary.json",
        &json!({
            "realizations": samples.len(),
            "trapped": samples.trapped.iter().filter(|t| **t).count(),
            "cycling": samples.cycling.iter().filter(|c| **c).count(),
            "untagged": untagged.len(),
            "mean_lambda": mean,
            "mean_lambda_stderr": stderr,
            "rates": [samples.meta.rates.0, samples.meta.rates.1],
            "ks_untagged_vs_lamperti": ks,
        }),
    )?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct CollapseArgs {
    /// Ensemble of both matrices.
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Matrix dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dimensions: Option<Vec<usize>>,
    #[arg(long)]
    pub n_realizations: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Exponent used to rescale `Q₀` by `N^{2μ/3}`.
    #[arg(long)]
    pub mu: Option<f64>,
}

pub fn collapse(common: &Common, flags: &CollapseArgs) -> CliResult<()> {
    let mut s = start(
        "collapse",
        common,
        flags,
        json!({
            "ensemble": "goe:0:2",
            "dimensions": [64, 128, 256, 512],
            "n_realizations": 20000,
            "horizon": 1000,
            "mu": MU_SEMICIRCLE,
        }),
    )?;
    let p = &s.params;
    let kind = ensemble(&required(&p.ensemble, "ensemble")?)?;
    let dims = required(&p.dimensions, "dimensions")?;
    let c = scaling_collapse(
        &dims,
        &kind,
        required(&p.n_realizations, "n_realizations")?,
        required(&p.horizon, "horizon")?,
        required(&p.mu, "mu")?,
        s.seed,
    )?;
    let labelled: Vec<(&str, String, &PersistenceCurve)> =
        c.curves.iter().map(|k| ("N", dim_label(k), k)).collect();
    write_curves(&mut s.dir, "persistence.csv", &labelled)?;
    let mut csv = s.dir.csv("rescaled.csv", &["N", "u", "scaled_q0"])?;
    for (n, pts) in c.dimensions.iter().zip(&c.rescaled) {
        for (u, q) in pts {
            csv.row(&[n, u, q])?;
        }
    }
    csv.close()?;
    s.dir.json(
        "collapse.json",
        &json!({
            "mu": c.mu,
            "spread": c.spread,
            "central_decade": [c.central_decade.0, c.central_decade.1],
            "plateau": c.plateau,
        }),
    )?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct RenewalArgs {
    /// Tail exponent of intervals spent in cone 1.
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Tail exponent of intervals spent in cone 2.
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Growth rate in cone 1 (linear mode).
    #[arg(long, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    /// Growth rate in cone 2 (linear mode).
    #[arg(long, allow_hyphen_values = true)]
    pub r2: Option<f64>,
    /// Density of cone 1; with `spectral-b` selects exact spectral growth.
    #[arg(long)]
    pub spectral_a: Option<String>,
    #[arg(long)]
    pub spectral_b: Option<String>,
}

fn g_mode(
    r1: Option<f64>,
    r2: Option<f64>,
    a: &Option<String>,
    b: &Option<String>,
) -> CliResult<GMode> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(GMode::ExactSpectral {
            spec_a: spectral(a)?,
            spec_b: spectral(b)?,
        }),
        (None, None) => Ok(GMode::LinearRates {
            r1: required(&r1, "r1")?,
            r2: required(&r2, "r2")?,
        }),
        _ => Err(CliError::Usage(
            "spectral_a and spectral_b must be given together".into(),
        )),
    }
}

pub fn renewal(common: &Common, flags: &RenewalArgs) -> CliResult<()> {
    let mut s = start(
        "renewal",
        common,
        flags,
        json!({"tau_min": 1, "horizon": 100000, "n_samples": 10000, "r1": 0.0, "r2": 1.0}),
    )?;
    let p = &s.params;
    let cfg = RenewalConfig {
        mu1: required(&p.mu1, "mu1")?,
        mu2: required(&p.mu2, "mu2")?,
        tau_min: required(&p.tau_min, "tau_min")?,
        horizon: required(&p.horizon, "horizon")?,
        g_mode: g_mode(p.r1, p.r2, &p.spectral_a, &p.spectral_b)?,
        seed: s.seed,
    };
    let lambdas = sample_renewal_lyapunov(&cfg, required(&p.n_samples, "n_samples")?)?;
    let mut csv = s.dir.csv("lambda.csv", &["lambda"])?;
    for l in &lambdas {
        csv.row(&[l])?;
    }
    csv.close()?;
    let ks = match &cfg.g_mode {
        GMode::LinearRates { r1, r2 } if cfg.mu1 == cfg.mu2 && cfg.mu1 < 1.0 && r1 != r2 => {
            let law = LampertiParams::new(*r1, *r2, cfg.mu1)?;
            Some(ks_distance(&lambdas, |x| {
                lamperti_cdf(&law, x).unwrap_or(f64::NAN)
            })?)
        }
        _ => None,
    };
    let (mean, stderr) = mean_and_stderr(&lambdas);
    s.dir.json(
        "summary.json",
        &json!({
            "mean": mean,
            "mean_stderr": stderr,
            "stdev": sample_stdev(&lambdas),
            "ks_vs_lamperti": ks,
        }),
    )?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct LampertiArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: Option<f64>,
    /// Exponent in (0, 1).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct StieltjesArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: Option<f64>,
    /// Exponent in (0, 1).
    #[arg(long)]
    pub mu: Option<f64>,
}

fn lamperti_params(r1: Option<f64>, r2: Option<f64>, mu: Option<f64>) -> CliResult<LampertiParams> {
    Ok(LampertiParams::new(
        required(&r1, "r1")?,
        required(&r2, "r2")?,
        required(&mu, "mu")?,
    )?)
}

pub fn lamperti_pdf_cmd(common: &Common, flags: &LampertiArgs) -> CliResult<()> {
    let mut s = start(
        "lamperti-pdf",
        common,
        flags,
        json!({"r1": 0.0, "r2": 1.0, "points": 1001}),
    )?;
    let law = lamperti_params(s.params.r1, s.params.r2, s.params.mu)?;
    let points = required(&s.params.points, "points")?.max(2);
    let eps = 1e-9 * law.width();
    let (lo, hi) = (law.lo() + eps, law.hi() - eps);
    let mut csv = s.dir.csv("lamperti.csv", &["lambda", "pdf", "cdf"])?;
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        csv.row(&[&x, &lamperti_pdf(&law, x)?, &lamperti_cdf(&law, x)?])?;
    }
    csv.close()?;
    s.finish()
}

pub fn stieltjes_check(common: &Common, flags: &StieltjesArgs) -> CliResult<()> {
    let mut s = start(
        "stieltjes-check",
        common,
        flags,
        json!({"r1": 0.0, "r2": 1.0}),
    )?;
    let law = lamperti_params(s.params.r1, s.params.r2, s.params.mu)?;
    let mut worst: f64 = 0.0;
    let mut csv = s.dir.csv(
        "stieltjes.csv",
        &["y", "quadrature", "closed_form", "relative_error"],
    )?;
    for y in stieltjes_grid(&law) {
        let lhs = stieltjes_lhs(&law, y)?;
        let rhs = stieltjes_rhs(&law, y)?;
        let rel = ((lhs - rhs) / rhs).abs();
        worst = worst.max(rel);
        csv.row(&[&y, &lhs, &rhs, &rel])?;
    }
    csv.close()?;
    s.dir
        .json("summary.json", &json!({"max_relative_error": worst}))?;
    println!("max relative error {worst:.3e}");
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct SelfAveragingArgs {
    /// Common tail exponent, above 1.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<u64>,
    /// Horizons, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<u64>>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub spectral_a: Option<String>,
    #[arg(long)]
    pub spectral_b: Option<String>,
}

pub fn self_averaging(common: &Common, flags: &SelfAveragingArgs) -> CliResult<()> {
    let mut s = start(
        "self-averaging",
        common,
        flags,
        json!({
            "tau_min": 1,
            "horizons": [1000, 10000, 100000],
            "n_samples": 1000,
            "spectral_a": "beta:3",
            "spectral_b": "beta:5",
        }),
    )?;
    let p = &s.params;
    let mu = required(&p.mu, "mu")?;
    let tau_min = required(&p.tau_min, "tau_min")?;
    let mode = g_mode(p.r1, p.r2, &p.spectral_a, &p.spectral_b)?;
    let predicted = self_averaging_value(&mode, mu, tau_min)?;
    let n_samples = required(&p.n_samples, "n_samples")?;
    let mut csv = s.dir.csv(
        "self_averaging.csv",
        &["horizon", "mean", "stderr", "stdev", "predicted"],
    )?;
    for &horizon in &required(&p.horizons, "horizons")? {
        let cfg = RenewalConfig {
            mu1: mu,
            mu2: mu,
            tau_min,
            horizon,
            g_mode: mode.clone(),
            seed: stream_seed(s.seed, &format!("T={horizon}")),
        };
        let l = sample_renewal_lyapunov(&cfg, n_samples)?;
        let (mean, stderr) = mean_and_stderr(&l);
        csv.row(&[&horizon, &mean, &stderr, &sample_stdev(&l), &predicted])?;
    }
    csv.close()?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct EllipticArgs {
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Correlations ϱ between A and Aᵀ, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rhos: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub n_realizations: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Fit window in τ as `lo,hi` [default: 1,N^(2/3)].
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
}

pub fn elliptic(common: &Common, flags: &EllipticArgs) -> CliResult<()> {
    let mut s = start(
        "elliptic",
        common,
        flags,
        json!({"n": 512, "rhos": [0.0, 0.5, 1.0], "radius": 2.0, "n_realizations": 100000, "horizon": 1000}),
    )?;
    let p = &s.params;
    let n = required(&p.n, "n")?;
    let window = window_of(&p.window, (1.0, (n as f64).powf(2.0 / 3.0)))?;
    let points = elliptic_persistence(
        n,
        &required(&p.rhos, "rhos")?,
        required(&p.radius, "radius")?,
        required(&p.n_realizations, "n_realizations")?,
        required(&p.horizon, "horizon")?,
        window,
        s.seed,
    )?;
    let labelled: Vec<(&str, String, &PersistenceCurve)> = points
        .iter()
        .map(|pt| ("rho", pt.rho.to_string(), &pt.curve))
        .collect();
    write_curves(&mut s.dir, "persistence.csv", &labelled)?;
    let fits: Vec<Value> = points
        .iter()
        .map(|pt| {
            let mut f = fit_json(&pt.fit, None);
            f["rho"] = json!(pt.rho);
            f
        })
        .collect();
    s.dir.json("fits.json", &Value::Array(fits))?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct MulticoneArgs {
    /// Ensemble of every cone's matrix.
    #[arg(long)]
    pub ensemble: Option<String>,
    /// Number of sign-tracked components; there are 2^p cones.
    #[arg(long)]
    pub p: Option<usize>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_realizations: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Also estimate the joint persistence of p independent surrogate paths
    /// with this density.
    #[arg(long)]
    pub gp_spectral: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
}

pub fn multicone(common: &Common, flags: &MulticoneArgs) -> CliResult<()> {
    let mut s = start(
        "multicone",
        common,
        flags,
        json!({"ensemble": "goe:0:2", "p": 2, "n_realizations": 10000, "horizon": 1000}),
    )?;
    let p = &s.params;
    let kind = ensemble(&required(&p.ensemble, "ensemble")?)?;
    let comps = required(&p.p, "p")?;
    let n = required(&p.n, "n")?;
    let horizon = required(&p.horizon, "horizon")?;
    let n_real = required(&p.n_realizations, "n_realizations")?;
    let window = window_of(&p.window, default_fit_window(horizon as usize))?;
    let curve = estimate_persistence_multicone(&kind, comps, n, n_real, horizon, s.seed)?;
    let fit = fit_curve_powerlaw(&curve, window)?;
    let mut fits = json!({"matrix": fit_json(&fit, None)});
    let mut curves = vec![("source", "matrix".to_string(), &curve)];
    let gp;
    if let Some(spec) = &p.gp_spectral {
        gp = joint_persistence(
            &spectral(spec)?,
            comps,
            horizon as usize,
            n_real,
            stream_seed(s.seed, "gp"),
        )?;
        fits["gp_joint"] = fit_json(&fit_curve_powerlaw(&gp, window)?, None);
        curves.push(("source", "gp_joint".to_string(), &gp));
    }
    write_curves(&mut s.dir, "persistence.csv", &curves)?;
    s.dir.json("fit.json", &fits)?;
    s.finish()
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct SpectralArgs {
    /// Eigenvalue density, e.g. beta:3 or semicircle:0:2.
    #[arg(long)]
    pub spectral: Option<String>,
    /// Largest moment order.
    #[arg(long)]
    pub t_max: Option<u64>,
}

pub fn spectral_cmd(common: &Common, flags: &SpectralArgs) -> CliResult<()> {
    let mut s = start("spectral", common, flags, json!({"t_max": 1000}))?;
    let spec = spectral(&required(&s.params.spectral, "spectral")?)?;
    let t_max = required(&s.params.t_max, "t_max")?;
    let mut csv = s
        .dir
        .csv("spectral.csv", &["t", "f", "asymptotic", "ratio"])?;
    for t in cwl_core::persistence::log_tau_grid(t_max, 20)
        .into_iter()
        .filter(|t| *t >= 1)
    {
        let f = moment_f(&spec, t)?;
        let (asym, ratio) = match moment_asymptotic(&spec, t as f64) {
            Ok(a) => (a.to_string(), (f / a).to_string()),
            Err(_) => (String::new(), String::new()),
        };
        csv.row(&[&t, &f, &asym, &ratio])?;
    }
    csv.close()?;
    s.finish()
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// `fast` for reduced sample counts, `full` for the stated tolerances.
    #[arg(value_parser = ["fast", "full"], default_value = "fast")]
    pub suite: String,
    /// Criterion numbers to run, comma separated [default: all].
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replaces the exponent used to rescale the finite-size collapse.
    #[arg(long)]
    pub collapse_mu: Option<f64>,
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let scale = if args.suite == "full" {
        Scale::Full
    } else {
        Scale::Fast
    };
    let mut opts = VerifyOptions::new(scale);
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    opts.collapse_mu = args.collapse_mu;
    let mut failed = Vec::new();
    let reports = run_criteria(&args.only, &opts, |r| {
        println!("{r}");
        if !r.passed {
            failed.push(r.id);
        }
    });
    if reports.is_empty() {
        return Err(CliError::Usage(format!(
            "no criteria match {:?}",
            args.only
        )));
    }
    println!(
        "{} of {} criteria passed",
        reports.len() - failed.len(),
        reports.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("criteria failed: {failed:?}")))
    }
}
