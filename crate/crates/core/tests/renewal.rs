use cwl_core::renewal::*;
use cwl_core::rng::task_rng;
use cwl_core::CwlError;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Closed form of the Lamperti CDF in the unit variable `x`:
/// with `R = (x/(1−x))^μ`,
/// `F = (atan((R + cos μπ)/sin μπ) − π/2 + μπ) / (μπ)`.
fn lamperti_closed_cdf(mu: f64, x: f64) -> f64 {
    let r = (x / (1.0 - x)).powf(mu);
    let (s, c) = (mu * PI).sin_cos();
    (((r + c) / s).atan() - PI / 2.0 + mu * PI) / (mu * PI)
}

#[test]
fn quadrature_cdf_matches_closed_form() {
    let (r1, r2) = (-2.6, 1.04);
    for mu in [0.15, 0.3, 0.4764, 0.5, 0.8] {
        let p = LampertiParams::new(r1, r2, mu).unwrap();
        for x in [1e-6, 0.01, 0.2, 0.5, 0.77, 0.999] {
            let lam = r1 + x * (r2 - r1);
            let got = lamperti_cdf(&p, lam).unwrap();
            let want = lamperti_closed_cdf(mu, x);
            assert!((got - want).abs() < 1e-9, "mu={mu} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn density_edges_and_support() {
    let p = LampertiParams::new(0.0, 1.0, 0.4).unwrap();
    assert!(matches!(
        lamperti_pdf(&p, 0.0),
        Err(CwlError::EndpointDivergence(_))
    ));
    assert!(matches!(
        lamperti_pdf(&p, 1.0),
        Err(CwlError::EndpointDivergence(_))
    ));
    assert_eq!(lamperti_pdf(&p, 1.5).unwrap(), 0.0);
    assert!(lamperti_pdf(&p, 0.3).unwrap() > 0.0);
    assert!(LampertiParams::new(0.0, 1.0, 1.0).is_err());
    assert!(LampertiParams::new(1.0, 1.0, 0.5).is_err());
}

#[test]
fn mean_interval_is_riemann_zeta_for_unit_minimum() {
    // ζ(3/2)
    let z = 2.612_375_348_685_488;
    assert!((mean_interval(1.5, 1).unwrap() - z).abs() < 1e-9);
    assert!(matches!(
        mean_interval(0.8, 1),
        Err(CwlError::DivergentMean(_))
    ));
}

#[test]
fn interval_sampler_follows_pareto_survival() {
    let n = 200_000;
    let mu = 0.7;
    let mut rng = task_rng(4, 0);
    let draws: Vec<u64> = (0..n)
        .map(|_| sample_interval(&mut rng, mu, 3, u64::MAX))
        .collect();
    for k in [3u64, 4, 10, 100, 1000] {
        let emp = draws.iter().filter(|d| **d >= k).count() as f64 / n as f64;
        let exact = (3.0 / k as f64).powf(mu).min(1.0);
        let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-6);
        assert!((emp - exact).abs() < 4.0 * se, "k={k}: {emp} vs {exact}");
    }
}

#[test]
fn exact_g_mode_converges_to_linear_rates_for_atomic_spectra() {
    let a = "atomic:0.5".parse().unwrap();
    let b = "atomic:2".parse().unwrap();
    let v = self_averaging_value(
        &GMode::ExactSpectral {
            spec_a: a,
            spec_b: b,
        },
        1.5,
        1,
    )
    .unwrap();
    assert!((v - 0.5 * (0.5f64.ln() + 2f64.ln())).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn runs_fill_the_horizon_and_alternate(mu in 0.2f64..1.8, tau_min in 1u64..5, horizon in 50u64..20_000, seed in any::<u64>()) {
        let cfg = RenewalConfig {
            mu1: mu,
            mu2: mu,
            tau_min,
            horizon,
            g_mode: GMode::LinearRates { r1: -1.0, r2: 0.5 },
            seed,
        };
        let run = sample_renewal_run(&cfg).unwrap();
        let total: u64 = run.intervals.iter().map(|i| i.1).sum();
        prop_assert_eq!(total, horizon);
        for w in run.intervals.windows(2) {
            prop_assert!(w[0].0 != w[1].0);
        }
        prop_assert!(run.lambda >= -1.0 - 1e-12 && run.lambda <= 0.5 + 1e-12);
    }

    #[test]
    fn hurwitz_zeta_recurrence(s in 1.1f64..4.0, a in 0.5f64..20.0) {
        let lhs = hurwitz_zeta(s, a) - hurwitz_zeta(s, a + 1.0);
        prop_assert!((lhs - a.powf(-s)).abs() < 1e-10 * a.powf(-s).max(1.0));
    }

    #[test]
    fn lamperti_cdf_is_monotone(mu in 0.05f64..0.95, x in 0.001f64..0.999, dx in 0.0f64..0.5) {
        let p = LampertiParams::new(0.0, 1.0, mu).unwrap();
        let a = lamperti_cdf(&p, x).unwrap();
        let b = lamperti_cdf(&p, (x + dx).min(0.999)).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
    }
}
