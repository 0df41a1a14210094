use cwl_core::spectral::*;
use cwl_core::CwlError;
use proptest::prelude::*;

fn catalan(k: u64) -> f64 {
    let mut c = 1.0;
    for j in 0..k {
        c = c * 2.0 * (2 * j + 1) as f64 / (j + 2) as f64;
    }
    c
}

/// `E[x^t]` for Beta(a, a) as the product `Π (a+j)/(2a+j)`.
fn beta_moment(a: f64, t: u64) -> f64 {
    (0..t)
        .map(|j| (a + j as f64) / (2.0 * a + j as f64))
        .product()
}

#[test]
fn semicircle_moments_are_catalan_numbers() {
    let s = SpectralModel::semicircle(0.0, 2.0).unwrap();
    for k in 0..12u64 {
        let even = moment_f(&s, 2 * k).unwrap();
        assert!((even / catalan(k) - 1.0).abs() < 1e-10, "k={k}");
        assert_eq!(moment_f(&s, 2 * k + 1).unwrap(), 0.0);
    }
}

#[test]
fn beta_moments_match_product_formula() {
    for d in [1.0, 2.0, 3.0, 4.5] {
        let s = SpectralModel::symmetric_beta(d).unwrap();
        for t in [1u64, 2, 5, 17, 100, 1000] {
            let f = moment_f(&s, t).unwrap();
            assert!(
                (f / beta_moment(d / 2.0, t) - 1.0).abs() < 1e-9,
                "d={d} t={t}"
            );
        }
    }
}

#[test]
fn tabulated_uniform_matches_exact_moments() {
    let s = SpectralModel::tabulated(vec![0.0, 0.5, 1.0], vec![3.0, 3.0, 3.0]).unwrap();
    for t in [0u64, 1, 3, 40] {
        assert!((moment_f(&s, t).unwrap() * (t as f64 + 1.0) - 1.0).abs() < 1e-9);
    }
    assert!(SpectralModel::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
}

#[test]
fn rescaled_correlator_approaches_power_form() {
    let s = SpectralModel::symmetric_beta(3.0).unwrap();
    let exact = correlator(&s, 1000, 3000).unwrap();
    let asym = correlator_asymptotic(s.alpha, 1000.0, 3000.0);
    assert!((exact / asym - 1.0).abs() < 0.01, "{exact} vs {asym}");
}

#[test]
fn symmetric_spectrum_doubles_the_exponent() {
    let s = SpectralModel::semicircle(0.0, 2.0).unwrap();
    let mu = persistence_exponent(&s).unwrap();
    assert!((mu - 2.0 * theta_reference(3.0).unwrap()).abs() < 1e-12);
    let b = SpectralModel::symmetric_beta(4.0).unwrap();
    assert!((persistence_exponent(&b).unwrap() - theta_reference(4.0).unwrap()).abs() < 1e-12);
}

#[test]
fn unsupported_dimensions_are_reported() {
    assert!(matches!(
        theta_reference(6.0),
        Err(CwlError::UnsupportedDimension(_))
    ));
    assert!(matches!(
        theta_reference(2.5),
        Err(CwlError::UnsupportedDimension(_))
    ));
}

#[test]
fn asymptotics_reject_atomic_and_negative_edges() {
    let a = SpectralModel::atomic(0.5).unwrap();
    assert!(matches!(
        moment_asymptotic(&a, 10.0),
        Err(CwlError::Domain(_))
    ));
    let s = SpectralModel::semicircle(-3.0, 1.0).unwrap();
    assert!(matches!(
        moment_asymptotic(&s, 10.0),
        Err(CwlError::Domain(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn correlator_is_symmetric_and_bounded(t in 0u64..300, s in 0u64..300, d in 1.0f64..6.0) {
        let m = MomentFunction::new(SpectralModel::symmetric_beta(d).unwrap());
        let a = m.correlator(t, s).unwrap();
        let b = m.correlator(s, t).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert_eq!(m.correlator(t, t).unwrap(), 1.0);
    }

    #[test]
    fn cdf_is_monotone(c in -1.0f64..1.0, r in 0.1f64..3.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let s = SpectralModel::semicircle(c, r).unwrap();
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let a = s.cdf(c - r + 2.0 * r * lo).unwrap();
        let b = s.cdf(c - r + 2.0 * r * hi).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn beta_moments_are_decreasing(d in 1.0f64..8.0, t in 1u64..2000) {
        let s = SpectralModel::symmetric_beta(d).unwrap();
        let a = log_moment(&s, t).unwrap();
        let b = log_moment(&s, t + 1).unwrap();
        prop_assert!(b.ln_abs < a.ln_abs);
    }
}

#[test]
fn closed_form_cdfs_match_integrated_density() {
    for s in [
        SpectralModel::semicircle(0.3, 1.7).unwrap(),
        SpectralModel::symmetric_beta(3.0).unwrap(),
        SpectralModel::symmetric_beta(5.0).unwrap(),
    ] {
        let (lo, hi) = (s.nu_minus, s.nu_plus);
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let mid = lo + (i as f64 + 0.5) * h;
            acc += s.density(mid) * h;
            if (i + 1) % 20_000 == 0 {
                let x = lo + (i + 1) as f64 * h;
                let c = s.cdf(x).unwrap();
                assert!((c - acc).abs() < 2e-6, "{s} at {x}: {c} vs {acc}");
            }
        }
    }
}
