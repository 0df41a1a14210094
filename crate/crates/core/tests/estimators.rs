use cwl_core::estimators::*;
use cwl_core::rng::task_rng;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn edge_exponent_of_power_density() {
    // density (a+1) x^a on [0, 1] from x = U^{1/(a+1)}
    let a = -0.5;
    let mut rng = task_rng(3, 0);
    let s: Vec<f64> = (0..200_000)
        .map(|_| rng.random::<f64>().powf(1.0 / (a + 1.0)))
        .collect();
    let fit = tail_exponent_at_edge(&s, 0.0, Side::Above, (1e-5, 3e-2)).unwrap();
    assert!((fit.exponent - a).abs() < 0.03, "{}", fit.exponent);
    let mirrored: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
    let fit = tail_exponent_at_edge(&mirrored, 1.0, Side::Below, (1e-5, 3e-2)).unwrap();
    assert!((fit.exponent - a).abs() < 0.03, "{}", fit.exponent);
}

#[test]
fn ks_of_uniform_quantiles_is_one_over_n() {
    let n = 1000;
    let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let d = ks_distance(&s, |x| x).unwrap();
    assert!((d - 0.5 / n as f64).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_power_laws_are_recovered(slope in -3.0f64..0.0, c in -5.0f64..5.0) {
        let x: Vec<f64> = (1..=60).map(|i| 1.2f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| (c + slope * v.ln()).exp()).collect();
        let f = fit_powerlaw(&x, &y, None, (1.0, 1e6)).unwrap();
        prop_assert!((f.exponent - slope).abs() < 1e-9);
        prop_assert!((f.prefactor_log - c).abs() < 1e-8);
    }

    #[test]
    fn truncated_power_laws_are_recovered(slope in -2.0f64..0.0, rate in 1e-4f64..0.1) {
        let x: Vec<f64> = (1..=30).map(|i| 1.25f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| (slope * v.ln() - rate * v).exp()).collect();
        let f = fit_truncated_powerlaw(&x, &y, None, (1.0, 1e4)).unwrap();
        prop_assert!((f.exponent - slope).abs() < 1e-7);
        prop_assert!((f.cutoff_rate - rate).abs() < 1e-9);
    }

    #[test]
    fn two_sample_ks_is_a_distance(a in prop::collection::vec(-5.0f64..5.0, 10..60), b in prop::collection::vec(-5.0f64..5.0, 10..60)) {
        let d1 = ks_two_sample(&a, &b).unwrap();
        let d2 = ks_two_sample(&b, &a).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d1));
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }
}
