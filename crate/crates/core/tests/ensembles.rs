use cwl_core::ensembles::*;
use cwl_core::estimators::ks_two_sample;
use cwl_core::linalg::{max_eigenvalue, SymTridiagonal};
use cwl_core::rng::task_rng;
use cwl_core::spectral::SpectralModel;
use proptest::prelude::*;

#[test]
fn elliptic_entry_correlation() {
    for rho in [0.0, 0.5, 1.0] {
        let m = sample_elliptic(512, rho, 2.0, 3).unwrap();
        assert!((transpose_correlation(&m) - rho).abs() < 0.05, "rho={rho}");
    }
}

#[test]
fn tridiagonal_and_dense_goe_share_the_top_eigenvalue_law() {
    let n = 20;
    let dense: Vec<f64> = (0..3000u64)
        .map(|i| max_eigenvalue(&sample_goe(n, 0.5, 2.0, i).unwrap()))
        .collect();
    let tri: Vec<f64> = (0..3000u64)
        .map(|i| goe_tridiagonal(n, 0.5, 2.0, &mut task_rng(8, i)).max_eigenvalue())
        .collect();
    let ks = ks_two_sample(&dense, &tri).unwrap();
    assert!(ks < 1.95 * (2.0 / 3000.0f64).sqrt(), "KS {ks}");
}

#[test]
fn invariant_matrix_has_the_quantile_spectrum() {
    let spec = SpectralModel::symmetric_beta(3.0).unwrap();
    let m = sample_invariant(&spec, 40, 2).unwrap();
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    let q = quantile_eigenvalues(&spec, 40).unwrap();
    for (a, b) in ev.iter().zip(&q) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn goe_edge_sits_at_the_radius() {
    let m = sample_goe(600, 0.0, 2.0, 1).unwrap();
    assert!((max_eigenvalue(&m) - 2.0).abs() < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sturm_count_brackets_every_eigenvalue(diag in prop::collection::vec(-3.0f64..3.0, 2..12), seed in any::<u64>()) {
        let n = diag.len();
        let mut rng = task_rng(seed, 0);
        let off: Vec<f64> = (0..n - 1).map(|_| cwl_core::linalg::chi(&mut rng, 2)).collect();
        let t = SymTridiagonal::new(diag, off);
        let dense = t.to_dense().symmetric_eigenvalues();
        let mut ev: Vec<f64> = dense.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        for (k, e) in ev.iter().enumerate() {
            prop_assert!((t.eigenvalue(k) - e).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_strings_round_trip(c in -2.0f64..2.0, r in 0.1f64..5.0, rho in 0.0f64..1.0) {
        for k in [
            EnsembleKind::GoeShiftedScaled { center: c, radius: r },
            EnsembleKind::Elliptic { rho, radius: r },
        ] {
            let back: EnsembleKind = k.to_string().parse().unwrap();
            prop_assert_eq!(back, k);
        }
    }
}
