use cwl_core::spectral::{correlator, SpectralModel};
use cwl_core::surrogate::*;
use nalgebra::DMatrix;

#[test]
fn covariance_entries_are_the_correlator() {
    let s = SpectralModel::symmetric_beta(3.0).unwrap();
    let k = build_covariance(&s, 30).unwrap();
    for (t, u) in [(0usize, 0usize), (3, 7), (30, 1), (12, 29)] {
        // the diagonal may carry a 1e-10 jitter
        assert!((k[(t, u)] - correlator(&s, t as u64, u as u64).unwrap()).abs() < 1e-9);
        assert_eq!(k[(t, u)], k[(u, t)]);
    }
}

#[test]
fn sampled_paths_have_the_target_covariance() {
    let s = SpectralModel::symmetric_beta(2.0).unwrap();
    let k = build_covariance(&s, 6).unwrap();
    let n = 40_000;
    let batch = sample_gp_paths(&k, n, 17).unwrap();
    let p = &batch.paths;
    let emp: DMatrix<f64> = p.transpose() * p / n as f64;
    for t in 0..7 {
        for u in 0..7 {
            // var of a product of unit Gaussians with correlation c is 1 + c²
            let se = ((1.0 + k[(t, u)].powi(2)) / n as f64).sqrt();
            assert!((emp[(t, u)] - k[(t, u)]).abs() < 4.5 * se, "({t},{u})");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let s = SpectralModel::semicircle(0.0, 2.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_persistence_gp(&s, 200, 3000, 9).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn symmetric_spectrum_factorizes_over_parities() {
    let s = SpectralModel::semicircle(0.0, 2.0).unwrap();
    let p = parity_persistence(&s, 200, 20_000, 5).unwrap();
    assert!(p.max_product_deviation(1) < 4.0);
}
