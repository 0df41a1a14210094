use cwl_core::dynamics::*;
use cwl_core::ensembles::EnsembleKind;
use cwl_core::estimators::ks_two_sample;
use cwl_core::linalg::max_eigenvalue;
use cwl_core::persistence::SurvivalCounter;
use cwl_core::rng::task_rng;
use cwl_core::CwlError;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn goe(c: f64, r: f64) -> EnsembleKind {
    EnsembleKind::GoeShiftedScaled {
        center: c,
        radius: r,
    }
}

#[test]
fn scalar_cones_never_switch() {
    let a = DMatrix::identity(4, 4) * 1.7;
    let b = DMatrix::identity(4, 4) * 0.3;
    let tr = evolve(&a, &b, &[1.0, -2.0, 0.5, 3.0], &EvolveOptions::new(5000)).unwrap();
    assert_eq!(tr.switches, 0);
    assert!(tr.trapped);
    assert!((tr.lambda() - 1.7f64.ln()).abs() < 1e-12);
    assert_eq!(tr.open_residence, (0, 5000));
}

#[test]
fn equal_matrices_give_power_iteration() {
    let m = goe(3.0, 1.0).sample(20, 5).unwrap();
    let top = max_eigenvalue(&m);
    let v0: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.1).collect();
    let tr = evolve(&m, &m, &v0, &EvolveOptions::new(20_000)).unwrap();
    assert!(
        (tr.lambda() - top.ln()).abs() < 1e-3,
        "{} vs {}",
        tr.lambda(),
        top.ln()
    );
    assert!((tr.trailing_rate - top.ln()).abs() < 1e-9);

    let quad = vec![m.clone(), m.clone(), m.clone(), m.clone()];
    let tr2 = evolve_multicone(&quad, 2, &v0, &EvolveOptions::new(20_000)).unwrap();
    assert!((tr2.trailing_rate - top.ln()).abs() < 1e-9);
}

#[test]
fn single_component_multicone_is_evolve() {
    let a = goe(0.0, 2.0).sample(10, 1).unwrap();
    let b = goe(0.5, 1.0).sample(10, 2).unwrap();
    let v0: Vec<f64> = (0..10).map(|i| (i as f64 - 4.5).sin()).collect();
    let opts = EvolveOptions::new(3000).recording();
    let x = evolve(&a, &b, &v0, &opts).unwrap();
    let y = evolve_multicone(&[a, b], 1, &v0, &opts).unwrap();
    assert_eq!(x, y);
}

#[test]
fn wrong_matrix_count_is_rejected() {
    let m = DMatrix::identity(3, 3);
    let r = evolve_multicone(
        &[m.clone(), m.clone(), m],
        2,
        &[1.0, 1.0, 1.0],
        &EvolveOptions::new(10),
    );
    assert!(matches!(r, Err(CwlError::InvalidSpec(_))));
}

#[test]
fn kernel_direction_reports_step() {
    let mut a = DMatrix::identity(2, 2);
    a[(1, 1)] = 0.0;
    let b = DMatrix::zeros(2, 2);
    // v = (1, 1) → A v = (1, 0) stays in A forever; start in B instead
    let r = evolve(&a, &b, &[-1.0, 1.0], &EvolveOptions::new(10));
    assert!(matches!(r, Err(CwlError::DegenerateDynamics { step: 0 })));
}

#[test]
fn ties_use_the_seeded_coin() {
    let a = DMatrix::identity(2, 2) * 2.0;
    let b = DMatrix::identity(2, 2) * 3.0;
    let mut seen = [false; 2];
    for seed in 0..32 {
        let mut opts = EvolveOptions::new(5).recording();
        opts.tie_seed = seed;
        let tr = evolve(&a, &b, &[0.0, 1.0], &opts).unwrap();
        // the first component stays exactly zero, so every step is a tie
        seen[tr.cones[0] as usize] = true;
        let again = evolve(&a, &b, &[0.0, 1.0], &opts).unwrap();
        assert_eq!(tr, again);
    }
    assert!(seen[0] && seen[1]);
}

#[test]
fn period_two_orbit_is_flagged_as_cycle() {
    let mut flip = DMatrix::identity(2, 2);
    flip[(0, 0)] = -1.0;
    let tr = evolve(&flip, &flip, &[1.0, 1.0], &EvolveOptions::new(2000)).unwrap();
    let cycle = tr.cycle.expect("cycle");
    assert_eq!(cycle.period % 2, 0);
    assert!(!tr.trapped);
    assert_eq!(tr.switches, 1999);
    assert!(tr.lambda().abs() < 1e-12);
}

#[test]
fn converging_run_is_not_a_cycle() {
    let a = goe(3.0, 1.0).sample(6, 9).unwrap();
    let tr = evolve(&a, &a, &[1.0; 6], &EvolveOptions::new(3000)).unwrap();
    assert!(tr.cycle.is_none());
}

#[test]
fn goe_trajectory_has_short_and_long_stays() {
    let a = goe(0.0, 2.0).sample(1000, 11).unwrap();
    let b = goe(0.0, 2.0).sample(1000, 12).unwrap();
    let v0: Vec<f64> = (0..1000)
        .map(|i| ((i * 7919) % 101) as f64 - 50.0)
        .collect();
    let tr = evolve(&a, &b, &v0, &EvolveOptions::new(3000).recording()).unwrap();
    let mut lens: Vec<u64> = tr.residence.iter().map(|r| r.1).collect();
    lens.push(tr.open_residence.1);
    assert_eq!(lens.iter().sum::<u64>(), 3000);
    let shortest = *lens.iter().min().unwrap();
    let longest = *lens.iter().max().unwrap();
    assert_eq!(shortest, 1);
    assert!(longest >= 100, "longest stay {longest}");
    assert!(tr.vbar1.iter().all(|v| v.is_finite()));
}

#[test]
fn atomic_pair_never_leaves_its_cone() {
    let k: EnsembleKind = "invariant:atomic:1.5".parse().unwrap();
    let c = estimate_persistence_matrix(&k, &k, 16, 200, 100, 3).unwrap();
    assert!(c.q0.iter().all(|q| *q == 1.0));
}

#[test]
fn collapse_needs_three_dimensions() {
    let r = scaling_collapse(&[64], &goe(0.0, 2.0), 10, 100, 0.5, 1);
    assert!(matches!(r, Err(CwlError::InvalidSpec(_))));
    let r = scaling_collapse(&[64, 128, 256], &goe(0.0, 2.0), 10, 100, 0.5, 1);
    assert!(matches!(r, Err(CwlError::InvalidSpec(_))));
}

/// Survival curves of two first-exit samplers agree within 4.5 combined
/// standard errors at τ = 1..40.
fn same_survival(label: &str, a: &SurvivalCounter, b: &SurvivalCounter) {
    let (sa, sb) = (a.survival(), b.survival());
    let n = a.samples() as f64;
    for t in 1..=40 {
        let se = ((sa[t] * (1.0 - sa[t]) + sb[t] * (1.0 - sb[t])) / n)
            .sqrt()
            .max(1e-9);
        assert!(
            (sa[t] - sb[t]).abs() < 4.5 * se,
            "{label}: τ={t} {} vs {}",
            sa[t],
            sb[t]
        );
    }
}

fn compare_with_dense(kind: &EnsembleKind, n: usize, p: usize, samples: u64) {
    let mut fast = SurvivalCounter::new(40);
    let mut dense = SurvivalCounter::new(40);
    for i in 0..samples {
        let mut rng = task_rng(77, i);
        fast.record(first_exit(kind, n, p, 40, &mut rng).unwrap());
        let m = kind.sample(n, rng.random()).unwrap();
        dense.record(first_exit_dense(&m, p, 40, &mut rng));
    }
    same_survival(&kind.to_string(), &fast, &dense);
}

#[test]
fn tridiagonal_route_matches_dense_goe() {
    compare_with_dense(&goe(0.1, 2.0), 12, 1, 40_000);
    compare_with_dense(&goe(0.0, 2.0), 12, 2, 40_000);
}

#[test]
fn eigenvalue_route_matches_dense_invariant() {
    compare_with_dense(&"invariant-iid:beta:3".parse().unwrap(), 10, 1, 40_000);
    compare_with_dense(&"invariant:semicircle:0:2".parse().unwrap(), 10, 2, 40_000);
}

#[test]
fn hessenberg_route_matches_dense_ginibre() {
    compare_with_dense(&"elliptic:0:2".parse().unwrap(), 12, 1, 40_000);
}

/// λ from the frame representation (tridiagonal or eigenvalue storage with
/// Householder transfers) against λ from dense matrices.
fn lyapunov_routes_agree(a: &EnsembleKind, b: &EnsembleKind) {
    let n = 8;
    let runs = 3000;
    let frame = ensemble_lyapunov(a, b, n, runs, 300, 5).unwrap().values;
    let dense: Vec<f64> = (0..runs as u64)
        .map(|i| {
            let mut rng = task_rng(6, i);
            let ma = a.sample(n, rng.random()).unwrap();
            let mb = b.sample(n, rng.random()).unwrap();
            let v0: Vec<f64> = (0..n)
                .map(|_| cwl_core::linalg::std_normal(&mut rng))
                .collect();
            evolve(&ma, &mb, &v0, &EvolveOptions::new(300))
                .unwrap()
                .lambda()
        })
        .collect();
    let ks = ks_two_sample(&frame, &dense).unwrap();
    // 99.9% two-sample critical value for equal sizes is 1.95·√(2/n)
    assert!(ks < 1.95 * (2.0 / runs as f64).sqrt(), "{a} / {b}: KS {ks}");
}

#[test]
fn frame_representation_matches_dense_pairs() {
    lyapunov_routes_agree(&goe(0.0, 1.0), &goe(0.2, 2.0));
    lyapunov_routes_agree(
        &goe(0.0, 1.0),
        &"invariant-iid:semicircle:0.3:1.5".parse().unwrap(),
    );
    lyapunov_routes_agree(&"invariant-iid:beta:3".parse().unwrap(), &goe(0.0, 1.5));
    lyapunov_routes_agree(
        &"invariant-iid:beta:3".parse().unwrap(),
        &"invariant-iid:semicircle:0:1.2".parse().unwrap(),
    );
    lyapunov_routes_agree(&"elliptic:0.5:2".parse().unwrap(), &goe(0.0, 1.5));
}

#[test]
fn edge_fluctuations_shrink_with_dimension() {
    let a = top_eigenvalue_check(&goe(0.0, 2.0), 32, 3000, 1).unwrap();
    let b = top_eigenvalue_check(&goe(0.0, 2.0), 256, 3000, 2).unwrap();
    let ratio = a.stdev() / b.stdev();
    assert!((ratio / 4.0 - 1.0).abs() < 0.25, "ratio {ratio}");
    assert!(a.varsigma.iter().all(|s| s.is_finite()));
    assert!(a.gamma > 0.0);
    let dom = dominant_top_eigenvalue_check(&goe(0.0, 2.0), 32, 3000, 1).unwrap();
    assert!(dom.nu_max.len() < 3000 && dom.nu_max.len() > 1000);
}

fn small_matrix() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..6).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(-2.0f64..2.0, n * n),
            prop::collection::vec(-2.0f64..2.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_invariants((n, a, b, v0) in small_matrix(), horizon in 1usize..400) {
        prop_assume!(v0.iter().any(|v| v.abs() > 1e-3));
        let a = DMatrix::from_vec(n, n, a);
        let b = DMatrix::from_vec(n, n, b);
        let mut opts = EvolveOptions::new(horizon).recording();
        opts.trap_window = Some(horizon.min(50));
        match evolve(&a, &b, &v0, &opts) {
            Ok(tr) => {
                let total: u64 = tr.residence.iter().map(|r| r.1).sum::<u64>() + tr.open_residence.1;
                prop_assert_eq!(total, horizon as u64);
                prop_assert!((cwl_core::linalg::norm(&tr.direction) - 1.0).abs() < 1e-12);
                prop_assert!(tr.lambda().is_finite());
                prop_assert_eq!(tr.log_norm.len(), horizon + 1);
                prop_assert_eq!(tr.switches, tr.residence.len());
                for w in tr.residence.windows(2) {
                    prop_assert!(w[0].0 != w[1].0);
                }
            }
            Err(e) => {
                let degenerate = matches!(e, CwlError::DegenerateDynamics { .. });
                prop_assert!(degenerate);
            }
        }
    }

    #[test]
    fn multicone_residence_labels_are_valid((n, a, b, v0) in small_matrix(), horizon in 1usize..200) {
        prop_assume!(n >= 2 && v0.iter().any(|v| v.abs() > 1e-3));
        let a = DMatrix::from_vec(n, n, a);
        let b = DMatrix::from_vec(n, n, b);
        let mats = vec![a.clone(), b.clone(), b, a];
        if let Ok(tr) = evolve_multicone(&mats, 2, &v0, &EvolveOptions::new(horizon)) {
            prop_assert!(tr.residence.iter().all(|r| r.0 < 4));
            prop_assert!(tr.open_residence.0 < 4);
        }
    }
}
