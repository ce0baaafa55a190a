mod common;

use common::*;
use lngm::oracle::{empirical_local_check, scan_all_kkt, Classification, LocalCheck};
use lngm::solver::{SolveOptions, SolveStatus};
use lngm::verifier::{feasibility_tol, Tolerances};
use lngm::{
    build_transform, check_strict_lngm, detect_joint_definiteness, lagrangian_inertia, solve, ConstraintKind,
    ProblemInstance, SolveReport,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn certified(r: &SolveReport) -> Vec<(DVector<f64>, f64)> {
    let mut v: Vec<_> = r.certificates.iter().map(|c| (c.x(), c.mu_star)).collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1));
    v
}

fn close(a: &DVector<f64>, b: &DVector<f64>, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn positive_instances_respect_count_bound(seed in any::<u64>(), n in 2usize..7) {
        let inst = random_instance(seed, n);
        let r = solve(&inst, &SolveOptions::default());
        prop_assert_eq!(r.status, SolveStatus::Solved);
        prop_assert!((1..=2).contains(&r.certificates.len()), "{:?}", r.notes);
        for c in &r.certificates {
            let x = c.x();
            prop_assert!(inst.f1(&x).abs() <= feasibility_tol(&inst, &x, 1e-6));
            let h_tol = 1e-9;
            prop_assert_eq!(lagrangian_inertia(&inst, c.mu_star, h_tol).as_tuple(), (1, 0, n - 1));
        }
    }

    #[test]
    fn negated_objectives_have_at_most_one(seed in any::<u64>(), n in 2usize..7) {
        let inst = random_instance(seed, n).negated_objective();
        let r = solve(&inst, &SolveOptions::default());
        prop_assert_eq!(r.status, SolveStatus::Solved);
        prop_assert!(r.certificates.len() <= 1, "{:?}", r.notes);
    }

    #[test]
    fn negative_instances_have_exactly_one(seed in 0u64..1_000_000, n in 2usize..5) {
        let inst = random_negative_instance(seed, n);
        let r = solve(&inst, &SolveOptions::default());
        prop_assert_eq!(r.certificates.len(), 1, "{:?}", r.notes);
    }

    #[test]
    fn inequality_keeps_positive_multipliers(seed in any::<u64>(), n in 2usize..6, negate in any::<bool>()) {
        let mut eq = random_instance(seed, n);
        if negate {
            eq = eq.negated_objective();
        }
        let opts = SolveOptions::default();
        let gtre = certified(&solve(&eq, &opts));
        let gtr = certified(&solve(&eq.with_kind(ConstraintKind::Inequality), &opts));
        let expected: Vec<_> = gtre.into_iter().filter(|(_, mu)| *mu > 0.0).collect();
        prop_assert_eq!(gtr.len(), expected.len());
        for ((xa, ma), (xb, mb)) in gtr.iter().zip(&expected) {
            prop_assert!(close(xa, xb, 1e-12));
            prop_assert_eq!(ma, mb);
        }
    }

    #[test]
    fn scaling_maps_minimizers_to_themselves(seed in any::<u64>(), n in 2usize..6, s in 0.1f64..10.0, t in 0.1f64..10.0) {
        let inst = random_instance(seed, n);
        let opts = SolveOptions::default();
        let base = certified(&solve(&inst, &opts));
        let scaled = certified(&solve(&inst.scaled(s, t), &opts));
        prop_assert_eq!(base.len(), scaled.len());
        for ((xa, ma), (xb, mb)) in base.iter().zip(&scaled) {
            prop_assert!(close(xa, xb, 1e-5), "{xa} vs {xb}");
            prop_assert!((ma * s / t - mb).abs() <= 1e-5 * (1.0 + mb.abs()), "{ma} vs {mb}");
        }
    }

    #[test]
    fn homogeneous_problems_have_none(seed in any::<u64>(), n in 2usize..6, kind in prop_oneof![Just(ConstraintKind::Equality), Just(ConstraintKind::Inequality)]) {
        let mut r = rng(seed);
        let m = random_sym(&mut r, n, 10.0);
        let a0 = &m * m.transpose() + DMatrix::identity(n, n);
        let a1 = random_sym(&mut r, n, 10.0);
        let c1 = r.random_range(0.5..50.0) * if r.random::<bool>() { 1.0 } else { -1.0 };
        let inst = ProblemInstance::new(a0, DVector::zeros(n), a1, DVector::zeros(n), c1, kind).unwrap();
        let rep = solve(&inst, &SolveOptions::default());
        prop_assert_eq!(rep.status, SolveStatus::Solved);
        prop_assert!(rep.certificates.is_empty());
    }

    #[test]
    fn verdict_is_invariant_under_the_transform(seed in any::<u64>(), n in 2usize..6, perturb in any::<bool>()) {
        let inst = random_instance(seed, n);
        let r = solve(&inst, &SolveOptions::default());
        let det = detect_joint_definiteness(inst.a0(), inst.a1(), 1e-9).unwrap();
        let (t, tp) = build_transform(&inst, &det).unwrap();
        let y_inst = ProblemInstance::new(
            DMatrix::identity(n, n) * t.sgn.value(),
            DVector::zeros(n),
            tp.a.clone(),
            tp.b.clone(),
            tp.c,
            inst.kind(),
        )
        .unwrap();
        let tol = Tolerances::default();
        for c in &r.certificates {
            // Either the certified multiplier or a wrong one, which must fail
            // in both coordinate systems.
            let mu = if perturb { c.mu_star + 0.5 } else { c.mu_star };
            let vx = check_strict_lngm(&inst, &c.x(), mu, &tol).unwrap();
            let vy = check_strict_lngm(&y_inst, &t.forward(&c.x()), mu - t.mu1, &tol).unwrap();
            prop_assert_eq!(vx.certified(), vy.certified(), "{:?} vs {:?}", vx.reasons, vy.reasons);
            prop_assert_eq!(vx.certified(), !perturb);
        }
    }
}

#[test]
fn certificates_pass_local_sampling() {
    for seed in 0..30u64 {
        let inst = random_instance(seed, 2 + seed as usize % 4);
        for c in solve(&inst, &SolveOptions::default()).certificates {
            let res = empirical_local_check(&inst, &c.x(), 1e-3, 500, seed).unwrap();
            assert_eq!(res, LocalCheck::LooksLocalMin, "seed {seed}");
        }
    }
}

#[test]
fn oracle_respects_count_bounds() {
    for seed in 0..40u64 {
        let n = 2 + seed as usize % 2;
        let pos = random_instance(seed, n);
        let lngm = |inst: &ProblemInstance| {
            scan_all_kkt(inst, 4000)
                .unwrap()
                .iter()
                .filter(|p| p.classification == Classification::Lngm)
                .count()
        };
        let k = lngm(&pos);
        assert!((1..=2).contains(&k), "seed {seed}: {k}");
        assert!(lngm(&pos.negated_objective()) <= 1, "seed {seed}");
    }
}

#[test]
fn oracle_agrees_with_solver() {
    for seed in 0..25u64 {
        let n = 2 + seed as usize % 2;
        let inst = if seed % 3 == 0 {
            random_instance(seed, n).negated_objective()
        } else {
            random_instance(seed, n)
        };
        let sol = certified(&solve(&inst, &SolveOptions::default()));
        let mut orc: Vec<_> = scan_all_kkt(&inst, 4000)
            .unwrap()
            .into_iter()
            .filter(|p| p.classification == Classification::Lngm)
            .map(|p| (p.x(), p.mu))
            .collect();
        orc.sort_by(|a, b| a.1.total_cmp(&b.1));
        assert_eq!(sol.len(), orc.len(), "seed {seed}");
        for ((xa, ma), (xb, mb)) in sol.iter().zip(&orc) {
            assert!(close(xa, xb, 1e-4), "seed {seed}: {xa} vs {xb}");
            assert!((ma - mb).abs() <= 1e-4 * (1.0 + ma.abs()), "seed {seed}: {ma} vs {mb}");
        }
    }
}
