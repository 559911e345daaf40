use proptest::prelude::*;

use steerkit::analysis::{beta, critical_eta, violation, Threshold};
use steerkit::assemblages::{
    apply_loss, assemble, max_entangled, noisy_lossy_assemblage, random_lhs_assemblage,
};
use steerkit::matcore::{max_abs_diff, projector};
use steerkit::measurements::{
    lossy_povm, marginalize, mub_prime, parent_povm_lossy, random_basis, random_set, Outcome,
    OutcomeString,
};
use steerkit::steering::{
    build_functional, class_bound, exact_lhs_bound, projector_sum_norm_check, strategy_count,
};

fn prime() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![2usize, 3, 5])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strategy_index_round_trip(n in 1usize..5, d in 2usize..5, raw in any::<u64>()) {
        let idx = raw as u128 % strategy_count(n, d);
        let s = OutcomeString::from_index(idx, n, d);
        prop_assert_eq!(s.index(d), idx);
        prop_assert!(s.check(n, d).is_ok());
    }

    #[test]
    fn norm_lemma_holds(l in 2usize..7, d in 2usize..9, seed in any::<u32>()) {
        let ps: Vec<_> = (0..l)
            .map(|i| projector(&random_basis(d, seed as u64 * 16 + i as u64).vectors()[0]))
            .collect();
        let (lhs, bound) = projector_sum_norm_check(&ps).unwrap();
        prop_assert!(lhs <= bound + 1e-9);
        prop_assert!(lhs >= 1.0 - 1e-12);
    }

    #[test]
    fn class_maxima_below_class_bounds(n in 2usize..5, d in 2usize..4, alpha in 0.0f64..=1.0, seed in any::<u32>()) {
        let set = random_set(d, n, seed as u64);
        let f = build_functional(&set, Some(alpha), false).unwrap();
        let r = exact_lhs_bound(&f).unwrap();
        for (k, m) in r.per_class_max.iter().enumerate() {
            prop_assert!(*m <= class_bound(k, n, alpha, f.cos_theta()).unwrap() + 1e-9);
        }
        prop_assert!(r.exact_bound <= r.analytic_bound + 1e-9);
    }

    #[test]
    fn random_lhs_never_violates(n in 2usize..4, d in 2usize..4, components in 1usize..6, seed in any::<u32>()) {
        let f = build_functional(&random_set(d, n, seed as u64), None, false).unwrap();
        let bound = exact_lhs_bound(&f).unwrap().exact_bound;
        let a = random_lhs_assemblage(n, d, components, seed as u64 ^ 0x5eed);
        prop_assert!(beta(&f, &a).unwrap() <= bound + 1e-9);
    }

    #[test]
    fn beta_affine_increasing_in_eta(d in prime(), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let set = mub_prime(d).unwrap();
        let f = build_functional(&set, None, true).unwrap();
        let base = assemble(&max_entangled(d).unwrap(), &set).unwrap();
        let b = |e: f64| beta(&f, &apply_loss(&base, e).unwrap()).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(b(lo) <= b(hi) + 1e-12);
        prop_assert!((b(0.5 * (lo + hi)) - 0.5 * (b(lo) + b(hi))).abs() < 1e-10);
        if hi - lo > 1e-6 {
            prop_assert!(b(hi) > b(lo));
        }
    }

    #[test]
    fn violation_flips_across_critical_eta(d in prime(), w in 0.8f64..=1.0) {
        let set = mub_prime(d).unwrap();
        let f = build_functional(&set, None, true).unwrap();
        let bound = f.analytic_bound();
        if let Threshold::Value(eta_c) = critical_eta(set.n(), d, f.cos_theta(), w).unwrap() {
            prop_assume!(eta_c < 1.0 - 1e-6);
            let at = |e: f64| violation(&f, &noisy_lossy_assemblage(d, &set, e, w).unwrap(), bound).unwrap().violated;
            prop_assert!(!at(eta_c - 1e-6));
            prop_assert!(at(eta_c + 1e-6));
        }
    }

    #[test]
    fn loss_gives_no_click_probability(n in 2usize..5, d in 2usize..5, eta in 0.0f64..=1.0, seed in any::<u32>()) {
        let set = random_set(d, n, seed as u64);
        let a = apply_loss(&assemble(&max_entangled(d).unwrap(), &set).unwrap(), eta).unwrap();
        prop_assert!(a.consistency_residual() < 1e-9);
        for x in 0..n {
            prop_assert!((a.probability(x, Outcome::NoClick) - (1.0 - eta)).abs() < 1e-12);
        }
    }

    #[test]
    fn parent_marginals_below_threshold(n in 2usize..4, d in 2usize..4, frac in 0.0f64..=1.0, seed in any::<u32>()) {
        let set = random_set(d, n, seed as u64);
        let eta = frac / n as f64;
        let parent = parent_povm_lossy(&set, eta).unwrap();
        let lossy = lossy_povm(&set, eta).unwrap();
        prop_assert!(parent.all_psd());
        prop_assert!(parent.completeness_residual() < 1e-10);
        for x in 0..n {
            for (m, e) in marginalize(&parent, x).unwrap().iter().zip(&lossy.elements[x]) {
                prop_assert!(max_abs_diff(m, e) < 1e-12);
            }
        }
    }
}
