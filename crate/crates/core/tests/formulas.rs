//! Chain-rule formulas against the cell-enumeration oracles on random
//! instances with injected ties.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stattest_core::chain::{build_subdiff_sets, check_regularities, check_sq, check_sq_effective, clarke_formula_set};
use stattest_core::exact::{etest_clarke, etest_frechet, ExactStatus};
use stattest_core::instances::{random_mixed_instance, Instance, InstanceShape};
use stattest_core::model::rho_and_partition;
use stattest_core::numkit::{hull_contains, Tolerances};
use stattest_core::oracle::{bouligand_gradients, clarke_oracle_distance, frechet_oracle_check};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn instance(seed: u64) -> Instance {
    random_mixed_instance(&mut ChaCha8Rng::seed_from_u64(seed), InstanceShape::default())
}

fn sq(inst: &Instance) -> bool {
    check_sq(&inst.net, &inst.data, &inst.loss, tol().rank_tol)
        .unwrap()
        .overall
}

fn block(v: &[f64], k: usize, d: usize) -> Vec<f64> {
    v[k * (d + 1) + 1..(k + 1) * (d + 1)].to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clarke_formula_matches_oracle_under_sq(seed in any::<u64>()) {
        let inst = instance(seed);
        prop_assume!(sq(&inst));
        let formula = etest_clarke(&inst.net, &inst.data, &inst.loss, &tol()).unwrap().value();
        let oracle = clarke_oracle_distance(&inst.net, &inst.data, &inst.loss, &tol()).unwrap();
        prop_assert!((formula - oracle).abs() <= 1e-7, "formula {formula} oracle {oracle}");
    }

    #[test]
    fn bouligand_gradients_always_lie_in_the_formula_set(seed in any::<u64>()) {
        // inclusion holds with or without SQ
        let inst = instance(seed);
        let set = clarke_formula_set(&inst.net, &inst.data, &inst.loss).unwrap();
        for g in bouligand_gradients(&inst.net, &inst.data, &inst.loss, &tol()).unwrap() {
            prop_assert!(set.contains(&g, &tol()).unwrap());
        }
    }

    #[test]
    fn frechet_verdict_matches_cell_oracle(seed in any::<u64>()) {
        let inst = instance(seed);
        let res = etest_frechet(&inst.net, &inst.data, &inst.loss, &tol()).unwrap();
        prop_assume!(res.status != ExactStatus::NotSq);
        match res.status {
            ExactStatus::Value => {
                let g = res.minimizer.as_ref().unwrap();
                prop_assert!(frechet_oracle_check(g, &inst.net, &inst.data, &inst.loss, &tol()).unwrap());
            }
            _ => {
                let zero = vec![0.0; inst.net.param_len()];
                prop_assert!(!frechet_oracle_check(&zero, &inst.net, &inst.data, &inst.loss, &tol()).unwrap());
            }
        }
    }

    #[test]
    fn limiting_members_cover_gradients_and_sit_in_the_clarke_set(seed in any::<u64>()) {
        let inst = instance(seed);
        prop_assume!(sq(&inst));
        let d = inst.net.dim();
        let sets = build_subdiff_sets(&inst.net, &inst.data, &inst.loss, &tol()).unwrap();
        for unit in &sets {
            for member in &unit.limiting {
                for v in member.set.vertex_candidates() {
                    prop_assert!(unit.clarke.contains(&v, &tol()).unwrap());
                }
            }
            if let Some(f) = &unit.frechet {
                prop_assert_eq!(unit.limiting.len(), 1);
                prop_assert_eq!(&unit.limiting[0].set, f);
            }
        }
        for g in bouligand_gradients(&inst.net, &inst.data, &inst.loss, &tol()).unwrap() {
            for (k, unit) in sets.iter().enumerate() {
                let w = block(&g, k, d);
                let covered = unit.limiting.iter().any(|m| m.set.contains(&w, &tol()).unwrap());
                prop_assert!(covered, "unit {k} gradient block {w:?} outside every limiting member");
            }
        }
    }

    #[test]
    fn regularity_implications(seed in any::<u64>()) {
        let inst = instance(seed);
        let reg = check_regularities(&inst.net, &inst.data, &inst.loss, tol().rank_tol).unwrap();
        prop_assert_eq!(reg.liad, reg.likq);
        prop_assert!(!reg.likq || reg.sq);
    }
}

#[test]
fn sq_failing_only_through_zero_coefficient_ties_keeps_the_formula_exact() {
    // a tie with u_k rho_i = 0 lands in I+ but contributes a zero generator
    let mut seen = 0;
    for seed in 0..4000u64 {
        let inst = instance(seed);
        if sq(&inst) {
            continue;
        }
        let effective = check_sq_effective(&inst.net, &inst.data, &inst.loss, tol().rank_tol).unwrap();
        if !effective.overall {
            continue;
        }
        seen += 1;
        let local = rho_and_partition(&inst.net, &inst.data, &inst.loss).unwrap();
        let zero_tie = local
            .i_plus
            .iter()
            .enumerate()
            .any(|(k, plus)| plus.iter().any(|&i| inst.net.unit(k).u * local.rho[i] == 0.0));
        assert!(
            zero_tie,
            "seed {seed}: effective SQ differs without a zero-coefficient tie"
        );
        let formula = etest_clarke(&inst.net, &inst.data, &inst.loss, &tol());
        let set = clarke_formula_set(&inst.net, &inst.data, &inst.loss).unwrap();
        let grads = bouligand_gradients(&inst.net, &inst.data, &inst.loss, &tol()).unwrap();
        for v in set.vertex_candidates() {
            assert!(
                hull_contains(&grads, &v, &tol()).unwrap(),
                "seed {seed}: vertex outside the Clarke set"
            );
        }
        // the literal test refuses these instances
        assert_eq!(formula.unwrap().status, ExactStatus::NotSq);
        if seen >= 10 {
            break;
        }
    }
    assert!(seen >= 10, "only {seen} zero-coefficient instances found");
}
