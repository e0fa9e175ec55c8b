//! Reduction chain from 3-SAT through the piecewise-linear test, the
//! abs-normal signature test and the shallow network.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stattest_core::hardness::{
    anft_check, assignment_direction, brute_sat, eval_plt, nnt_directional_check, parse_dimacs, plt_stationary,
    plt_to_abs_normal, random_cnf3, sat_to_plt, satisfying_assignment, Cnf3, PltMode,
};
use stattest_core::numkit::Tolerances;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn formula(seed: u64, max_vars: usize, max_clauses: usize) -> Cnf3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1 + (seed % max_vars as u64) as usize;
    let n = 1 + (seed / 7 % max_clauses as u64) as usize;
    random_cnf3(&mut rng, m, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn stationarity_is_the_complement_of_satisfiability(seed in any::<u64>()) {
        let cnf = formula(seed, 6, 8);
        let sat = brute_sat(&cnf).unwrap();
        let inst = sat_to_plt(&cnf).unwrap();
        prop_assert_eq!(plt_stationary(&inst, 0.0, PltMode::Exhaustive, &tol()).unwrap(), !sat);
        prop_assert_eq!(plt_stationary(&inst, 0.0, PltMode::Certificate, &tol()).unwrap(), !sat);
    }

    #[test]
    fn small_epsilon_does_not_change_the_verdict(seed in any::<u64>(), frac in 0.0f64..0.99) {
        let cnf = formula(seed, 5, 6);
        let inst = sat_to_plt(&cnf).unwrap();
        let eps = frac / (inst.dim() as f64).sqrt();
        let sat = brute_sat(&cnf).unwrap();
        prop_assert_eq!(plt_stationary(&inst, eps, PltMode::Exhaustive, &tol()).unwrap(), !sat);
        prop_assert_eq!(plt_stationary(&inst, eps, PltMode::Certificate, &tol()).unwrap(), !sat);
    }

    #[test]
    fn satisfying_assignments_give_descent(seed in any::<u64>()) {
        let cnf = formula(seed, 8, 10);
        let inst = sat_to_plt(&cnf).unwrap();
        if let Some(a) = satisfying_assignment(&cnf).unwrap() {
            prop_assert!(eval_plt(&inst, &assignment_direction(&a)).unwrap() <= -1.0);
        }
    }

    #[test]
    fn signature_test_flags_exactly_the_satisfiable_formulas(seed in any::<u64>()) {
        // 4n - 1 switching variables keeps n <= 4 under the enumeration cap
        let cnf = formula(seed, 5, 4);
        let anf = plt_to_abs_normal(&sat_to_plt(&cnf).unwrap());
        prop_assert_eq!(anft_check(&anf, &tol()).unwrap(), brute_sat(&cnf).unwrap());
    }

    #[test]
    fn abs_normal_form_reproduces_the_plt_function(seed in any::<u64>(), d in prop::collection::vec(-2.0f64..2.0, 8)) {
        let cnf = formula(seed, 8, 4);
        let inst = sat_to_plt(&cnf).unwrap();
        let anf = plt_to_abs_normal(&inst);
        let d = &d[..inst.dim()];
        let (a, b) = (eval_plt(&inst, d).unwrap(), anf.eval(d).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "plt {a} anf {b}");
    }

    #[test]
    fn network_derivative_matches_the_plt_function(seed in any::<u64>()) {
        let inst = sat_to_plt(&formula(seed, 6, 6)).unwrap();
        let report = nnt_directional_check(&inst, 5, seed).unwrap();
        prop_assert!(report.max_error <= 1e-8, "max error {}", report.max_error);
    }

    #[test]
    fn dimacs_round_trip(seed in any::<u64>()) {
        let cnf = formula(seed, 10, 12);
        prop_assert_eq!(parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
    }
}

#[test]
fn contradictory_units_are_stationary_everywhere() {
    let cnf = Cnf3::new(1, vec![vec![1], vec![-1]]).unwrap();
    let inst = sat_to_plt(&cnf).unwrap();
    assert!(plt_stationary(&inst, 0.0, PltMode::Exhaustive, &tol()).unwrap());
    assert!(!anft_check(&plt_to_abs_normal(&inst), &tol()).unwrap());
}

#[test]
fn certificate_mode_rejects_large_epsilon() {
    let inst = sat_to_plt(&Cnf3::new(4, vec![vec![1, 2, -4]]).unwrap()).unwrap();
    assert!(plt_stationary(&inst, 0.5, PltMode::Certificate, &tol()).is_err());
    assert!(plt_stationary(&inst, -1.0, PltMode::Exhaustive, &tol()).is_err());
}
