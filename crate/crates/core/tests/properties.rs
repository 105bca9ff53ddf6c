mod common;

use boltzmann_alloc::solver::find_pairwise_crossover;
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalization(case in case_strategy()) {
        check_normalization(&case).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn gauge_invariance(case in case_strategy(), shift in -100.0f64..100.0) {
        check_gauge(&case, shift).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn scale_duality(case in case_strategy(), scale in 0.1f64..10.0) {
        check_scale_duality(&case, scale).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn likelihood_ratio(case in case_strategy()) {
        check_likelihood_ratio(&case).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn zero_beta_is_egalitarian(case in case_strategy()) {
        check_zero_beta(&case).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn large_beta_concentrates(case in case_strategy()) {
        check_large_beta(&case).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn dominance_ratio_grows(case in case_strategy(), step in 0.01f64..5.0) {
        check_monotone_dominance(&case, step).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn dataset_round_trip(ds in dataset_strategy()) {
        check_round_trip(&ds).map_err(TestCaseError::fail)?;
    }

    /// Bisection and the closed form agree wherever the crossover is in range.
    #[test]
    fn crossover_closed_form(
        ca in 1.0f64..1e9,
        cb in 1.0f64..1e9,
        ea in -20.0f64..20.0,
        eb in -20.0f64..20.0,
    ) {
        prop_assume!((ea - eb).abs() > 1e-3);
        let p = build(&[ca, cb], &[ea, eb], 1.0);
        let c = find_pairwise_crossover(&p, "a0", "a1", (0.0, 50.0)).unwrap();
        let closed = (ca / cb).ln() / (ea - eb);
        prop_assert_eq!(c.closed_form, Some(closed + 0.0));
        if (0.0..=50.0).contains(&closed) {
            let bis = c.bisection.unwrap();
            prop_assert!((bis - closed).abs() <= 1e-9, "{} vs {}", bis, closed);
            prop_assert_eq!(c.beta, Some(closed));
        } else {
            prop_assert!(c.beta.is_none());
        }
    }
}
