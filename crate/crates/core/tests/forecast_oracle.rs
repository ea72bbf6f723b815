mod common;

use common::{oracle_case, oracle_gap};

#[test]
fn three_step_forecast_matches_recursive_substitution() {
    for seed in 0..10u64 {
        let case = oracle_case(1000 + seed);
        assert_eq!(case.forecast.years(), vec![2019, 2020, 2021]);
        let gap = oracle_gap(&case);
        assert!(gap < 1e-10, "seed {seed}: gap {gap:e}");
    }
}

#[test]
fn oracle_notices_a_perturbed_forecast() {
    let mut case = oracle_case(7);
    case.scenario.rebound_discount *= 0.9;
    assert!(oracle_gap(&case) > 1e-6);
    let mut case = oracle_case(8);
    for f in case.scenario.funds.iter_mut().filter(|f| f.year == 2019) {
        f.traditional *= 1.1;
    }
    assert!(oracle_gap(&case) > 1e-6);
}
