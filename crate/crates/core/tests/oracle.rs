use emob_core::netgraph::{plan_cost, validate_plan};
use emob_core::oracle::{exact_optimum, DEFAULT_QUANT};
use emob_core::scenario::UserPreference;
use emob_core::{fixtures, Mode};
use emob_testkit::{all_plans, brute_force, random_case};
use proptest::prelude::*;

#[test]
fn matches_brute_force_on_random_cases() {
    for seed in 1000..1060 {
        let case = random_case(seed);
        let r = case.reduced();
        let cfg = &case.scenario.config;
        let exact = exact_optimum(&r, cfg, DEFAULT_QUANT).ok().map(|s| s.cost);
        let brute = brute_force(&r, cfg).map(|(c, _)| c);
        assert_eq!(exact, brute, "seed {seed}");
    }
}

#[test]
fn oracle_plans_validate() {
    for seed in 0..40 {
        let case = random_case(seed);
        let r = case.reduced();
        if let Ok(sol) = exact_optimum(&r, &case.scenario.config, DEFAULT_QUANT) {
            assert_eq!(validate_plan(&sol.plan, &r, &case.scenario.config), Ok(()), "seed {seed}");
            assert_eq!(plan_cost(&sol.plan, &r), Some(sol.cost));
        }
    }
}

#[test]
fn lower_bound_over_enumerated_plans() {
    let mut checked = 0;
    for seed in 0..30 {
        let case = random_case(seed);
        let r = case.reduced();
        let cfg = &case.scenario.config;
        let Ok(best) = exact_optimum(&r, cfg, DEFAULT_QUANT) else { continue };
        for plan in all_plans(&r, cfg, 200) {
            assert_eq!(validate_plan(&plan, &r, cfg), Ok(()), "seed {seed}: enumerated plan must be valid");
            assert!(best.cost <= plan.total_time_s, "seed {seed}");
            checked += 1;
        }
    }
    assert!(checked >= 1000, "only {checked} plans checked");
}

#[test]
fn t3_with_docks_emptied_walks() {
    let sc = fixtures::t3_without_docks();
    let r = fixtures::t3_reduced(&sc);
    let best = exact_optimum(&r, &sc.config, DEFAULT_QUANT).unwrap();
    // The walking detour through H2 (1200 + 300) beats the direct 3000 s edge.
    assert_eq!(best.cost, 1500.0);
    assert_eq!(brute_force(&r, &sc.config).unwrap().0, 1500.0);
}

#[test]
fn t3_e_bike_soc_threshold() {
    // 300 s at 10 %/100 s needs exactly 30 %.
    for (soc, expect) in [(29.5, 1500.0), (30.0, 1200.0), (100.0, 1200.0)] {
        let sc = fixtures::t3(soc);
        let cfg = sc.config.with_preference(UserPreference::excluding(Mode::ECar));
        let r = fixtures::t3_reduced(&sc);
        assert_eq!(exact_optimum(&r, &cfg, DEFAULT_QUANT).unwrap().cost, expect, "soc {soc}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raising_soc_never_hurts(seed in 0u64..10_000, hub in 0usize..6, bump in 1u32..=20) {
        let case = random_case(seed);
        let cfg = &case.scenario.config;
        let r = case.reduced();
        let h = &cfg.hubs[hub % cfg.hubs.len()];
        prop_assume!(!h.tools.is_empty());
        let tool = h.tools[bump as usize % h.tools.len()];
        let higher = cfg.with_tool_soc(&h.node, tool.mode, (tool.soc + 5.0 * f64::from(bump)).min(100.0)).unwrap();
        let before = exact_optimum(&r, cfg, DEFAULT_QUANT).map(|s| s.cost).unwrap_or(f64::INFINITY);
        let after = exact_optimum(&r, &higher, DEFAULT_QUANT).map(|s| s.cost).unwrap_or(f64::INFINITY);
        prop_assert!(after <= before);
    }

    #[test]
    fn quant_does_not_change_the_optimum(seed in 0u64..10_000, quant in 1u32..400) {
        let case = random_case(seed);
        let r = case.reduced();
        let a = exact_optimum(&r, &case.scenario.config, quant).map(|s| s.cost).ok();
        let b = exact_optimum(&r, &case.scenario.config, DEFAULT_QUANT).map(|s| s.cost).ok();
        prop_assert_eq!(a, b);
    }
}
