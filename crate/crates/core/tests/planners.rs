use emob_core::aco::{run_aco, AcoParams, PheromoneTable};
use emob_core::netgraph::{build_reduced_graph, validate_plan};
use emob_core::oracle::{exact_optimum, DEFAULT_QUANT};
use emob_core::qlearn::{extract_policy_path, run_qlearning, train, QError, QParams, QTable};
use emob_core::scenario::{Scenario, UserPreference};
use emob_core::{fixtures, Mode};
use emob_testkit::{constraint_violations, random_case};
use proptest::prelude::*;

fn small_aco(seed: u64) -> AcoParams {
    AcoParams { n_ants: 150, n_iterations: 8, seed, ..AcoParams::default() }
}

#[test]
fn aco_plans_satisfy_constraints() {
    for seed in 0..40 {
        let case = random_case(seed);
        let r = case.reduced();
        let cfg = &case.scenario.config;
        let out = run_aco(&r, cfg, &small_aco(seed)).expect("walking ring always completes");
        assert_eq!(validate_plan(&out.plan, &r, cfg), Ok(()), "seed {seed}");
        let v = constraint_violations(&out.plan, cfg, &case.origin, &case.destination);
        assert!(v.is_empty(), "seed {seed}: {v:?}");
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0] || w[0].is_none()), "seed {seed}");
        let best = exact_optimum(&r, cfg, DEFAULT_QUANT).unwrap().cost;
        assert!(out.plan.total_time_s >= best);
    }
}

#[test]
fn q_plans_are_valid_or_no_path() {
    for seed in 0..40 {
        let case = random_case(seed);
        let r = case.reduced();
        let cfg = &case.scenario.config;
        let params = QParams { n_episodes: 400, seed, ..QParams::default() };
        match run_qlearning(&r, cfg, &params) {
            Ok((_, out)) => {
                assert_eq!(validate_plan(&out.plan, &r, cfg), Ok(()), "seed {seed}");
                assert!(constraint_violations(&out.plan, cfg, &case.origin, &case.destination).is_empty());
            }
            Err(QError::NoPath { .. }) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

#[test]
fn q_values_stay_within_bounds() {
    for seed in 0..20 {
        let case = random_case(seed);
        let r = case.reduced();
        let params = QParams { n_episodes: 300, seed, ..QParams::default() };
        let trained = train(&r, &case.scenario.config, &params).unwrap();
        let lower = params.penalty / (1.0 - params.discount);
        assert!(trained.table.values().iter().all(|&v| (lower..=0.0).contains(&v)), "seed {seed}");
    }
}

#[test]
fn gamma_is_irrelevant_without_energy_limits() {
    // Zero rates: the energy factor is always 1 and gamma cannot matter.
    for seed in 0..10 {
        let case = random_case(seed);
        let mut doc = case.scenario.config.to_document(None);
        for rate in doc.energy.rate_per_100s.values_mut() {
            *rate = 0.0;
        }
        let sc = Scenario {
            config: emob_core::scenario::load_scenario(&doc, &case.scenario.graph).unwrap(),
            graph: case.scenario.graph.clone(),
        };
        let cfg = sc.config.with_uniform_soc(100.0).unwrap();
        let r = case.reduced();
        let with = run_aco(&r, &cfg, &AcoParams { gamma: 1.0, ..small_aco(seed) }).unwrap();
        let without = run_aco(&r, &cfg, &AcoParams { gamma: 0.0, ..small_aco(seed) }).unwrap();
        assert_eq!(with, without, "seed {seed}");
    }
}

#[test]
fn greedy_walking_policy_finds_shortest_time() {
    // Single mode, undiscounted, exploration decayed to zero.
    for seed in 0..15 {
        let case = random_case(seed);
        let cfg = case.scenario.config.with_preference(UserPreference::new([Mode::Walk]));
        let r = case.reduced();
        let params = QParams { discount: 1.0, epsilon_end: 0.0, n_episodes: 3000, seed, ..QParams::default() };
        let (_, out) = run_qlearning(&r, &cfg, &params).unwrap();
        let shortest = case.scenario.graph.shortest_time(Mode::Walk, &case.origin, &case.destination).unwrap();
        assert_eq!(Some(out.plan.total_time_s), shortest, "seed {seed}");
    }
}

#[test]
fn dead_end_table_yields_no_path() {
    // Nothing leaves A: a greedy step into it cannot be completed.
    let net = serde_json::from_value(serde_json::json!({
        "nodes": [{"id": "O"}, {"id": "A"}, {"id": "H"}, {"id": "D"}],
        "edges": [
            {"id": "oa", "from": "O", "to": "A", "length_m": 10.0, "modes": ["Walk"]},
            {"id": "oh", "from": "O", "to": "H", "length_m": 50.0, "modes": ["Walk"]},
            {"id": "hd", "from": "H", "to": "D", "length_m": 50.0, "modes": ["Walk"]}
        ]
    }))
    .unwrap();
    let doc = serde_json::from_value(serde_json::json!({
        "hubs": [{"node": "A", "docks": ["EBike"]}, {"node": "H", "docks": ["EBike"]}]
    }))
    .unwrap();
    let sc = Scenario::from_documents(&net, &doc).unwrap();
    let r = build_reduced_graph(&sc.graph, "O", "D", &sc.hub_nodes()).unwrap();
    let mut rows: Vec<Vec<f64>> = (0..r.node_count()).map(|u| vec![-100.0; r.out_arcs(u).len()]).collect();
    let a = r.node_index("A").unwrap();
    let k = r.out_arcs(r.origin()).iter().position(|&x| r.arc(x).to == a).unwrap();
    rows[r.origin()][k] = 0.0;
    let q = QTable::from_rows(rows);
    assert!(matches!(extract_policy_path(&q, &r, &sc.config), Err(QError::NoPath { .. })));
}

#[test]
fn t3_preference_variants() {
    let sc = fixtures::t3(50.0);
    let r = fixtures::t3_reduced(&sc);
    let no_car = sc.config.with_preference(UserPreference::excluding(Mode::ECar));
    let (_, out) = run_qlearning(&r, &no_car, &QParams { seed: 9, ..QParams::default() }).unwrap();
    assert_eq!(out.plan.total_time_s, 1200.0);
    assert!(out.plan.modes().all(|m| m != Mode::ECar));
    let out = run_aco(&r, &no_car, &small_aco(9)).unwrap();
    assert_eq!(out.plan.total_time_s, 1200.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pheromone_stays_nonnegative(levels in proptest::collection::vec(0.0f64..10.0, 1..30), rounds in 1usize..20, rho in 0.01f64..=1.0) {
        let mut t = PheromoneTable::from_levels(vec![levels]);
        let keys: Vec<_> = t.keys().collect();
        for i in 0..rounds {
            t.evaporate(rho);
            let k = keys[i % keys.len()];
            t.deposit(&[k], 1.0, &[1.0 + i as f64]).unwrap();
            prop_assert!(t.keys().all(|k| t.level(k).unwrap() >= 0.0));
        }
    }

    #[test]
    fn aco_is_deterministic(seed in 0u64..1000) {
        let case = random_case(seed);
        let r = case.reduced();
        let p = AcoParams { n_ants: 30, n_iterations: 4, seed, ..AcoParams::default() };
        prop_assert_eq!(run_aco(&r, &case.scenario.config, &p), run_aco(&r, &case.scenario.config, &p));
    }
}
