use emob_core::netgraph::build_reduced_graph;
use emob_core::Mode;
use emob_testkit::{floyd_warshall, random_case_with, SmallCaseSpec};
use proptest::prelude::*;

fn spec() -> SmallCaseSpec {
    SmallCaseSpec { min_nodes: 10, max_nodes: 50, min_hubs: 1, max_hubs: 6, edge_prob: 0.08 }
}

fn check(seed: u64, mode_pick: usize) -> Result<usize, TestCaseError> {
    let case = random_case_with(seed, &spec());
    let g = &case.scenario.graph;
    let mode = Mode::ALL[mode_pick % 4];
    let fw = floyd_warshall(g, mode);
    let r = build_reduced_graph(g, &case.origin, &case.destination, &case.scenario.hub_nodes()).unwrap();
    let mut compared = 0;
    for u in 0..r.node_count() {
        for v in 0..r.node_count() {
            if u == v || v == r.origin() || u == r.destination() {
                continue;
            }
            let gu = g.node_index(r.node_id(u)).unwrap();
            let gv = g.node_index(r.node_id(v)).unwrap();
            let got = r.find_arc(u, v, mode).map(|a| r.arc(a).time_s);
            prop_assert_eq!(got, fw[gu][gv], "seed {} {}->{} {}", seed, r.node_id(u), r.node_id(v), mode);
            compared += 1;
        }
    }
    Ok(compared)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reduced_weights_equal_full_graph_shortest_times(seed in 0u64..1_000_000, mode in 0usize..4) {
        check(seed, mode)?;
    }
}

#[test]
fn distances_follow_the_chosen_path() {
    for seed in 0..20 {
        let case = random_case_with(seed, &spec());
        let g = &case.scenario.graph;
        let r = build_reduced_graph(g, &case.origin, &case.destination, &case.scenario.hub_nodes()).unwrap();
        for a in r.arcs() {
            let path = g.shortest_path(a.mode, r.node_id(a.from), r.node_id(a.to)).unwrap().unwrap();
            let len: f64 = path.iter().map(|&e| g.edge(e).length_m).sum();
            let time: f64 = path.iter().map(|&e| g.edge(e).time(a.mode).unwrap()).sum();
            assert_eq!(len, a.distance_m);
            assert_eq!(time, a.time_s);
        }
    }
}
