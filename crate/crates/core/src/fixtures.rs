//! The small four-node scenario used throughout the tests and examples.
//!
//! Nodes `O`, `H1`, `H2`, `D`; hubs `H1` and `H2`. Walking times
//! O→H1 600 s, O→H2 1200 s, O→D 3000 s, H1→H2 900 s, H1→D 2000 s,
//! H2→D 300 s; H1→H2 takes 300 s by e-bike and 150 s by e-car. `H1` holds an
//! e-bike (SOC chosen by the caller) and an e-car at 100 %; `H2` docks every
//! tool type and holds none. E-bikes use 10 % per 100 s, e-cars 5 % per 100 s.

use crate::netgraph::{build_reduced_graph, NetworkDocument, ReducedGraph};
use crate::scenario::{Scenario, ScenarioDocument};

pub fn t3_network() -> NetworkDocument {
    serde_json::from_value(serde_json::json!({
        "nodes": [
            {"id": "O", "x": 0.0, "y": 0.0},
            {"id": "H1", "x": 600.0, "y": 0.0},
            {"id": "H2", "x": 1200.0, "y": 300.0},
            {"id": "D", "x": 1500.0, "y": 300.0}
        ],
        "edges": [
            {"id": "o_h1", "from": "O", "to": "H1", "length_m": 600.0, "modes": ["Walk"]},
            {"id": "o_h2", "from": "O", "to": "H2", "length_m": 1200.0, "modes": ["Walk"]},
            {"id": "o_d", "from": "O", "to": "D", "length_m": 3000.0, "modes": ["Walk"]},
            {"id": "h1_h2", "from": "H1", "to": "H2", "length_m": 900.0, "modes": ["Walk", "EBike", "ECar"],
             "speed_mps": {"EBike": 3.0, "ECar": 6.0}},
            {"id": "h1_d", "from": "H1", "to": "D", "length_m": 2000.0, "modes": ["Walk"]},
            {"id": "h2_d", "from": "H2", "to": "D", "length_m": 300.0, "modes": ["Walk"]}
        ]
    }))
    .expect("static fixture")
}

pub fn t3_scenario_document(ebike_soc: f64) -> ScenarioDocument {
    serde_json::from_value(serde_json::json!({
        "network": "t3",
        "hubs": [
            {"node": "H1", "docks": ["EBike", "ECar"],
             "tools": [{"mode": "EBike", "soc": ebike_soc}, {"mode": "ECar", "soc": 100.0}]},
            {"node": "H2", "docks": ["EBike", "EScooter", "ECar"], "tools": []}
        ],
        "energy": {"rate_per_100s": {"EBike": 10.0, "ECar": 5.0}},
        "profile": {"base_speed": {"Walk": 1.0, "EBike": 1.0, "EScooter": 1.0, "ECar": 1.0}},
        "seed": 1,
        "clock_s": 0.0
    }))
    .expect("static fixture")
}

pub fn t3(ebike_soc: f64) -> Scenario {
    Scenario::from_documents(&t3_network(), &t3_scenario_document(ebike_soc)).expect("fixture is valid")
}

/// Reduced graph for the `O`→`D` query.
pub fn t3_reduced(sc: &Scenario) -> ReducedGraph {
    build_reduced_graph(&sc.graph, "O", "D", &sc.hub_nodes()).expect("fixture is connected")
}

/// Hub-free variant: both hubs keep their position but dock nothing.
pub fn t3_without_docks() -> Scenario {
    let mut doc = t3_scenario_document(50.0);
    for hub in &mut doc.hubs {
        hub.docks.clear();
        hub.tools.clear();
    }
    Scenario::from_documents(&t3_network(), &doc).expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::Mode;

    #[test]
    fn reduced_weights() {
        let sc = t3(50.0);
        let r = t3_reduced(&sc);
        assert_eq!(r.node_count(), 4);
        let t = |a, b, m| r.arc_between(a, b, m).map(|x| x.time_s);
        assert_eq!(t("O", "H1", Mode::Walk), Some(600.0));
        assert_eq!(t("O", "H2", Mode::Walk), Some(1200.0));
        // O→H2→D beats the direct 3000 s edge.
        assert_eq!(t("O", "D", Mode::Walk), Some(1500.0));
        assert_eq!(t("H1", "H2", Mode::EBike), Some(300.0));
        assert_eq!(t("H1", "H2", Mode::ECar), Some(150.0));
        assert_eq!(t("H1", "D", Mode::Walk), Some(1200.0));
        assert_eq!(t("H2", "D", Mode::Walk), Some(300.0));
        assert_eq!(t("H2", "H1", Mode::Walk), None);
    }
}
