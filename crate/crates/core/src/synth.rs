//! Synthetic benchmark networks: a jittered street grid with arterial car
//! corridors and stratified hub placement.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::mode::Mode;
use crate::netgraph::{EdgeDocument, NetworkDocument, NodeDocument};
use crate::rng;
use crate::scenario::{
    distribute_tools, CongestionWindow, EnergyDocument, HubDocument, ProfileDocument, Scenario, ScenarioDocument,
    ToolPolicy,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// Relative length jitter in [0, 1).
    pub jitter: f64,
    /// Every n-th row and column admits cars.
    pub arterial_every: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { rows: 16, cols: 16, spacing_m: 200.0, jitter: 0.2, arterial_every: 3, seed: 1 }
    }
}

pub fn grid_node_id(row: usize, col: usize) -> String {
    format!("n{row}_{col}")
}

/// Four-neighbour grid; every street segment is a pair of directed edges
/// of equal length.
pub fn grid_network(spec: &GridSpec) -> NetworkDocument {
    let mut rng = rng::stream(spec.seed, 0x6121);
    let mut nodes = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            nodes.push(NodeDocument {
                id: grid_node_id(r, c),
                x: Some(c as f64 * spec.spacing_m),
                y: Some(r as f64 * spec.spacing_m),
            });
        }
    }
    let mut edges = Vec::new();
    let every = spec.arterial_every.max(1);
    let mut street = |a: String, b: String, arterial: bool, edges: &mut Vec<EdgeDocument>| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let length_m = (spec.spacing_m * (1.0 + spec.jitter * u)).round().max(1.0);
        let mut modes = vec![Mode::Walk, Mode::EBike, Mode::EScooter];
        if arterial {
            modes.push(Mode::ECar);
        }
        for (from, to) in [(&a, &b), (&b, &a)] {
            edges.push(EdgeDocument {
                id: format!("{from}-{to}"),
                from: from.clone(),
                to: to.clone(),
                length_m,
                modes: modes.clone(),
                speed_mps: Default::default(),
            });
        }
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if c + 1 < spec.cols {
                street(grid_node_id(r, c), grid_node_id(r, c + 1), r % every == 0, &mut edges);
            }
            if r + 1 < spec.rows {
                street(grid_node_id(r, c), grid_node_id(r + 1, c), c % every == 0, &mut edges);
            }
        }
    }
    NetworkDocument { nodes, edges }
}

/// Splits the grid into a near-square array of blocks, one hub per block
/// at a random position inside it.
pub fn place_hubs_stratified(spec: &GridSpec, n_hubs: usize, seed: u64) -> Vec<String> {
    if n_hubs == 0 {
        return Vec::new();
    }
    let mut block_rows = (n_hubs as f64).sqrt().floor().max(1.0) as usize;
    while !n_hubs.is_multiple_of(block_rows) {
        block_rows -= 1;
    }
    let block_cols = n_hubs / block_rows;
    let mut rng = rng::stream(seed, 0x4B0B);
    let mut hubs = Vec::with_capacity(n_hubs);
    for bi in 0..block_rows {
        let (r0, r1) =
            (bi * spec.rows / block_rows, ((bi + 1) * spec.rows / block_rows).max(bi * spec.rows / block_rows + 1));
        for bj in 0..block_cols {
            let (c0, c1) =
                (bj * spec.cols / block_cols, ((bj + 1) * spec.cols / block_cols).max(bj * spec.cols / block_cols + 1));
            let r = rng.random_range(r0..r1.min(spec.rows)).min(spec.rows - 1);
            let c = rng.random_range(c0..c1.min(spec.cols)).min(spec.cols - 1);
            let id = grid_node_id(r, c);
            if !hubs.contains(&id) {
                hubs.push(id);
            }
        }
    }
    hubs
}

/// Default benchmark scenario document on a grid: every hub docks and holds
/// all three tool types at full charge, morning-peak congestion.
pub fn benchmark_document(spec: &GridSpec, n_hubs: usize, seed: u64) -> ScenarioDocument {
    let hubs = place_hubs_stratified(spec, n_hubs, seed)
        .into_iter()
        .map(|node| HubDocument { node, docks: Mode::TOOLS.to_vec(), tools: Vec::new() })
        .collect();
    ScenarioDocument {
        network: None,
        hubs,
        energy: EnergyDocument {
            rate_per_100s: [(Mode::EBike, 6.0), (Mode::EScooter, 8.0), (Mode::ECar, 8.0)].into_iter().collect(),
        },
        preference: None,
        profile: ProfileDocument {
            base_speed: Default::default(),
            congestion: vec![CongestionWindow { from_s: 5.5 * 3600.0, to_s: 19.0 * 3600.0, mult: 0.8 }],
        },
        seed,
        clock_s: 8.0 * 3600.0,
        aco: None,
        qlearning: None,
    }
}

pub fn benchmark_scenario(spec: &GridSpec, n_hubs: usize, seed: u64) -> Scenario {
    let sc = Scenario::from_documents(&grid_network(spec), &benchmark_document(spec, n_hubs, seed))
        .expect("generated scenario is valid");
    let config = distribute_tools(&sc.config, ToolPolicy::Fixed, seed);
    sc.with_config(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{load_graph, SpeedTable};

    #[test]
    fn grid_shape() {
        let spec = GridSpec::default();
        let doc = grid_network(&spec);
        assert_eq!(doc.nodes.len(), 256);
        assert_eq!(doc.edges.len(), 2 * 2 * 16 * 15);
        let g = load_graph(&doc, &SpeedTable::default()).unwrap();
        let far = g.shortest_time(Mode::Walk, "n0_0", "n15_15").unwrap();
        assert!(far.is_some());
        assert!(g.shortest_time(Mode::ECar, "n0_0", "n15_15").unwrap().is_some());
    }

    #[test]
    fn twenty_stratified_hubs() {
        let spec = GridSpec::default();
        let hubs = place_hubs_stratified(&spec, 20, 3);
        assert_eq!(hubs.len(), 20);
        assert_eq!(hubs, place_hubs_stratified(&spec, 20, 3));
        let sc = benchmark_scenario(&spec, 20, 3);
        assert_eq!(sc.config.tool_count(), 60);
    }
}
