use std::collections::HashMap;

use serde::Serialize;

use super::graph::{GraphError, MultiModalGraph};
use super::shortest::shortest_path_tree;
use crate::mode::Mode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReducedGraphError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("at least one hub is required")]
    NoHubs,
    #[error("{0:?} has no walking connection into the hub network")]
    NoFeasibleEntry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedArc {
    pub from: usize,
    pub to: usize,
    pub mode: Mode,
    pub time_s: f64,
    pub distance_m: f64,
}

/// Hub-level graph: terminals plus hubs, one arc per (ordered pair, mode)
/// weighted with the full-graph shortest time for that mode.
///
/// Terminals that coincide with a hub are merged into one node. Arcs into
/// the origin and out of the destination are not materialized since no
/// simple plan can use them. Each node's outgoing arcs are sorted by
/// `(mode, target id)`.
#[derive(Debug, Clone)]
pub struct ReducedGraph {
    nodes: Vec<String>,
    origin: usize,
    destination: usize,
    arcs: Vec<ReducedArc>,
    out: Vec<Vec<usize>>,
    lookup: HashMap<(usize, usize, Mode), usize>,
    index: HashMap<String, usize>,
}

impl ReducedGraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn arcs(&self) -> &[ReducedArc] {
        &self.arcs
    }

    pub fn arc(&self, idx: usize) -> &ReducedArc {
        &self.arcs[idx]
    }

    /// Indices into [`ReducedGraph::arcs`] leaving `node`.
    pub fn out_arcs(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn find_arc(&self, from: usize, to: usize, mode: Mode) -> Option<usize> {
        self.lookup.get(&(from, to, mode)).copied()
    }

    pub fn arc_between(&self, from: &str, to: &str, mode: Mode) -> Option<&ReducedArc> {
        let f = self.node_index(from)?;
        let t = self.node_index(to)?;
        self.find_arc(f, t, mode).map(|a| &self.arcs[a])
    }
}

/// Precomputes per-mode shortest times between the origin, the destination
/// and every hub.
pub fn build_reduced_graph(
    g: &MultiModalGraph,
    origin: &str,
    destination: &str,
    hubs: &[&str],
) -> Result<ReducedGraph, ReducedGraphError> {
    if hubs.is_empty() {
        return Err(ReducedGraphError::NoHubs);
    }
    let o = g.require_node(origin)?;
    let d = g.require_node(destination)?;
    let mut graph_nodes = vec![o];
    if d != o {
        graph_nodes.push(d);
    }
    for h in hubs {
        let h = g.require_node(h)?;
        if !graph_nodes.contains(&h) {
            graph_nodes.push(h);
        }
    }
    let origin_idx = 0;
    let destination_idx = if d == o { 0 } else { 1 };
    let hub_set: Vec<bool> = graph_nodes.iter().map(|&n| hubs.iter().any(|h| g.node_index(h) == Some(n))).collect();

    let nodes: Vec<String> = graph_nodes.iter().map(|&n| g.node_id(n).to_string()).collect();
    let mut arcs = Vec::new();
    let mut out = vec![Vec::new(); nodes.len()];
    let mut lookup = HashMap::new();

    for (u, &gu) in graph_nodes.iter().enumerate() {
        if u == destination_idx && d != o {
            continue;
        }
        for mode in Mode::ALL {
            let tree = shortest_path_tree(g, mode, gu);
            for (v, &gv) in graph_nodes.iter().enumerate() {
                if v == u || v == origin_idx {
                    continue;
                }
                let Some(time_s) = tree.time[gv] else { continue };
                lookup.insert((u, v, mode), arcs.len());
                out[u].push(arcs.len());
                arcs.push(ReducedArc { from: u, to: v, mode, time_s, distance_m: tree.distance_m[gv] });
            }
        }
        out[u].sort_by(|&a, &b| {
            let (a, b) = (&arcs[a], &arcs[b]);
            a.mode.cmp(&b.mode).then_with(|| nodes[a.to].cmp(&nodes[b.to]))
        });
    }

    if d != o {
        let has_walk_out = out[origin_idx].iter().any(|&a| arcs[a].mode == Mode::Walk);
        if !hub_set[origin_idx] && !has_walk_out {
            return Err(ReducedGraphError::NoFeasibleEntry(origin.to_string()));
        }
        let has_walk_in = arcs.iter().any(|a| a.to == destination_idx && a.mode == Mode::Walk);
        if !hub_set[destination_idx] && !has_walk_in {
            return Err(ReducedGraphError::NoFeasibleEntry(destination.to_string()));
        }
    }

    let index = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    Ok(ReducedGraph { nodes, origin: origin_idx, destination: destination_idx, arcs, out, lookup, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::graph::{load_graph, NetworkDocument, SpeedTable};

    fn five_node() -> MultiModalGraph {
        // H1 -> X -> Y -> H2 by bike totals 300 s; the direct bike edge is slower.
        let doc: NetworkDocument = serde_json::from_value(serde_json::json!({
            "nodes": [{"id":"O"},{"id":"H1"},{"id":"X"},{"id":"Y"},{"id":"H2"},{"id":"D"}],
            "edges": [
                {"id":"o1","from":"O","to":"H1","length_m":60,"modes":["Walk"]},
                {"id":"h1x","from":"H1","to":"X","length_m":100,"modes":["Walk","EBike"]},
                {"id":"xy","from":"X","to":"Y","length_m":100,"modes":["Walk","EBike"]},
                {"id":"yh2","from":"Y","to":"H2","length_m":100,"modes":["Walk","EBike"]},
                {"id":"h1h2","from":"H1","to":"H2","length_m":400,"modes":["EBike"]},
                {"id":"h2d","from":"H2","to":"D","length_m":30,"modes":["Walk"]}
            ]
        }))
        .unwrap();
        load_graph(&doc, &SpeedTable::uniform(1.0)).unwrap()
    }

    #[test]
    fn arc_weight_is_multi_hop_shortest_time() {
        let g = five_node();
        let r = build_reduced_graph(&g, "O", "D", &["H1", "H2"]).unwrap();
        let arc = r.arc_between("H1", "H2", Mode::EBike).unwrap();
        assert_eq!(arc.time_s, 300.0);
        assert_eq!(arc.distance_m, 300.0);
        assert_eq!(r.arc_between("O", "D", Mode::Walk).unwrap().time_s, 390.0);
        assert!(r.arc_between("O", "H2", Mode::EBike).is_none());
        assert!(r.arc_between("H1", "O", Mode::Walk).is_none());
        assert!(r.arc_between("D", "H1", Mode::Walk).is_none());
    }

    #[test]
    fn origin_at_hub_merges_nodes() {
        let g = five_node();
        let r = build_reduced_graph(&g, "H1", "D", &["H1", "H2"]).unwrap();
        assert_eq!(r.node_count(), 3);
        assert_eq!(r.node_id(r.origin()), "H1");
        assert!(r.arc_between("H1", "H2", Mode::EBike).is_some());
    }

    #[test]
    fn isolated_origin_has_no_entry() {
        let mut doc: NetworkDocument = serde_json::from_value(serde_json::json!({
            "nodes": [{"id":"O"},{"id":"H"},{"id":"D"}],
            "edges": [{"id":"hd","from":"H","to":"D","length_m":10,"modes":["Walk"]}]
        }))
        .unwrap();
        let g = load_graph(&doc, &SpeedTable::default()).unwrap();
        assert_eq!(
            build_reduced_graph(&g, "O", "D", &["H"]).unwrap_err(),
            ReducedGraphError::NoFeasibleEntry("O".into())
        );
        doc.nodes.push(super::super::graph::NodeDocument { id: "Z".into(), x: None, y: None });
        let g = load_graph(&doc, &SpeedTable::default()).unwrap();
        assert_eq!(build_reduced_graph(&g, "O", "D", &[]).unwrap_err(), ReducedGraphError::NoHubs);
    }

    #[test]
    fn out_arcs_are_sorted_by_mode_then_target() {
        let g = five_node();
        let r = build_reduced_graph(&g, "O", "D", &["H1", "H2"]).unwrap();
        for node in 0..r.node_count() {
            let keys: Vec<_> = r.out_arcs(node).iter().map(|&a| (r.arc(a).mode, r.node_id(r.arc(a).to))).collect();
            let mut sorted = keys.clone();
            sorted.sort();
            assert_eq!(keys, sorted);
        }
    }
}
