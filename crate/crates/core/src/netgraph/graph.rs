use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::mode::{Mode, PerMode};

/// Default per-mode cruising speeds in m/s.
pub const DEFAULT_SPEEDS: [f64; 4] = [1.4, 5.0, 4.0, 11.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("malformed network document: {0}")]
    Malformed(String),
    #[error("edge references unknown node {0:?}")]
    DanglingNode(String),
    #[error("edge {0:?} has non-positive length")]
    NonPositiveLength(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdge(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("edge {edge:?} has invalid speed for {mode}")]
    InvalidSpeed { edge: String, mode: Mode },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub modes: Vec<Mode>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub speed_mps: BTreeMap<Mode, f64>,
}

/// On-disk network description. Coordinates are optional and only passed
/// through for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<EdgeDocument>,
}

impl NetworkDocument {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))
    }
}

/// Speeds used to turn edge lengths into travel times.
///
/// A per-edge `speed_mps` override replaces the base speed of that mode; the
/// congestion multiplier scales every mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedTable {
    pub base: PerMode<f64>,
    pub congestion: f64,
}

impl Default for SpeedTable {
    fn default() -> Self {
        SpeedTable { base: PerMode(DEFAULT_SPEEDS), congestion: 1.0 }
    }
}

impl SpeedTable {
    pub fn uniform(speed: f64) -> Self {
        SpeedTable { base: PerMode([speed; 4]), congestion: 1.0 }
    }

    pub fn with_congestion(mut self, multiplier: f64) -> Self {
        self.congestion = multiplier;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    /// `None` means the mode may not use this edge.
    pub time_by_mode: PerMode<Option<f64>>,
}

impl EdgeRecord {
    #[inline]
    pub fn time(&self, mode: Mode) -> Option<f64> {
        *self.time_by_mode.get(mode)
    }
}

/// Directed road graph with per-mode travel times.
#[derive(Debug, Clone)]
pub struct MultiModalGraph {
    node_ids: Vec<String>,
    coords: Vec<Option<(f64, f64)>>,
    index: HashMap<String, usize>,
    edges: Vec<EdgeRecord>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    /// Position of each edge id in lexicographic order, for tie-breaking.
    edge_rank: Vec<u32>,
}

impl MultiModalGraph {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.node_ids[idx]
    }

    pub fn coords(&self, idx: usize) -> Option<(f64, f64)> {
        self.coords[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_node(&self, id: &str) -> Result<usize, GraphError> {
        self.node_index(id).ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &EdgeRecord {
        &self.edges[idx]
    }

    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    pub fn incoming(&self, node: usize) -> &[usize] {
        &self.incoming[node]
    }

    pub(crate) fn edge_rank(&self, edge: usize) -> u32 {
        self.edge_rank[edge]
    }
}

/// Builds a graph from a network document, checking referential integrity.
pub fn load_graph(doc: &NetworkDocument, speeds: &SpeedTable) -> Result<MultiModalGraph, GraphError> {
    let mut index = HashMap::with_capacity(doc.nodes.len());
    let mut node_ids = Vec::with_capacity(doc.nodes.len());
    let mut coords = Vec::with_capacity(doc.nodes.len());
    for node in &doc.nodes {
        if index.insert(node.id.clone(), node_ids.len()).is_some() {
            return Err(GraphError::DuplicateNode(node.id.clone()));
        }
        node_ids.push(node.id.clone());
        coords.push(node.x.zip(node.y));
    }

    let mut seen = HashSet::with_capacity(doc.edges.len());
    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut outgoing = vec![Vec::new(); node_ids.len()];
    let mut incoming = vec![Vec::new(); node_ids.len()];
    for e in &doc.edges {
        if !seen.insert(e.id.as_str()) {
            return Err(GraphError::DuplicateEdge(e.id.clone()));
        }
        let from = *index.get(&e.from).ok_or_else(|| GraphError::DanglingNode(e.from.clone()))?;
        let to = *index.get(&e.to).ok_or_else(|| GraphError::DanglingNode(e.to.clone()))?;
        if !(e.length_m.is_finite() && e.length_m > 0.0) {
            return Err(GraphError::NonPositiveLength(e.id.clone()));
        }
        let mut time_by_mode = PerMode([None; 4]);
        for &mode in &e.modes {
            let base = e.speed_mps.get(&mode).copied().unwrap_or(*speeds.base.get(mode));
            let speed = base * speeds.congestion;
            let time = e.length_m / speed;
            if !(speed.is_finite() && speed > 0.0 && time.is_finite() && time > 0.0) {
                return Err(GraphError::InvalidSpeed { edge: e.id.clone(), mode });
            }
            time_by_mode.set(mode, Some(time));
        }
        outgoing[from].push(edges.len());
        incoming[to].push(edges.len());
        edges.push(EdgeRecord { id: e.id.clone(), from, to, length_m: e.length_m, time_by_mode });
    }

    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| edges[a].id.cmp(&edges[b].id));
    let mut edge_rank = vec![0u32; edges.len()];
    for (rank, &e) in order.iter().enumerate() {
        edge_rank[e] = rank as u32;
    }

    Ok(MultiModalGraph { node_ids, coords, index, edges, outgoing, incoming, edge_rank })
}
