//! Road graph, per-mode shortest times, hub-level reduced graph, and plan
//! validation.

mod graph;
mod plan;
mod reduced;
mod shortest;

pub use graph::{
    load_graph, EdgeDocument, EdgeRecord, GraphError, MultiModalGraph, NetworkDocument, NodeDocument, SpeedTable,
    DEFAULT_SPEEDS,
};
pub use plan::{plan_cost, validate_plan, Leg, Plan, Violation};
pub use reduced::{build_reduced_graph, ReducedArc, ReducedGraph, ReducedGraphError};
pub use shortest::{shortest_path_tree, ShortestPathTree};
