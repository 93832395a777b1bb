use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::graph::{GraphError, MultiModalGraph};
use crate::mode::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Single-source, single-mode shortest travel times.
///
/// Among equal-time paths the chosen parent chain is the one whose edge-id
/// sequence is lexicographically smallest, so distances along the chosen
/// paths are reproducible.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: usize,
    pub mode: Mode,
    pub time: Vec<Option<f64>>,
    pub distance_m: Vec<f64>,
    pub parent_edge: Vec<Option<usize>>,
}

pub fn shortest_path_tree(g: &MultiModalGraph, mode: Mode, source: usize) -> ShortestPathTree {
    let n = g.node_count();
    let mut time: Vec<Option<f64>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    time[source] = Some(0.0);
    heap.push(Reverse((Time(0.0), source)));
    while let Some(Reverse((Time(t), u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        order.push(u);
        for &e in g.outgoing(u) {
            let edge = g.edge(e);
            let Some(w) = edge.time(mode) else { continue };
            let cand = t + w;
            let v = edge.to;
            if time[v].is_none_or(|cur| cand < cur) {
                time[v] = Some(cand);
                heap.push(Reverse((Time(cand), v)));
            }
        }
    }

    // Second pass: pick, among tight incoming edges, the parent giving the
    // lexicographically smallest edge-id sequence.
    let mut rank_path: Vec<Option<Vec<u32>>> = vec![None; n];
    let mut distance_m = vec![0.0; n];
    let mut parent_edge = vec![None; n];
    rank_path[source] = Some(Vec::new());
    for &v in order.iter().skip(1) {
        let tv = time[v].expect("settled nodes have a time");
        let mut best: Option<(Vec<u32>, usize)> = None;
        for &e in g.incoming(v) {
            let edge = g.edge(e);
            let Some(w) = edge.time(mode) else { continue };
            let Some(tu) = time[edge.from] else { continue };
            if tu + w != tv {
                continue;
            }
            let Some(prefix) = rank_path[edge.from].as_ref() else { continue };
            let mut seq = Vec::with_capacity(prefix.len() + 1);
            seq.extend_from_slice(prefix);
            seq.push(g.edge_rank(e));
            if best.as_ref().is_none_or(|(b, _)| seq < *b) {
                best = Some((seq, e));
            }
        }
        let (seq, e) = best.expect("the relaxing edge is always tight");
        distance_m[v] = distance_m[g.edge(e).from] + g.edge(e).length_m;
        parent_edge[v] = Some(e);
        rank_path[v] = Some(seq);
    }

    ShortestPathTree { source, mode, time, distance_m, parent_edge }
}

impl MultiModalGraph {
    /// Minimum travel time from `u` to `v` using only edges that permit
    /// `mode`; `Ok(None)` when no such path exists.
    pub fn shortest_time(&self, mode: Mode, u: &str, v: &str) -> Result<Option<f64>, GraphError> {
        let u = self.require_node(u)?;
        let v = self.require_node(v)?;
        Ok(shortest_path_tree(self, mode, u).time[v])
    }

    /// Edge indices of the chosen shortest path, or `None` if unreachable.
    pub fn shortest_path(&self, mode: Mode, u: &str, v: &str) -> Result<Option<Vec<usize>>, GraphError> {
        let u = self.require_node(u)?;
        let v = self.require_node(v)?;
        let tree = shortest_path_tree(self, mode, u);
        if tree.time[v].is_none() {
            return Ok(None);
        }
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(e) = tree.parent_edge[cur] {
            path.push(e);
            cur = self.edge(e).from;
        }
        path.reverse();
        Ok(Some(path))
    }
}
