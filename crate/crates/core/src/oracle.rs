//! Exact minimum-time solver used as ground truth.
//!
//! Label-setting search over (node, carried mode) with the carried tool's
//! SOC as a resource. Inventories are treated as static and revisits are not
//! excluded: any plan that revisits a node can be shortcut into a strictly
//! cheaper simple plan, so the optimum of this relaxation is a simple plan
//! and matches the planners' model exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::mode::Mode;
use crate::moves::{plan_from_steps, Context, Step};
use crate::netgraph::{Plan, ReducedGraph};
use crate::scenario::ScenarioConfig;

/// Half-percent resolution for the reported SOC quantiles.
pub const DEFAULT_QUANT: u32 = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("quantisation level must be at least 1")]
    InvalidQuant,
    #[error("no feasible plan")]
    NoFeasiblePlan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub plan: Plan,
    pub cost: f64,
    /// Carried charge after each leg in units of `100 / quant` percent,
    /// rounded down; `None` on walking legs.
    pub soc_quantiles: Vec<Option<u32>>,
    pub labels_created: usize,
}

#[derive(Debug, Clone)]
struct Label {
    node: usize,
    carried: Option<Mode>,
    soc: f64,
    cost: f64,
    legs: u32,
    parent: Option<usize>,
    step: Option<Step>,
    dead: bool,
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    legs: u32,
    id: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, legs, id).
        other.cost.total_cmp(&self.cost).then(other.legs.cmp(&self.legs)).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn key(node: usize, carried: Option<Mode>) -> usize {
    node * 5 + carried.map_or(4, Mode::index)
}

fn dominates(a: &Label, cost: f64, legs: u32, soc: f64) -> bool {
    (a.cost, a.legs) <= (cost, legs) && (a.carried.is_none() || a.soc >= soc)
}

pub fn soc_quantile(soc: f64, quant: u32) -> u32 {
    ((soc.max(0.0) / 100.0) * quant as f64 + 1e-9).floor() as u32
}

pub fn exact_optimum(r: &ReducedGraph, sc: &ScenarioConfig, quant: u32) -> Result<OracleSolution, OracleError> {
    if quant == 0 {
        return Err(OracleError::InvalidQuant);
    }
    if r.origin() == r.destination() {
        return Ok(OracleSolution { plan: Plan::empty(), cost: 0.0, soc_quantiles: Vec::new(), labels_created: 0 });
    }
    let ctx = Context::new(r, sc);
    let mut labels: Vec<Label> = Vec::new();
    let mut bucket: Vec<Vec<usize>> = vec![Vec::new(); r.node_count() * 5];
    let mut heap = BinaryHeap::new();

    let mut push = |labels: &mut Vec<Label>, heap: &mut BinaryHeap<Entry>, l: Label| {
        let b = &mut bucket[key(l.node, l.carried)];
        if b.iter().any(|&i| !labels[i].dead && dominates(&labels[i], l.cost, l.legs, l.soc)) {
            return;
        }
        for &i in b.iter() {
            let o = &labels[i];
            if !o.dead && (l.cost, l.legs) <= (o.cost, o.legs) && (l.carried.is_none() || l.soc >= o.soc) {
                labels[i].dead = true;
            }
        }
        b.retain(|&i| !labels[i].dead);
        let id = labels.len();
        heap.push(Entry { cost: l.cost, legs: l.legs, id });
        b.push(id);
        labels.push(l);
    };

    push(
        &mut labels,
        &mut heap,
        Label { node: r.origin(), carried: None, soc: 0.0, cost: 0.0, legs: 0, parent: None, step: None, dead: false },
    );

    while let Some(Entry { id, .. }) = heap.pop() {
        if labels[id].dead {
            continue;
        }
        let (u, carried, soc, cost, legs) = {
            let l = &labels[id];
            (l.node, l.carried, l.soc, l.cost, l.legs)
        };
        if u == r.destination() {
            let mut steps = Vec::new();
            let mut cur = Some(id);
            while let Some(i) = cur {
                if let Some(s) = labels[i].step {
                    steps.push(s);
                }
                cur = labels[i].parent;
            }
            steps.reverse();
            let plan = plan_from_steps(r, &steps);
            let soc_quantiles = steps.iter().map(|s| s.soc_after.map(|x| soc_quantile(x, quant))).collect();
            return Ok(OracleSolution { cost: plan.total_time_s, plan, soc_quantiles, labels_created: labels.len() });
        }
        for &b in r.out_arcs(u) {
            let Some(access) = ctx.access(u, carried, b) else { continue };
            let arc = r.arc(b);
            let (next_carried, next_soc, step) = match ctx.tool_source(u, access, soc, b) {
                None => (None, 0.0, Step { arc: b, pickup: false, soc_after: None }),
                Some((s, pickup)) => {
                    if !ctx.energy_ok(s, b) {
                        continue;
                    }
                    let left = s - ctx.need[b];
                    (Some(arc.mode), left, Step { arc: b, pickup, soc_after: Some(left) })
                }
            };
            push(
                &mut labels,
                &mut heap,
                Label {
                    node: arc.to,
                    carried: next_carried,
                    soc: next_soc,
                    cost: cost + arc.time_s,
                    legs: legs + 1,
                    parent: Some(id),
                    step: Some(step),
                    dead: false,
                },
            );
        }
    }
    Err(OracleError::NoFeasiblePlan)
}
