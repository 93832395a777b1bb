//! Move rules shared by the planners.
//!
//! A plan is a walk over reduced-graph nodes. Arriving somewhere on a tool
//! means carrying it; leaving by a different mode means dropping it there,
//! which only hubs docking that type allow. A tool leg either keeps riding
//! the carried tool or picks up the hub's tool of that type. Because the
//! carried mode is fixed by the previous arc, all of this is static per
//! (previous arc, next arc); only SOC and the visited set change at runtime.

use crate::mode::{Mode, ModeSet};
use crate::netgraph::{Leg, Plan, ReducedGraph};
use crate::scenario::{hub_index, ScenarioConfig, SOC_EPS};

/// How a statically allowed move may obtain its tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Access {
    pub cont: bool,
    pub pickup: bool,
}

pub(crate) struct Context<'a> {
    pub r: &'a ReducedGraph,
    pub docks: Vec<ModeSet>,
    /// SOC of each hub's tool per mode, indexed by reduced node.
    pub stock: Vec<[Option<f64>; 4]>,
    /// Energy needed to ride each arc.
    pub need: Vec<f64>,
    pub allowed: ModeSet,
}

impl<'a> Context<'a> {
    pub fn new(r: &'a ReducedGraph, sc: &ScenarioConfig) -> Self {
        let hubs = hub_index(sc);
        let mut docks = vec![ModeSet::EMPTY; r.node_count()];
        let mut stock = vec![[None; 4]; r.node_count()];
        for (i, id) in r.nodes().iter().enumerate() {
            if let Some(h) = hubs.get(id.as_str()) {
                docks[i] = h.docks;
                for t in &h.tools {
                    stock[i][t.mode.index()] = Some(t.soc);
                }
            }
        }
        let need = r.arcs().iter().map(|a| sc.energy_required(a.mode, a.time_s)).collect();
        Context { r, docks, stock, need, allowed: sc.preference.allowed() }
    }

    /// Static admissibility of leaving `node` by `arc` while carrying `carried`.
    pub fn access(&self, node: usize, carried: Option<Mode>, arc: usize) -> Option<Access> {
        let a = self.r.arc(arc);
        debug_assert_eq!(a.from, node);
        if !self.allowed.contains(a.mode) {
            return None;
        }
        if a.mode == Mode::Walk {
            return match carried {
                Some(m) if !self.docks[node].contains(m) => None,
                _ => Some(Access { cont: false, pickup: false }),
            };
        }
        if a.to == self.r.destination() && !self.docks[a.to].contains(a.mode) {
            return None;
        }
        let cont = carried == Some(a.mode);
        let pickup = self.stock[node][a.mode.index()].is_some() && carried.is_none_or(|c| self.docks[node].contains(c));
        (cont || pickup).then_some(Access { cont, pickup })
    }

    /// Chooses between continuing and picking up: the higher SOC wins, ties
    /// keep the carried tool. Returns `(soc before the leg, pickup)`, or
    /// `None` for walking.
    pub fn tool_source(&self, node: usize, access: Access, carried_soc: f64, arc: usize) -> Option<(f64, bool)> {
        let mode = self.r.arc(arc).mode;
        if mode == Mode::Walk {
            return None;
        }
        let fresh = if access.pickup { self.stock[node][mode.index()] } else { None };
        match (access.cont, fresh) {
            (true, Some(s)) if s > carried_soc => Some((s, true)),
            (true, _) => Some((carried_soc, false)),
            (false, Some(s)) => Some((s, true)),
            (false, None) => unreachable!("access always has a source"),
        }
    }

    #[inline]
    pub fn energy_ok(&self, soc: f64, arc: usize) -> bool {
        soc - self.need[arc] >= -SOC_EPS
    }
}

/// Per-slot admissibility tables. Slot 0 is the start at the origin; slot
/// `a + 1` is "just arrived by arc `a`". Entry `k` of a slot refers to the
/// `k`-th out-arc of the slot's node.
pub(crate) struct SlotTable {
    pub offset: Vec<usize>,
    pub node: Vec<usize>,
    pub access: Vec<Option<Access>>,
}

impl SlotTable {
    /// `forbid_return` additionally rules out going straight back to the node
    /// the previous arc came from.
    pub fn build(ctx: &Context<'_>, forbid_return: bool) -> Self {
        let r = ctx.r;
        let n_slots = r.arcs().len() + 1;
        let mut offset = Vec::with_capacity(n_slots + 1);
        let mut node = Vec::with_capacity(n_slots);
        let mut access = Vec::new();
        for slot in 0..n_slots {
            let (u, carried, back) = match slot {
                0 => (r.origin(), None, None),
                s => {
                    let a = r.arc(s - 1);
                    (a.to, a.mode.is_tool().then_some(a.mode), Some(a.from))
                }
            };
            offset.push(access.len());
            node.push(u);
            for &b in r.out_arcs(u) {
                let ok = if forbid_return && back == Some(r.arc(b).to) { None } else { ctx.access(u, carried, b) };
                access.push(ok);
            }
        }
        offset.push(access.len());
        SlotTable { offset, node, access }
    }

    #[inline]
    pub fn range(&self, slot: usize) -> std::ops::Range<usize> {
        self.offset[slot]..self.offset[slot + 1]
    }
}

/// One realized move: the arc taken, whether it picked up a fresh tool, and
/// the SOC left afterwards (tool legs only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Step {
    pub arc: usize,
    pub pickup: bool,
    pub soc_after: Option<f64>,
}

pub(crate) fn plan_from_steps(r: &ReducedGraph, steps: &[Step]) -> Plan {
    Plan::from_legs(
        steps
            .iter()
            .map(|s| {
                let a = r.arc(s.arc);
                Leg {
                    from: r.node_id(a.from).to_string(),
                    to: r.node_id(a.to).to_string(),
                    mode: a.mode,
                    time_s: a.time_s,
                    distance_m: a.distance_m,
                    pickup: s.pickup,
                    soc_after: s.soc_after,
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn t3_access_rules() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let ctx = Context::new(&r, &sc.config);
        let h1 = r.node_index("H1").unwrap();
        let car = r.find_arc(h1, r.node_index("H2").unwrap(), Mode::ECar).unwrap();
        let walk = r.find_arc(h1, r.destination(), Mode::Walk).unwrap();
        assert_eq!(ctx.access(h1, None, car), Some(Access { cont: false, pickup: true }));
        // A scooter cannot be left at H1.
        assert_eq!(ctx.access(h1, Some(Mode::EScooter), walk), None);
        assert_eq!(ctx.access(h1, Some(Mode::EBike), walk), Some(Access { cont: false, pickup: false }));
        assert_eq!(ctx.tool_source(h1, Access { cont: true, pickup: true }, 100.0, car), Some((100.0, false)));
        assert_eq!(ctx.tool_source(h1, Access { cont: true, pickup: true }, 10.0, car), Some((100.0, true)));
        assert!(ctx.energy_ok(50.0, r.find_arc(h1, r.node_index("H2").unwrap(), Mode::EBike).unwrap()));
    }
}
