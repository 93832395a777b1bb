//! Independent reference routines for tests.
//!
//! Nothing here shares code with the planners beyond the data types: the
//! enumeration below re-implements the pickup, drop and charge rules from
//! scratch, with hub inventories that change as tools are taken and left.

use emob_core::netgraph::{Leg, MultiModalGraph, Plan, ReducedGraph};
use emob_core::rng;
use emob_core::scenario::{Scenario, ScenarioConfig, ScenarioDocument};
use emob_core::Mode;
use rand::seq::IndexedRandom;
use rand::Rng as _;

const EPS: f64 = 1e-9;

/// Mutable per-hub state during enumeration.
#[derive(Clone)]
struct HubState {
    docks: Vec<Mode>,
    tools: Vec<(Mode, f64)>,
}

struct Search<'a> {
    r: &'a ReducedGraph,
    sc: &'a ScenarioConfig,
    hubs: Vec<Option<HubState>>,
    visited: Vec<bool>,
    legs: Vec<Leg>,
    best: Option<(f64, Vec<Leg>)>,
}

fn need(sc: &ScenarioConfig, mode: Mode, t: f64) -> f64 {
    sc.energy.rate(mode) * t / 100.0
}

impl Search<'_> {
    fn docks(&self, node: usize, mode: Mode) -> bool {
        self.hubs[node].as_ref().is_some_and(|h| h.docks.contains(&mode))
    }

    fn dfs(&mut self, node: usize, carried: Option<(Mode, f64)>, cost: f64) {
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        if node == self.r.destination() {
            self.best = Some((cost, self.legs.clone()));
            return;
        }
        for &a in self.r.out_arcs(node) {
            let arc = *self.r.arc(a);
            if self.visited[arc.to] || !self.sc.preference.allows(arc.mode) {
                continue;
            }
            // Ways to obtain the vehicle for this leg: (soc, pickup index).
            let mut options: Vec<(Option<f64>, Option<usize>)> = Vec::new();
            if arc.mode == Mode::Walk {
                if carried.is_none_or(|(m, _)| self.docks(node, m)) {
                    options.push((None, None));
                }
            } else {
                if let Some((m, soc)) = carried {
                    if m == arc.mode {
                        options.push((Some(soc), None));
                    }
                }
                let can_drop = carried.is_none_or(|(m, _)| self.docks(node, m));
                if can_drop {
                    if let Some(h) = &self.hubs[node] {
                        for (i, &(m, soc)) in h.tools.iter().enumerate() {
                            if m == arc.mode {
                                options.push((Some(soc), Some(i)));
                            }
                        }
                    }
                }
                if arc.to == self.r.destination() && !self.docks(arc.to, arc.mode) {
                    options.clear();
                }
            }
            for (soc, pick) in options {
                let left = match soc {
                    Some(s) => {
                        let n = need(self.sc, arc.mode, arc.time_s);
                        if s - n < -EPS {
                            continue;
                        }
                        Some(s - n)
                    }
                    None => None,
                };
                let saved = self.hubs[node].clone();
                let dropping = matches!((carried, soc, pick), (Some(_), None, _) | (Some(_), Some(_), Some(_)));
                if let Some(h) = self.hubs[node].as_mut() {
                    if let Some(i) = pick {
                        h.tools.remove(i);
                    }
                    if dropping {
                        h.tools.push(carried.expect("dropping a carried tool"));
                    }
                }
                self.visited[arc.to] = true;
                self.legs.push(Leg {
                    from: self.r.node_id(node).to_string(),
                    to: self.r.node_id(arc.to).to_string(),
                    mode: arc.mode,
                    time_s: arc.time_s,
                    distance_m: arc.distance_m,
                    pickup: pick.is_some(),
                    soc_after: left,
                });
                let next = left.map(|s| (arc.mode, s));
                self.dfs(arc.to, next, cost + arc.time_s);
                self.legs.pop();
                self.visited[arc.to] = false;
                self.hubs[node] = saved;
            }
        }
    }
}

/// Minimum-time simple plan by exhaustive enumeration with branch and bound.
pub fn brute_force(r: &ReducedGraph, sc: &ScenarioConfig) -> Option<(f64, Plan)> {
    if r.origin() == r.destination() {
        return Some((0.0, Plan::empty()));
    }
    let hubs = r
        .nodes()
        .iter()
        .map(|id| {
            sc.hub(id).map(|h| HubState {
                docks: h.docks.iter().collect(),
                tools: h.tools.iter().map(|t| (t.mode, t.soc)).collect(),
            })
        })
        .collect();
    let mut visited = vec![false; r.node_count()];
    visited[r.origin()] = true;
    let mut s = Search { r, sc, hubs, visited, legs: Vec::new(), best: None };
    s.dfs(r.origin(), None, 0.0);
    s.best.map(|(c, legs)| (c, Plan::from_legs(legs)))
}

/// Every feasible simple plan, up to `limit` of them.
pub fn all_plans(r: &ReducedGraph, sc: &ScenarioConfig, limit: usize) -> Vec<Plan> {
    // Reuse the enumeration without bounding by collecting at the leaves.
    fn walk(s: &mut Search<'_>, node: usize, carried: Option<(Mode, f64)>, out: &mut Vec<Plan>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if node == s.r.destination() {
            out.push(Plan::from_legs(s.legs.clone()));
            return;
        }
        for &a in s.r.out_arcs(node) {
            let arc = *s.r.arc(a);
            if s.visited[arc.to] || !s.sc.preference.allows(arc.mode) {
                continue;
            }
            let walkable = arc.mode == Mode::Walk && carried.is_none_or(|(m, _)| s.docks(node, m));
            let mut options: Vec<(f64, bool)> = Vec::new();
            if arc.mode.is_tool() && !(arc.to == s.r.destination() && !s.docks(arc.to, arc.mode)) {
                if let Some((m, soc)) = carried {
                    if m == arc.mode {
                        options.push((soc, false));
                    }
                }
                if carried.is_none_or(|(m, _)| s.docks(node, m)) {
                    if let Some(h) = &s.hubs[node] {
                        if let Some(&(_, soc)) = h.tools.iter().find(|(m, _)| *m == arc.mode) {
                            options.push((soc, true));
                        }
                    }
                }
            }
            let branch = |s: &mut Search<'_>, next: Option<(Mode, f64)>, pickup: bool, out: &mut Vec<Plan>| {
                s.visited[arc.to] = true;
                s.legs.push(Leg {
                    from: s.r.node_id(node).to_string(),
                    to: s.r.node_id(arc.to).to_string(),
                    mode: arc.mode,
                    time_s: arc.time_s,
                    distance_m: arc.distance_m,
                    pickup,
                    soc_after: next.map(|(_, x)| x),
                });
                walk(s, arc.to, next, out, limit);
                s.legs.pop();
                s.visited[arc.to] = false;
            };
            if walkable {
                branch(s, None, false, out);
            }
            for (soc, pickup) in options {
                let left = soc - need(s.sc, arc.mode, arc.time_s);
                if left >= -EPS {
                    branch(s, Some((arc.mode, left)), pickup, out);
                }
            }
        }
    }
    let hubs = r
        .nodes()
        .iter()
        .map(|id| {
            sc.hub(id).map(|h| HubState {
                docks: h.docks.iter().collect(),
                tools: h.tools.iter().map(|t| (t.mode, t.soc)).collect(),
            })
        })
        .collect();
    let mut visited = vec![false; r.node_count()];
    visited[r.origin()] = true;
    let mut s = Search { r, sc, hubs, visited, legs: Vec::new(), best: None };
    let mut out = Vec::new();
    if r.origin() == r.destination() {
        return vec![Plan::empty()];
    }
    walk(&mut s, r.origin(), None, &mut out, limit);
    out
}

/// Independent check of the hard constraints on an emitted plan: charge
/// never negative while riding, only preferred modes, pickups and drops at
/// hubs docking the mode, and walking on the first/last leg when the
/// terminal is not a hub. Returns human-readable violations.
pub fn constraint_violations(plan: &Plan, sc: &ScenarioConfig, origin: &str, destination: &str) -> Vec<String> {
    let mut out = Vec::new();
    let docks = |node: &str, m: Mode| sc.hub(node).is_some_and(|h| h.docks.contains(m));
    if let Some(first) = plan.legs.first() {
        if first.from != origin {
            out.push(format!("plan starts at {} instead of {origin}", first.from));
        }
        if sc.hub(origin).is_none() && first.mode != Mode::Walk {
            out.push(format!("first leg from non-hub {origin} is {}", first.mode));
        }
    }
    if let Some(last) = plan.legs.last() {
        if last.to != destination {
            out.push(format!("plan ends at {} instead of {destination}", last.to));
        }
        if sc.hub(destination).is_none() && last.mode != Mode::Walk {
            out.push(format!("last leg into non-hub {destination} is {}", last.mode));
        }
    }
    let mut carried: Option<(Mode, f64)> = None;
    for (i, leg) in plan.legs.iter().enumerate() {
        if !sc.preference.allows(leg.mode) {
            out.push(format!("leg {i} uses excluded {}", leg.mode));
        }
        let keep = leg.mode.is_tool() && !leg.pickup && carried.is_some_and(|(m, _)| m == leg.mode);
        if !keep {
            if let Some((m, _)) = carried.take() {
                if !docks(&leg.from, m) {
                    out.push(format!("leg {i}: {m} dropped at {} which does not dock it", leg.from));
                }
            }
        }
        if leg.mode.is_tool() {
            let soc = if keep {
                carried.map(|(_, s)| s).unwrap_or(0.0)
            } else {
                match sc.hub(&leg.from).and_then(|h| h.tool(leg.mode)) {
                    Some(t) => t.soc,
                    None => {
                        out.push(format!("leg {i}: no {} to pick up at {}", leg.mode, leg.from));
                        0.0
                    }
                }
            };
            let left = soc - need(sc, leg.mode, leg.time_s);
            if left < -EPS {
                out.push(format!("leg {i}: SOC {left} after riding"));
            }
            carried = Some((leg.mode, left));
        }
    }
    if let Some((m, _)) = carried {
        if !docks(destination, m) {
            out.push(format!("{m} left at {destination} which does not dock it"));
        }
    }
    out
}

/// All-pairs shortest times for one mode by Floyd-Warshall over the edge list.
#[allow(clippy::needless_range_loop)]
pub fn floyd_warshall(g: &MultiModalGraph, mode: Mode) -> Vec<Vec<Option<f64>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0.0);
    }
    for e in g.edges() {
        if let Some(t) = e.time(mode) {
            if d[e.from][e.to].is_none_or(|x: f64| t < x) {
                d[e.from][e.to] = Some(t);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|x| ik + kj < x) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// A random small instance with integer arc times and half-percent rates.
#[derive(Debug, Clone)]
pub struct SmallCase {
    pub scenario: Scenario,
    pub origin: String,
    pub destination: String,
}

pub struct SmallCaseSpec {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub min_hubs: usize,
    pub max_hubs: usize,
    pub edge_prob: f64,
}

impl Default for SmallCaseSpec {
    fn default() -> Self {
        SmallCaseSpec { min_nodes: 6, max_nodes: 10, min_hubs: 3, max_hubs: 6, edge_prob: 0.3 }
    }
}

pub fn random_case(seed: u64) -> SmallCase {
    random_case_with(seed, &SmallCaseSpec::default())
}

pub fn random_case_with(seed: u64, spec: &SmallCaseSpec) -> SmallCase {
    let mut rng = rng::stream(seed, 0x7E57);
    let n = rng.random_range(spec.min_nodes..=spec.max_nodes);
    let id = |i: usize| format!("v{i}");
    let nodes: Vec<_> = (0..n).map(|i| serde_json::json!({"id": id(i)})).collect();

    // Up to three tool types take part.
    let mut tools: Vec<Mode> = Mode::TOOLS.to_vec();
    tools.retain(|_| rng.random_bool(0.75));
    if tools.is_empty() {
        tools.push(*Mode::TOOLS.choose(&mut rng).unwrap());
    }

    let mut edges = Vec::new();
    let edge = |from: usize, to: usize, modes: Vec<Mode>, len: u32, edges: &mut Vec<serde_json::Value>| {
        edges.push(serde_json::json!({
            "id": format!("e{}", edges.len()), "from": id(from), "to": id(to),
            "length_m": f64::from(len), "modes": modes
        }));
    };
    // A slow walking ring keeps everything reachable on foot.
    for i in 0..n {
        let len = 8 * rng.random_range(60..=120u32);
        edge(i, (i + 1) % n, vec![Mode::Walk], len, &mut edges);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !rng.random_bool(spec.edge_prob) {
                continue;
            }
            let mut modes: Vec<Mode> = Vec::new();
            if rng.random_bool(0.6) {
                modes.push(Mode::Walk);
            }
            for &m in &tools {
                if rng.random_bool(0.5) {
                    modes.push(m);
                }
            }
            if modes.is_empty() {
                modes.push(*tools.choose(&mut rng).unwrap());
            }
            let len = 8 * rng.random_range(5..=100u32);
            edge(i, j, modes, len, &mut edges);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let n_hubs = rng.random_range(spec.min_hubs.min(n)..=spec.max_hubs.min(n));
    let hub_nodes: Vec<usize> = order[..n_hubs].to_vec();
    let origin = rng.random_range(0..n);
    let mut destination = rng.random_range(0..n - 1);
    if destination >= origin {
        destination += 1;
    }

    let hubs: Vec<_> = hub_nodes
        .iter()
        .map(|&h| {
            let mut docks: Vec<Mode> = tools.iter().copied().filter(|_| rng.random_bool(0.7)).collect();
            if docks.is_empty() {
                docks.push(*tools.choose(&mut rng).unwrap());
            }
            let mut held = Vec::new();
            for &m in &docks {
                if rng.random_bool(0.6) {
                    held.push(serde_json::json!({"mode": m, "soc": f64::from(5 * rng.random_range(0..=20u32))}));
                }
            }
            serde_json::json!({"node": id(h), "docks": docks, "tools": held})
        })
        .collect();
    let rates: serde_json::Map<String, serde_json::Value> = tools
        .iter()
        .map(|&m| (m.as_str().to_string(), serde_json::json!(0.5 * f64::from(rng.random_range(1..=40u32)))))
        .collect();
    let speeds = [1.0, 2.0, 4.0, 8.0];
    let base: serde_json::Map<String, serde_json::Value> =
        std::iter::once(("Walk".to_string(), serde_json::json!(1.0)))
            .chain(
                Mode::TOOLS
                    .iter()
                    .map(|m| (m.as_str().to_string(), serde_json::json!(*speeds.choose(&mut rng).unwrap()))),
            )
            .collect();
    let mut doc = serde_json::json!({
        "hubs": hubs,
        "energy": {"rate_per_100s": rates},
        "profile": {"base_speed": base},
        "seed": seed
    });
    if rng.random_bool(0.25) {
        let drop = *tools.choose(&mut rng).unwrap();
        let allowed: Vec<Mode> = Mode::ALL.into_iter().filter(|m| *m != drop).collect();
        doc["preference"] = serde_json::json!({"allowed": allowed});
    }
    let network =
        serde_json::from_value(serde_json::json!({"nodes": nodes, "edges": edges})).expect("generated network");
    let doc: ScenarioDocument = serde_json::from_value(doc).expect("generated scenario");
    let scenario = Scenario::from_documents(&network, &doc).expect("generated scenario is valid");
    SmallCase { scenario, origin: id(origin), destination: id(destination) }
}

impl SmallCase {
    pub fn reduced(&self) -> ReducedGraph {
        emob_core::netgraph::build_reduced_graph(
            &self.scenario.graph,
            &self.origin,
            &self.destination,
            &self.scenario.hub_nodes(),
        )
        .expect("walking ring connects every pair")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use emob_core::fixtures;
    use emob_core::scenario::UserPreference;

    #[test]
    fn brute_force_on_t3() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        assert_eq!(brute_force(&r, &sc.config).unwrap().0, 1050.0);
        let no_car = sc.config.with_preference(UserPreference::excluding(Mode::ECar));
        assert_eq!(brute_force(&r, &no_car).unwrap().0, 1200.0);
        let low = fixtures::t3(20.0);
        let no_car = low.config.with_preference(UserPreference::excluding(Mode::ECar));
        assert_eq!(brute_force(&fixtures::t3_reduced(&low), &no_car).unwrap().0, 1500.0);
        let bare = fixtures::t3_without_docks();
        assert_eq!(brute_force(&fixtures::t3_reduced(&bare), &bare.config).unwrap().0, 1500.0);
    }

    #[test]
    fn random_cases_are_deterministic_and_integral() {
        for seed in 0..20 {
            let a = random_case(seed);
            let b = random_case(seed);
            assert_eq!(a.scenario.config, b.scenario.config);
            let r = a.reduced();
            assert!(r.arcs().iter().all(|x| x.time_s.fract() == 0.0));
            assert!(a.scenario.config.hubs.len() <= 6);
        }
    }

    #[test]
    fn all_plans_contains_the_optimum() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let plans = all_plans(&r, &sc.config, 1000);
        let best = plans.iter().map(|p| p.total_time_s).fold(f64::INFINITY, f64::min);
        assert_eq!(best, 1050.0);
        assert!(plans.len() >= 4);
    }
}
