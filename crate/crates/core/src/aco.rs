//! Mode- and energy-aware ant colony optimisation over the reduced graph.
//!
//! A transition is a pair (arc just taken, next arc); pheromone lives on
//! transitions. An ant at a node weighs every admissible next arc by
//! `tau^alpha * h^beta * ef^gamma`, where `h = 1 / arc_time` and `ef` is 1
//! when the tool it would ride has enough charge for the arc and 0 otherwise.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::moves::{plan_from_steps, Context, SlotTable, Step};
use crate::netgraph::{Plan, ReducedGraph};
use crate::rng;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcoParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
    #[serde(rename = "q", alias = "q_deposit")]
    pub q_deposit: f64,
    pub n_ants: usize,
    pub n_iterations: usize,
    pub tau0: f64,
    pub seed: u64,
    /// Let the best-so-far ant deposit once more after every iteration.
    pub elitist: bool,
    /// Maximum moves per ant; defaults to four times the node count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<usize>,
}

impl Default for AcoParams {
    fn default() -> Self {
        AcoParams {
            alpha: 1.0,
            beta: 2.0,
            gamma: 1.0,
            rho: 0.1,
            q_deposit: 100.0,
            n_ants: 1600,
            n_iterations: 20,
            tau0: 1.0,
            seed: 0,
            elitist: false,
            step_cap: None,
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a finite exponent >= 0"));
            }
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err("rho must lie in (0, 1]".into());
        }
        if !(self.q_deposit.is_finite() && self.q_deposit > 0.0) {
            return Err("q must be positive".into());
        }
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return Err("tau0 must be positive".into());
        }
        if self.n_ants == 0 || self.n_iterations == 0 {
            return Err("n_ants and n_iterations must be at least 1".into());
        }
        if self.step_cap == Some(0) {
            return Err("step_cap must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AcoError {
    #[error("every candidate has a zero selection weight")]
    DeadEnd,
    #[error("no ant reached the destination")]
    NoFeasiblePlan,
    #[error("transition {index} has non-positive cost {cost}")]
    ZeroCost { index: usize, cost: f64 },
    #[error("{transitions} transitions but {costs} costs")]
    LengthMismatch { transitions: usize, costs: usize },
    #[error("transition {0:?} is not in the table")]
    UnknownTransition(TransitionKey),
    #[error("transition {0:?} is infeasible and cannot receive pheromone")]
    InfeasibleTransition(TransitionKey),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Inputs of one candidate move in the selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub pheromone: f64,
    pub heuristic: f64,
    pub ef: f64,
}

pub fn numerator(c: &Candidate, params: &AcoParams) -> f64 {
    c.pheromone.powf(params.alpha) * c.heuristic.powf(params.beta) * c.ef.powf(params.gamma)
}

/// Selection probabilities over `candidates`, proportional to
/// `pheromone^alpha * heuristic^beta * ef^gamma`.
pub fn transition_probabilities(candidates: &[Candidate], params: &AcoParams) -> Result<Vec<f64>, AcoError> {
    let weights: Vec<f64> = candidates.iter().map(|c| numerator(c, params)).collect();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(AcoError::DeadEnd);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Slot 0 is "at the origin, nothing taken yet"; slot `a + 1` follows arc `a`.
/// `index` is the position of the next arc in the slot node's out-arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TransitionKey {
    pub slot: usize,
    pub index: usize,
}

impl TransitionKey {
    pub fn slot_after(prev_arc: Option<usize>) -> usize {
        prev_arc.map_or(0, |a| a + 1)
    }
}

/// Pheromone per transition. Transitions that break preference, dock
/// rules, or immediately turn back are infeasible: they start at 0 and
/// stay there.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    offset: Vec<usize>,
    levels: Vec<f64>,
    feasible: Vec<bool>,
}

impl PheromoneTable {
    pub fn new(r: &ReducedGraph, sc: &ScenarioConfig, tau0: f64) -> Self {
        let ctx = Context::new(r, sc);
        Self::from_slots(&SlotTable::build(&ctx, true), tau0)
    }

    fn from_slots(slots: &SlotTable, tau0: f64) -> Self {
        let feasible: Vec<bool> = slots.access.iter().map(Option::is_some).collect();
        let levels = feasible.iter().map(|&f| if f { tau0 } else { 0.0 }).collect();
        PheromoneTable { offset: slots.offset.clone(), levels, feasible }
    }

    /// A table of feasible transitions with the given levels, one row per slot.
    pub fn from_levels(rows: Vec<Vec<f64>>) -> Self {
        let mut offset = vec![0];
        let mut levels = Vec::new();
        for row in rows {
            levels.extend(row);
            offset.push(levels.len());
        }
        let feasible = vec![true; levels.len()];
        PheromoneTable { offset, levels, feasible }
    }

    fn flat(&self, key: TransitionKey) -> Option<usize> {
        let start = *self.offset.get(key.slot)?;
        let end = *self.offset.get(key.slot + 1)?;
        (key.index < end - start).then_some(start + key.index)
    }

    pub fn level(&self, key: TransitionKey) -> Option<f64> {
        self.flat(key).map(|i| self.levels[i])
    }

    pub fn is_feasible(&self, key: TransitionKey) -> bool {
        self.flat(key).is_some_and(|i| self.feasible[i])
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = TransitionKey> + '_ {
        self.offset
            .windows(2)
            .enumerate()
            .flat_map(|(slot, w)| (0..w[1] - w[0]).map(move |index| TransitionKey { slot, index }))
    }

    /// Multiplies every level by `1 - rho`.
    pub fn evaporate(&mut self, rho: f64) {
        let keep = 1.0 - rho;
        for v in &mut self.levels {
            *v *= keep;
        }
    }

    /// Adds `q / cost` to each listed transition, in order. Nothing is
    /// changed when any input is rejected.
    pub fn deposit(&mut self, transitions: &[TransitionKey], q: f64, costs: &[f64]) -> Result<(), AcoError> {
        if transitions.len() != costs.len() {
            return Err(AcoError::LengthMismatch { transitions: transitions.len(), costs: costs.len() });
        }
        let mut flat = Vec::with_capacity(transitions.len());
        for (index, (&key, &cost)) in transitions.iter().zip(costs).enumerate() {
            let i = self.flat(key).ok_or(AcoError::UnknownTransition(key))?;
            if !self.feasible[i] {
                return Err(AcoError::InfeasibleTransition(key));
            }
            if cost.is_nan() || cost <= 0.0 {
                return Err(AcoError::ZeroCost { index, cost });
            }
            flat.push((i, cost));
        }
        for (i, cost) in flat {
            self.levels[i] += q / cost;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcoOutcome {
    pub plan: Plan,
    /// Best cost found so far, after each iteration.
    pub trace: Vec<Option<f64>>,
    pub completed_ants: usize,
    pub discarded_ants: usize,
}

/// Everything an ant needs, flattened for the inner loop.
struct Colony<'a> {
    ctx: Context<'a>,
    slots: SlotTable,
    entry_arc: Vec<usize>,
    arc_to: Vec<usize>,
    arc_time: Vec<f64>,
    arc_tool: Vec<bool>,
    h_beta: Vec<f64>,
    alpha: f64,
    gamma_zero: bool,
    cap: usize,
}

struct Scratch {
    visited: Vec<bool>,
    path: Vec<usize>,
    cand: Vec<(usize, f64, bool)>,
}

impl<'a> Colony<'a> {
    fn new(r: &'a ReducedGraph, sc: &ScenarioConfig, params: &AcoParams) -> Self {
        let ctx = Context::new(r, sc);
        let slots = SlotTable::build(&ctx, true);
        let entry_arc = (0..slots.node.len()).flat_map(|s| r.out_arcs(slots.node[s]).iter().copied()).collect();
        let arcs = r.arcs();
        Colony {
            entry_arc,
            arc_to: arcs.iter().map(|a| a.to).collect(),
            arc_time: arcs.iter().map(|a| a.time_s).collect(),
            arc_tool: arcs.iter().map(|a| a.mode.is_tool()).collect(),
            h_beta: arcs.iter().map(|a| (1.0 / a.time_s).powf(params.beta)).collect(),
            alpha: params.alpha,
            gamma_zero: params.gamma == 0.0,
            cap: params.step_cap.unwrap_or(4 * r.node_count()),
            slots,
            ctx,
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch { visited: vec![false; self.ctx.r.node_count()], path: Vec::new(), cand: Vec::new() }
    }

    /// Builds one ant's route. On success `scratch.path` holds the taken
    /// table entries and the route cost is returned.
    fn construct(&self, levels: &[f64], rng: &mut rng::Rng, scratch: &mut Scratch) -> Option<f64> {
        let r = self.ctx.r;
        let dest = r.destination();
        scratch.visited.fill(false);
        scratch.path.clear();
        let mut node = r.origin();
        scratch.visited[node] = true;
        let mut slot = 0;
        let mut soc = 0.0;
        let mut cost = 0.0;
        for _ in 0..self.cap {
            if node == dest {
                return Some(cost);
            }
            scratch.cand.clear();
            let mut total = 0.0;
            for e in self.slots.range(slot) {
                let Some(access) = self.slots.access[e] else { continue };
                let b = self.entry_arc[e];
                if scratch.visited[self.arc_to[b]] {
                    continue;
                }
                let ef = !self.arc_tool[b] || {
                    let (s, _) = self.ctx.tool_source(node, access, soc, b).expect("tool arc");
                    self.ctx.energy_ok(s, b)
                };
                let tau = levels[e];
                let p = if self.alpha == 1.0 { tau } else { tau.powf(self.alpha) };
                let w = if ef || self.gamma_zero { p * self.h_beta[b] } else { 0.0 };
                if w > 0.0 {
                    total += w;
                    scratch.cand.push((e, w, ef));
                }
            }
            if scratch.cand.is_empty() || total.is_nan() || total <= 0.0 {
                return None;
            }
            let x = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = scratch.cand[scratch.cand.len() - 1];
            for &c in &scratch.cand {
                acc += c.1;
                if x < acc {
                    pick = c;
                    break;
                }
            }
            let (e, _, ef) = pick;
            if !ef {
                // Only reachable with gamma = 0: the tool runs flat.
                return None;
            }
            let b = self.entry_arc[e];
            if self.arc_tool[b] {
                let access = self.slots.access[e].expect("candidate is admissible");
                let (s, _) = self.ctx.tool_source(node, access, soc, b).expect("tool arc");
                soc = s - self.ctx.need[b];
            }
            cost += self.arc_time[b];
            node = self.arc_to[b];
            scratch.visited[node] = true;
            scratch.path.push(e);
            slot = b + 1;
        }
        (node == dest).then_some(cost)
    }

    /// Re-derives pickups and SOC along a path of table entries.
    fn steps(&self, path: &[usize]) -> Vec<Step> {
        let mut soc = 0.0;
        let mut node = self.ctx.r.origin();
        path.iter()
            .map(|&e| {
                let b = self.entry_arc[e];
                let access = self.slots.access[e].expect("path entries are admissible");
                let step = match self.ctx.tool_source(node, access, soc, b) {
                    Some((s, pickup)) => {
                        soc = s - self.ctx.need[b];
                        Step { arc: b, pickup, soc_after: Some(soc) }
                    }
                    None => Step { arc: b, pickup: false, soc_after: None },
                };
                node = self.arc_to[b];
                step
            })
            .collect()
    }
}

pub fn run_aco(r: &ReducedGraph, sc: &ScenarioConfig, params: &AcoParams) -> Result<AcoOutcome, AcoError> {
    params.validate().map_err(AcoError::InvalidParams)?;
    if r.origin() == r.destination() {
        return Ok(AcoOutcome { plan: Plan::empty(), trace: Vec::new(), completed_ants: 0, discarded_ants: 0 });
    }
    let colony = Colony::new(r, sc, params);
    let mut table = PheromoneTable::from_slots(&colony.slots, params.tau0);
    let n_ants = params.n_ants;
    let parallel = rayon::current_num_threads() > 1 && n_ants >= 64;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut trace = Vec::with_capacity(params.n_iterations);
    let mut delta = vec![0.0; table.len()];
    let (mut completed, mut discarded) = (0usize, 0usize);
    let mut scratch = colony.scratch();

    for it in 0..params.n_iterations {
        let stream_base = (it * n_ants) as u64 + 1;
        delta.fill(0.0);
        let mut absorb =
            |cost: Option<f64>, path: &[usize], delta: &mut [f64], best: &mut Option<(f64, Vec<usize>)>| {
                let Some(cost) = cost else {
                    discarded += 1;
                    return;
                };
                completed += 1;
                for &e in path {
                    delta[e] += params.q_deposit / colony.arc_time[colony.entry_arc[e]];
                }
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    *best = Some((cost, path.to_vec()));
                }
            };
        if parallel {
            let results: Vec<Option<(f64, Vec<usize>)>> = (0..n_ants)
                .into_par_iter()
                .map_init(
                    || colony.scratch(),
                    |s, ant| {
                        let mut rng = rng::stream(params.seed, stream_base + ant as u64);
                        colony.construct(&table.levels, &mut rng, s).map(|c| (c, s.path.clone()))
                    },
                )
                .collect();
            for res in &results {
                match res {
                    Some((c, p)) => absorb(Some(*c), p, &mut delta, &mut best),
                    None => absorb(None, &[], &mut delta, &mut best),
                }
            }
        } else {
            for ant in 0..n_ants {
                let mut rng = rng::stream(params.seed, stream_base + ant as u64);
                let cost = colony.construct(&table.levels, &mut rng, &mut scratch);
                absorb(cost, &scratch.path, &mut delta, &mut best);
            }
        }
        if params.elitist {
            if let Some((_, path)) = &best {
                for &e in path {
                    delta[e] += params.q_deposit / colony.arc_time[colony.entry_arc[e]];
                }
            }
        }
        table.evaporate(params.rho);
        for (v, d) in table.levels.iter_mut().zip(&delta) {
            *v += d;
        }
        trace.push(best.as_ref().map(|(c, _)| *c));
    }

    let (_, path) = best.ok_or(AcoError::NoFeasiblePlan)?;
    let plan = plan_from_steps(r, &colony.steps(&path));
    Ok(AcoOutcome { plan, trace, completed_ants: completed, discarded_ants: discarded })
}
