//! Tabular Q-learning over the reduced graph.
//!
//! The state is the current node; an action is one of its out-arcs (a mode
//! and a successor). Rewards are negative arc times, or `penalty` when the
//! ridden tool runs out of charge. Carried SOC is tracked during episodes
//! but is not part of the state, so two visits to a node with different
//! charge share their Q-values.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::mode::Mode;
use crate::moves::{plan_from_steps, Context, SlotTable, Step};
use crate::netgraph::{Plan, ReducedGraph};
use crate::rng;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QParams {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the episodes over which epsilon decays linearly.
    pub decay_fraction: f64,
    pub n_episodes: usize,
    pub penalty: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<usize>,
    /// Greedy evaluation interval for the training trace.
    pub trace_every: usize,
    pub seed: u64,
}

impl Default for QParams {
    fn default() -> Self {
        QParams {
            learning_rate: 0.1,
            discount: 0.95,
            epsilon_start: 0.9,
            epsilon_end: 0.05,
            decay_fraction: 0.8,
            n_episodes: 2000,
            penalty: -1e6,
            step_cap: None,
            trace_every: 50,
            seed: 0,
        }
    }
}

impl QParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err("learning_rate must lie in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err("discount must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err("epsilon must lie in [0, 1]".into());
        }
        if !(self.decay_fraction > 0.0 && self.decay_fraction <= 1.0) {
            return Err("decay_fraction must lie in (0, 1]".into());
        }
        if !(self.penalty.is_finite() && self.penalty < 0.0) {
            return Err("penalty must be a finite negative reward".into());
        }
        if self.step_cap == Some(0) || self.trace_every == 0 {
            return Err("step_cap and trace_every must be at least 1".into());
        }
        Ok(())
    }

    /// Exploration rate for episode `episode`.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let span = self.decay_fraction * self.n_episodes as f64;
        let f = if span > 0.0 { (episode as f64 / span).min(1.0) } else { 1.0 };
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * f
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QError {
    #[error("no state-action pair ({state}, {action})")]
    UnknownAction { state: usize, action: usize },
    #[error("no feasible action")]
    DeadEnd,
    #[error("greedy policy finds no path ({reason})")]
    NoPath { reason: NoPathReason, penalty_events: usize },
    #[error("penalty {penalty} is not below -(step cap x longest arc) = {bound}")]
    PenaltyTooWeak { penalty: f64, bound: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoPathReason {
    DeadEnd,
    StepCap,
}

impl std::fmt::Display for NoPathReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoPathReason::DeadEnd => "dead end",
            NoPathReason::StepCap => "step cap reached",
        })
    }
}

/// Q-values per node, aligned with the node's out-arcs in the reduced graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QTable {
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(r: &ReducedGraph) -> Self {
        let mut offset = Vec::with_capacity(r.node_count() + 1);
        offset.push(0);
        for u in 0..r.node_count() {
            offset.push(offset[u] + r.out_arcs(u).len());
        }
        let n = offset[r.node_count()];
        QTable { offset, values: vec![0.0; n] }
    }

    /// Table with explicit rows, for tests and inspection.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let mut offset = vec![0];
        let mut values = Vec::new();
        for row in rows {
            values.extend(row);
            offset.push(values.len());
        }
        QTable { offset, values }
    }

    pub fn n_states(&self) -> usize {
        self.offset.len() - 1
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[self.offset[state]..self.offset[state + 1]]
    }

    pub fn get(&self, state: usize, action: usize) -> Option<f64> {
        self.index(state, action).map(|i| self.values[i])
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) -> Result<(), QError> {
        let i = self.index(state, action).ok_or(QError::UnknownAction { state, action })?;
        self.values[i] = value;
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(&self, state: usize, action: usize) -> Option<usize> {
        if state + 1 >= self.offset.len() {
            return None;
        }
        let i = self.offset[state] + action;
        (i < self.offset[state + 1]).then_some(i)
    }
}

/// `(1 - lr) * q + lr * (reward + discount * next_max)`, where a terminal
/// successor (`next_max = None`) contributes 0.
pub fn q_target(q: f64, reward: f64, next_max: Option<f64>, learning_rate: f64, discount: f64) -> f64 {
    (1.0 - learning_rate) * q + learning_rate * (reward + discount * next_max.unwrap_or(0.0))
}

/// Applies one update to `Q(state, action)` and returns the new value.
pub fn q_update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_max: Option<f64>,
    params: &QParams,
) -> Result<f64, QError> {
    let i = q.index(state, action).ok_or(QError::UnknownAction { state, action })?;
    let v = q_target(q.values[i], reward, next_max, params.learning_rate, params.discount);
    q.values[i] = v;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReward {
    pub reward: f64,
    pub soc: f64,
    /// The tool ran out of charge: the episode ends unsuccessfully.
    pub depleted: bool,
}

pub fn step_reward(sc: &ScenarioConfig, carried_soc: f64, mode: Mode, arc_time: f64, params: &QParams) -> StepReward {
    if mode == Mode::Walk {
        return StepReward { reward: -arc_time, soc: carried_soc, depleted: false };
    }
    if sc.feasible_transition(carried_soc, mode, arc_time) {
        StepReward { reward: -arc_time, soc: carried_soc - sc.energy_required(mode, arc_time), depleted: false }
    } else {
        StepReward { reward: params.penalty, soc: carried_soc, depleted: true }
    }
}

/// Epsilon-greedy choice among `feasible` action indices of `row`. The
/// greedy branch takes the first maximum, so ties go to the lowest index,
/// which is the lexicographic (mode, successor) order of the out-arcs.
pub fn select_action(row: &[f64], feasible: &[usize], epsilon: f64, rng: &mut rng::Rng) -> Result<usize, QError> {
    if feasible.is_empty() {
        return Err(QError::DeadEnd);
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(feasible[rng.random_range(0..feasible.len())]);
    }
    Ok(argmax(row, feasible.iter().copied()).expect("nonempty"))
}

fn argmax(row: &[f64], actions: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for a in actions {
        if best.is_none_or(|(_, v)| row[a] > v) {
            best = Some((a, row[a]));
        }
    }
    best.map(|(a, _)| a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub episode: usize,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trained {
    pub table: QTable,
    pub trace: Vec<TracePoint>,
    /// Episodes that ended with a depleted tool or in a dead end.
    pub failed_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extracted {
    pub plan: Plan,
    /// Times the greedy choice would have ridden a tool without enough charge.
    pub penalty_events: usize,
}

struct Env<'a> {
    ctx: Context<'a>,
    slots: SlotTable,
    cap: usize,
}

/// Agent position during an episode or rollout.
struct Walker {
    node: usize,
    slot: usize,
    soc: f64,
    visited: Vec<bool>,
}

impl<'a> Env<'a> {
    fn new(r: &'a ReducedGraph, sc: &ScenarioConfig, step_cap: Option<usize>) -> Self {
        let ctx = Context::new(r, sc);
        let slots = SlotTable::build(&ctx, false);
        Env { ctx, slots, cap: step_cap.unwrap_or(4 * r.node_count()) }
    }

    fn start(&self) -> Walker {
        let mut visited = vec![false; self.ctx.r.node_count()];
        visited[self.ctx.r.origin()] = true;
        Walker { node: self.ctx.r.origin(), slot: 0, soc: 0.0, visited }
    }

    fn arc(&self, w: &Walker, k: usize) -> usize {
        self.ctx.r.out_arcs(w.node)[k]
    }

    /// Admissible actions (preference, docks, not yet visited), as out-arc
    /// positions.
    fn actions(&self, w: &Walker, out: &mut Vec<usize>) {
        out.clear();
        let r = self.ctx.r;
        let base = self.slots.offset[w.slot];
        for (k, &b) in r.out_arcs(w.node).iter().enumerate() {
            if self.slots.access[base + k].is_some() && !w.visited[r.arc(b).to] {
                out.push(k);
            }
        }
    }

    /// SOC riding into action `k` and whether it picks up a tool.
    fn source(&self, w: &Walker, k: usize) -> Option<(f64, bool)> {
        let e = self.slots.offset[w.slot] + k;
        let access = self.slots.access[e].expect("admissible action");
        self.ctx.tool_source(w.node, access, w.soc, self.arc(w, k))
    }

    fn energy_ok(&self, w: &Walker, k: usize) -> bool {
        self.source(w, k).is_none_or(|(s, _)| self.ctx.energy_ok(s, self.arc(w, k)))
    }

    fn advance(&self, w: &mut Walker, k: usize, soc_after: f64) {
        let b = self.arc(w, k);
        w.node = self.ctx.r.arc(b).to;
        w.visited[w.node] = true;
        w.slot = b + 1;
        w.soc = soc_after;
    }

    fn greedy(&self, q: &QTable) -> Result<Extracted, QError> {
        let r = self.ctx.r;
        let mut w = self.start();
        let mut steps = Vec::new();
        let mut acts = Vec::new();
        let mut penalty_events = 0;
        for _ in 0..self.cap {
            if w.node == r.destination() {
                return Ok(Extracted { plan: plan_from_steps(r, &steps), penalty_events });
            }
            self.actions(&w, &mut acts);
            let row = q.row(w.node);
            let Some(mut k) = argmax(row, acts.iter().copied()) else {
                return Err(QError::NoPath { reason: NoPathReason::DeadEnd, penalty_events });
            };
            if !self.energy_ok(&w, k) {
                penalty_events += 1;
                match argmax(row, acts.iter().copied().filter(|&a| self.energy_ok(&w, a))) {
                    Some(a) => k = a,
                    None => return Err(QError::NoPath { reason: NoPathReason::DeadEnd, penalty_events }),
                }
            }
            let b = self.arc(&w, k);
            let (soc_after, step) = match self.source(&w, k) {
                Some((s, pickup)) => {
                    let left = s - self.ctx.need[b];
                    (left, Step { arc: b, pickup, soc_after: Some(left) })
                }
                None => (w.soc, Step { arc: b, pickup: false, soc_after: None }),
            };
            steps.push(step);
            self.advance(&mut w, k, soc_after);
        }
        if w.node == r.destination() {
            return Ok(Extracted { plan: plan_from_steps(r, &steps), penalty_events });
        }
        Err(QError::NoPath { reason: NoPathReason::StepCap, penalty_events })
    }
}

pub fn train(r: &ReducedGraph, sc: &ScenarioConfig, params: &QParams) -> Result<Trained, QError> {
    params.validate().map_err(QError::InvalidParams)?;
    let env = Env::new(r, sc, params.step_cap);
    let longest = r.arcs().iter().map(|a| a.time_s).fold(0.0, f64::max);
    let bound = -(env.cap as f64) * longest;
    if params.penalty >= bound {
        return Err(QError::PenaltyTooWeak { penalty: params.penalty, bound });
    }
    let mut q = QTable::new(r);
    let mut trace = Vec::new();
    let mut failed = 0;
    if r.origin() == r.destination() {
        return Ok(Trained { table: q, trace, failed_episodes: 0 });
    }
    let mut rng = rng::stream(params.seed, 0x51);
    let mut acts = Vec::new();
    let mut next_acts = Vec::new();

    for episode in 0..params.n_episodes {
        let eps = params.epsilon_at(episode);
        let mut w = env.start();
        for _ in 0..env.cap {
            env.actions(&w, &mut acts);
            let Ok(k) = select_action(q.row(w.node), &acts, eps, &mut rng) else { break };
            let b = env.arc(&w, k);
            let arc = r.arc(b);
            let carried = env.source(&w, k).map_or(w.soc, |(s, _)| s);
            let step = step_reward(sc, carried, arc.mode, arc.time_s, params);
            let s = w.node;
            if step.depleted {
                q_update(&mut q, s, k, step.reward, None, params)?;
                failed += 1;
                break;
            }
            env.advance(&mut w, k, step.soc);
            if w.node == r.destination() {
                q_update(&mut q, s, k, step.reward, None, params)?;
                break;
            }
            env.actions(&w, &mut next_acts);
            let row = q.row(w.node);
            let next_max = next_acts.iter().filter(|&&a| env.energy_ok(&w, a)).map(|&a| row[a]).reduce(f64::max);
            match next_max {
                Some(m) => {
                    q_update(&mut q, s, k, step.reward, Some(m), params)?;
                }
                None => {
                    q_update(&mut q, s, k, params.penalty, None, params)?;
                    failed += 1;
                    break;
                }
            }
        }
        if (episode + 1) % params.trace_every == 0 {
            let cost = env.greedy(&q).ok().map(|x| x.plan.total_time_s);
            trace.push(TracePoint { episode: episode + 1, cost });
        }
    }
    Ok(Trained { table: q, trace, failed_episodes: failed })
}

/// Greedy rollout from the origin with live SOC. When the best action would
/// ride a tool without enough charge, the best chargeable action is taken
/// instead and a penalty event is counted.
pub fn extract_policy_path(q: &QTable, r: &ReducedGraph, sc: &ScenarioConfig) -> Result<Extracted, QError> {
    extract_with_cap(q, r, sc, None)
}

pub fn extract_with_cap(
    q: &QTable,
    r: &ReducedGraph,
    sc: &ScenarioConfig,
    step_cap: Option<usize>,
) -> Result<Extracted, QError> {
    if r.origin() == r.destination() {
        return Ok(Extracted { plan: Plan::empty(), penalty_events: 0 });
    }
    Env::new(r, sc, step_cap).greedy(q)
}

/// Trains and extracts in one go.
pub fn run_qlearning(r: &ReducedGraph, sc: &ScenarioConfig, params: &QParams) -> Result<(Trained, Extracted), QError> {
    let trained = train(r, sc, params)?;
    let extracted = extract_with_cap(&trained.table, r, sc, params.step_cap)?;
    Ok((trained, extracted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netgraph::validate_plan;
    use crate::scenario::UserPreference;

    #[test]
    fn update_rule_examples() {
        assert!((q_target(0.0, -300.0, Some(-600.0), 0.1, 0.9) - -84.0).abs() < 1e-12);
        assert_eq!(q_target(0.0, -300.0, None, 1.0, 0.9), -300.0);
        assert_eq!(q_target(-42.0, -300.0, Some(-1.0), 0.0, 0.9), -42.0);
        let mut q = QTable::from_rows(vec![vec![0.0]]);
        assert!(matches!(q_update(&mut q, 0, 3, 0.0, None, &QParams::default()), Err(QError::UnknownAction { .. })));
    }

    #[test]
    fn rewards() {
        let sc = fixtures::t3(50.0);
        let p = QParams::default();
        assert_eq!(
            step_reward(&sc.config, 0.0, Mode::Walk, 600.0, &p),
            StepReward { reward: -600.0, soc: 0.0, depleted: false }
        );
        assert_eq!(
            step_reward(&sc.config, 50.0, Mode::EBike, 300.0, &p),
            StepReward { reward: -300.0, soc: 20.0, depleted: false }
        );
        let s = step_reward(&sc.config, 20.0, Mode::EBike, 300.0, &p);
        assert!(s.depleted && s.reward == -1e6);
    }

    #[test]
    fn selection() {
        let mut rng = rng::stream(1, 1);
        assert_eq!(select_action(&[-100.0, -50.0], &[0, 1], 0.0, &mut rng), Ok(1));
        assert_eq!(select_action(&[-5.0, -5.0], &[0, 1], 0.0, &mut rng), Ok(0));
        assert_eq!(select_action(&[0.0, 0.0, -1.0], &[2], 1.0, &mut rng), Ok(2));
        assert_eq!(select_action(&[], &[], 0.5, &mut rng), Err(QError::DeadEnd));
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[select_action(&[0.0; 4], &[0, 1, 2, 3], 1.0, &mut rng).unwrap()] += 1;
        }
        assert!(counts.iter().all(|&c| (2350..=2650).contains(&c)), "{counts:?}");
    }

    #[test]
    fn epsilon_schedule() {
        let p = QParams { n_episodes: 100, ..QParams::default() };
        assert_eq!(p.epsilon_at(0), 0.9);
        assert!((p.epsilon_at(40) - 0.475).abs() < 1e-12);
        assert!((p.epsilon_at(80) - 0.05).abs() < 1e-12);
        assert!((p.epsilon_at(99) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn t3_training() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let p = QParams { seed: 5, ..QParams::default() };
        let (trained, out) = run_qlearning(&r, &sc.config, &p).unwrap();
        assert_eq!(out.plan.total_time_s, 1050.0);
        assert_eq!(validate_plan(&out.plan, &r, &sc.config), Ok(()));
        assert_eq!(trained.trace.len(), 40);

        let no_car = sc.config.with_preference(UserPreference::excluding(Mode::ECar));
        let (_, out) = run_qlearning(&r, &no_car, &p).unwrap();
        assert_eq!(out.plan.total_time_s, 1200.0);
    }

    #[test]
    fn untrained_table_follows_tie_break() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let p = QParams { n_episodes: 0, ..QParams::default() };
        let trained = train(&r, &sc.config, &p).unwrap();
        assert!(trained.table.values().iter().all(|&v| v == 0.0));
        let out = extract_policy_path(&trained.table, &r, &sc.config).unwrap();
        assert_eq!(validate_plan(&out.plan, &r, &sc.config), Ok(()));
        // Walk sorts first and "D" before "H1": the direct walk.
        assert_eq!(out.plan.total_time_s, 1500.0);
    }

    #[test]
    fn penalty_must_dominate_plan_times() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let p = QParams { penalty: -10.0, ..QParams::default() };
        assert!(matches!(train(&r, &sc.config, &p), Err(QError::PenaltyTooWeak { .. })));
    }
}
