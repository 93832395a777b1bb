//! One entry point for answering a route query with any planner.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aco::{run_aco, AcoError, AcoParams};
use crate::netgraph::{build_reduced_graph, validate_plan, Plan, ReducedGraph, ReducedGraphError, Violation};
use crate::oracle::{exact_optimum, OracleError, DEFAULT_QUANT};
use crate::qlearn::{run_qlearning, QError, QParams};
use crate::scenario::{Scenario, ScenarioConfig, UserPreference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Aco,
    Q,
    Oracle,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Aco, PlannerKind::Q, PlannerKind::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Aco => "aco",
            PlannerKind::Q => "q",
            PlannerKind::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown planner {0:?} (expected aco, q or oracle)")]
pub struct UnknownPlanner(pub String);

impl FromStr for PlannerKind {
    type Err = UnknownPlanner;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aco" | "mmec-aco" => Ok(PlannerKind::Aco),
            "q" | "ql" | "qlearning" | "q-learning" => Ok(PlannerKind::Q),
            "oracle" | "exact" => Ok(PlannerKind::Oracle),
            _ => Err(UnknownPlanner(s.to_string())),
        }
    }
}

/// Per-query overrides on top of the scenario's configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouteOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preference: Option<UserPreference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aco: Option<AcoParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qlearning: Option<QParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quant: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completed_ants: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discarded_ants: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_events: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_episodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<usize>,
    /// Best cost per ACO iteration, or greedy cost per Q-learning checkpoint.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteOutcome {
    pub plan: Plan,
    pub total_time_s: f64,
    pub planner: PlannerKind,
    pub exec_time_s: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error(transparent)]
    Reduced(#[from] ReducedGraphError),
    #[error("{planner}: no feasible plan")]
    NoFeasiblePlan { planner: PlannerKind, penalty_events: Option<usize> },
    #[error("aco: {0}")]
    Aco(AcoError),
    #[error("q-learning: {0}")]
    Q(QError),
    #[error("oracle: {0}")]
    Oracle(OracleError),
    /// A planner produced a plan that fails validation. Never expected.
    #[error("{planner} produced an invalid plan: {violations:?}")]
    InvalidPlan { planner: PlannerKind, violations: Vec<Violation> },
}

impl RouteError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, RouteError::NoFeasiblePlan { .. })
            || matches!(self, RouteError::Reduced(ReducedGraphError::NoFeasibleEntry(_)))
    }
}

/// Configuration actually used for a query after applying `opts`.
pub fn effective_config(sc: &ScenarioConfig, opts: &RouteOptions) -> ScenarioConfig {
    let mut cfg = sc.clone();
    if let Some(p) = opts.preference {
        cfg.preference = p;
    }
    if let Some(a) = &opts.aco {
        cfg.aco = a.clone();
    }
    if let Some(q) = &opts.qlearning {
        cfg.qlearning = q.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.aco.seed = seed;
        cfg.qlearning.seed = seed;
    }
    cfg
}

/// Runs `planner` on an already reduced graph and validates the result.
pub fn plan_on(
    r: &ReducedGraph,
    cfg: &ScenarioConfig,
    planner: PlannerKind,
    quant: u32,
) -> Result<RouteOutcome, RouteError> {
    let start = Instant::now();
    let mut diag = Diagnostics::default();
    let plan = match planner {
        PlannerKind::Aco => {
            diag.seed = Some(cfg.aco.seed);
            match run_aco(r, cfg, &cfg.aco) {
                Ok(out) => {
                    diag.iterations = Some(out.trace.len());
                    diag.completed_ants = Some(out.completed_ants);
                    diag.discarded_ants = Some(out.discarded_ants);
                    diag.trace = out.trace;
                    out.plan
                }
                Err(AcoError::NoFeasiblePlan) => {
                    return Err(RouteError::NoFeasiblePlan { planner, penalty_events: None })
                }
                Err(e) => return Err(RouteError::Aco(e)),
            }
        }
        PlannerKind::Q => {
            diag.seed = Some(cfg.qlearning.seed);
            diag.episodes = Some(cfg.qlearning.n_episodes);
            match run_qlearning(r, cfg, &cfg.qlearning) {
                Ok((trained, out)) => {
                    diag.penalty_events = Some(out.penalty_events);
                    diag.failed_episodes = Some(trained.failed_episodes);
                    diag.trace = trained.trace.iter().map(|t| t.cost).collect();
                    out.plan
                }
                Err(QError::NoPath { penalty_events, .. }) => {
                    return Err(RouteError::NoFeasiblePlan { planner, penalty_events: Some(penalty_events) })
                }
                Err(e) => return Err(RouteError::Q(e)),
            }
        }
        PlannerKind::Oracle => match exact_optimum(r, cfg, quant) {
            Ok(sol) => {
                diag.labels = Some(sol.labels_created);
                sol.plan
            }
            Err(OracleError::NoFeasiblePlan) => {
                return Err(RouteError::NoFeasiblePlan { planner, penalty_events: None })
            }
            Err(e) => return Err(RouteError::Oracle(e)),
        },
    };
    let exec_time_s = start.elapsed().as_secs_f64();
    validate_plan(&plan, r, cfg).map_err(|violations| RouteError::InvalidPlan { planner, violations })?;
    Ok(RouteOutcome { total_time_s: plan.total_time_s, plan, planner, exec_time_s, diagnostics: diag })
}

/// Builds the reduced graph for (origin, destination) and plans on it.
pub fn route(
    sc: &Scenario,
    origin: &str,
    destination: &str,
    planner: PlannerKind,
    opts: &RouteOptions,
) -> Result<RouteOutcome, RouteError> {
    let cfg = effective_config(&sc.config, opts);
    if origin == destination {
        sc.graph.require_node(origin).map_err(ReducedGraphError::Graph)?;
        let plan = Plan::empty();
        return Ok(RouteOutcome {
            total_time_s: 0.0,
            plan,
            planner,
            exec_time_s: 0.0,
            diagnostics: Diagnostics { seed: Some(cfg.aco.seed), ..Diagnostics::default() },
        });
    }
    let r = build_reduced_graph(&sc.graph, origin, destination, &sc.hub_nodes())?;
    plan_on(&r, &cfg, planner, opts.quant.unwrap_or(DEFAULT_QUANT))
}
