use emob_core::netgraph::build_reduced_graph;
use emob_core::oracle::DEFAULT_QUANT;
use emob_core::rng::mix;
use emob_core::route::plan_on;
use emob_core::scenario::ScenarioConfig;
use emob_core::{PlannerKind, RouteError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spec::SweepSpec;
use crate::{mean_std, HarnessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub planner: PlannerKind,
    /// `n_ants` or `n_episodes`.
    pub parameter: String,
    pub value: usize,
    pub n: usize,
    /// Repetitions that returned no plan; excluded from the cost statistics.
    pub n_failed: usize,
    pub mean_cost: Option<f64>,
    pub std_cost: Option<f64>,
    pub mean_exec_s: f64,
    pub std_exec_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub id: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows for one planner in sweep order.
    pub fn rows_for(&self, planner: PlannerKind) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.planner == planner)
    }
}

fn measure(
    r: &emob_core::netgraph::ReducedGraph,
    base: &ScenarioConfig,
    planner: PlannerKind,
    parameter: &str,
    value: usize,
    spec: &SweepSpec,
) -> Result<SweepRow, HarnessError> {
    let runs: Vec<Result<(Option<f64>, f64), RouteError>> = (0..spec.repetitions)
        .into_par_iter()
        .map(|rep| {
            // The same seed list is used at every setting.
            let seed = mix(spec.seed, rep as u64);
            let mut cfg = base.clone();
            cfg.aco.seed = seed;
            cfg.qlearning.seed = seed;
            match planner {
                PlannerKind::Aco => cfg.aco.n_ants = value,
                _ => cfg.qlearning.n_episodes = value,
            }
            match plan_on(r, &cfg, planner, DEFAULT_QUANT) {
                Ok(out) => Ok((Some(out.total_time_s), out.exec_time_s)),
                Err(e) if e.is_infeasible() => Ok((None, 0.0)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut costs = Vec::new();
    let mut execs = Vec::new();
    for run in runs {
        let (cost, exec) = run?;
        costs.extend(cost);
        execs.push(exec);
    }
    let cost_stats = mean_std(&costs);
    let exec_stats = mean_std(&execs).unwrap_or((0.0, 0.0));
    Ok(SweepRow {
        planner,
        parameter: parameter.to_string(),
        value,
        n: spec.repetitions,
        n_failed: spec.repetitions - costs.len(),
        mean_cost: cost_stats.map(|s| s.0),
        std_cost: cost_stats.map(|s| s.1),
        mean_exec_s: exec_stats.0,
        std_exec_s: exec_stats.1,
    })
}

/// Mean and spread of cost and runtime per ant count and per episode count,
/// all other parameters fixed at the spec's values.
pub fn sweep_hyperparams(spec: &SweepSpec) -> Result<SweepTable, HarnessError> {
    spec.validate()?;
    let sc = spec.scenario.load(spec.seed)?;
    let mut base = sc.config.clone();
    if let Some(p) = spec.preference {
        base.preference = p;
    }
    base.aco = spec.aco.clone();
    base.qlearning = spec.qlearning.clone();
    let r =
        build_reduced_graph(&sc.graph, &spec.origin, &spec.destination, &sc.hub_nodes()).map_err(RouteError::from)?;
    let mut rows = Vec::new();
    for &n in &spec.ant_counts {
        rows.push(measure(&r, &base, PlannerKind::Aco, "n_ants", n, spec)?);
    }
    for &n in &spec.episode_counts {
        rows.push(measure(&r, &base, PlannerKind::Q, "n_episodes", n, spec)?);
    }
    Ok(SweepTable { id: spec.id.clone(), rows })
}
