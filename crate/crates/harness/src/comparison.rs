use emob_core::netgraph::{build_reduced_graph, Plan, ReducedGraph};
use emob_core::oracle::DEFAULT_QUANT;
use emob_core::rng::mix;
use emob_core::route::plan_on;
use emob_core::scenario::{distribute_tools, sample_od_pairs, Scenario, ScenarioConfig, ToolPolicy, UserPreference};
use emob_core::{Mode, ModeSet, PlannerKind, RouteError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spec::{Design, ExperimentSpec};
use crate::{mean_std, HarnessError};

const OD_SALT: u64 = 0x0D0D;

/// Relative tolerance under which two plan costs count as a tie.
const TIE_TOL: f64 = 1e-9;

/// One scenario variant of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub label: String,
    pub soc: f64,
    pub distribution: ToolPolicy,
    pub preference: UserPreference,
    pub seed: u64,
    pub config: ScenarioConfig,
}

/// Inputs shared by all cells: the base scenario, its O/D sample, and the
/// cell list.
pub struct Prepared {
    pub scenario: Scenario,
    pub pairs: Vec<(String, String)>,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub cell: usize,
    pub variant: String,
    pub soc: f64,
    pub distribution: ToolPolicy,
    pub preference: String,
    pub pair: usize,
    pub from: String,
    pub to: String,
    pub repetition: usize,
    pub planner: PlannerKind,
    pub seed: u64,
    /// Plan cost in seconds; absent when the planner found no plan.
    pub cost: Option<f64>,
    pub exec_time_s: f64,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cell: usize,
    pub variant: String,
    pub pair: usize,
    pub repetition: usize,
    pub planner: PlannerKind,
    /// Iteration for ACO, episode count for Q-learning.
    pub step: usize,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub variant: String,
    /// Number of (pair, repetition) comparisons.
    pub n: usize,
    pub ql_better_frac: f64,
    pub tie_frac: f64,
    pub aco_better_frac: f64,
    pub mean_cost_ql: Option<f64>,
    pub mean_cost_aco: Option<f64>,
    pub mean_exec_ql: f64,
    pub mean_exec_aco: f64,
    /// Runs where a planner returned no plan.
    pub n_no_path: usize,
    /// Runs whose plan failed validation. Expected to be zero.
    pub n_invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub experiment: String,
    pub cells: Vec<CellSummary>,
}

pub struct ComparisonResult {
    pub records: Vec<RunRecord>,
    pub traces: Vec<TraceRow>,
    pub summary: ComparisonSummary,
}

fn preference_label(p: &UserPreference) -> String {
    if p.allowed() == ModeSet::ALL {
        return "equal".into();
    }
    let missing: Vec<&str> = Mode::ALL.into_iter().filter(|m| !p.allows(*m)).map(Mode::as_str).collect();
    format!("no-{}", missing.join("-"))
}

fn distribution_label(d: ToolPolicy) -> &'static str {
    match d {
        ToolPolicy::Fixed => "fixed",
        ToolPolicy::Random => "random",
    }
}

fn cell_levels(spec: &ExperimentSpec) -> Vec<(String, f64, ToolPolicy, UserPreference)> {
    let b = &spec.baseline;
    match spec.design {
        Design::OneFactor => {
            let mut out = Vec::new();
            for &soc in &spec.soc_levels {
                out.push((format!("soc={soc}"), soc, b.distribution, b.preference));
            }
            for &d in &spec.distributions {
                out.push((format!("dist={}", distribution_label(d)), b.soc, d, b.preference));
            }
            for p in &spec.preferences {
                out.push((format!("pref={}", preference_label(p)), b.soc, b.distribution, *p));
            }
            out
        }
        Design::Full => {
            let mut out = Vec::new();
            for &soc in &spec.soc_levels {
                for &d in &spec.distributions {
                    for p in &spec.preferences {
                        let label = format!("soc={soc}/dist={}/pref={}", distribution_label(d), preference_label(p));
                        out.push((label, soc, d, *p));
                    }
                }
            }
            out
        }
    }
}

/// Loads the scenario, samples O/D pairs and builds every cell's
/// configuration. Deterministic in the spec.
pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared, HarnessError> {
    spec.validate()?;
    let scenario = spec.scenario.load(spec.seed)?;
    let pairs = sample_od_pairs(&scenario.graph, spec.n_od_pairs, mix(spec.seed, OD_SALT))?;
    let mut cells = Vec::new();
    for (index, (label, soc, distribution, preference)) in cell_levels(spec).into_iter().enumerate() {
        let seed = mix(spec.seed, index as u64 + 1);
        let mut config =
            distribute_tools(&scenario.config, distribution, seed).with_uniform_soc(soc)?.with_preference(preference);
        config.aco = spec.aco.clone();
        config.qlearning = spec.qlearning.clone();
        cells.push(Cell { index, label, soc, distribution, preference, seed, config });
    }
    Ok(Prepared { scenario, pairs, cells })
}

/// Seed shared by both planners for one (cell, pair, repetition).
pub(crate) fn run_seed(cell_seed: u64, pair: usize, rep: usize, reps: usize) -> u64 {
    mix(cell_seed, (pair * reps + rep) as u64)
}

struct PairRuns {
    records: Vec<RunRecord>,
    traces: Vec<TraceRow>,
}

fn run_pair(
    spec: &ExperimentSpec,
    cell: &Cell,
    pair: usize,
    od: &(String, String),
    reduced: &Result<ReducedGraph, RouteError>,
) -> PairRuns {
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for rep in 0..spec.repetitions {
        let seed = run_seed(cell.seed, pair, rep, spec.repetitions);
        let mut cfg = cell.config.clone();
        cfg.aco.seed = seed;
        cfg.qlearning.seed = seed;
        for planner in [PlannerKind::Aco, PlannerKind::Q] {
            let result = match reduced {
                Ok(r) => plan_on(r, &cfg, planner, DEFAULT_QUANT),
                Err(e) => Err(e.clone()),
            };
            let mut rec = RunRecord {
                experiment: spec.id.clone(),
                cell: cell.index,
                variant: cell.label.clone(),
                soc: cell.soc,
                distribution: cell.distribution,
                preference: preference_label(&cell.preference),
                pair,
                from: od.0.clone(),
                to: od.1.clone(),
                repetition: rep,
                planner,
                seed,
                cost: None,
                exec_time_s: 0.0,
                valid: false,
                error: None,
                plan: None,
            };
            match result {
                Ok(out) => {
                    let every = cfg.qlearning.trace_every;
                    for (i, cost) in out.diagnostics.trace.iter().enumerate() {
                        let step = match planner {
                            PlannerKind::Q => (i + 1) * every,
                            _ => i + 1,
                        };
                        traces.push(TraceRow {
                            cell: cell.index,
                            variant: cell.label.clone(),
                            pair,
                            repetition: rep,
                            planner,
                            step,
                            cost: *cost,
                        });
                    }
                    rec.cost = Some(out.total_time_s);
                    rec.exec_time_s = out.exec_time_s;
                    rec.valid = true;
                    rec.plan = Some(out.plan);
                }
                Err(e) => {
                    // A planner that honestly reports no plan is still a
                    // valid outcome; only a plan failing validation is not.
                    rec.valid = !matches!(e, RouteError::InvalidPlan { .. });
                    rec.error = Some(e.to_string());
                }
            }
            records.push(rec);
        }
    }
    PairRuns { records, traces }
}

fn summarize(cell: &Cell, records: &[RunRecord]) -> CellSummary {
    let (mut ql, mut tie, mut aco, mut n) = (0usize, 0usize, 0usize, 0usize);
    let mut costs_q = Vec::new();
    let mut costs_a = Vec::new();
    let mut exec_q = Vec::new();
    let mut exec_a = Vec::new();
    let mut n_no_path = 0;
    let mut n_invalid = 0;
    for r in records {
        if !r.valid {
            n_invalid += 1;
        } else if r.cost.is_none() {
            n_no_path += 1;
        }
        match r.planner {
            PlannerKind::Q => {
                exec_q.push(r.exec_time_s);
                costs_q.extend(r.cost);
            }
            _ => {
                exec_a.push(r.exec_time_s);
                costs_a.extend(r.cost);
            }
        }
    }
    // Records come in (aco, q) pairs per repetition.
    for w in records.chunks_exact(2) {
        let ca = w[0].cost.unwrap_or(f64::INFINITY);
        let cq = w[1].cost.unwrap_or(f64::INFINITY);
        n += 1;
        if ca == cq || (ca - cq).abs() <= TIE_TOL * ca.abs().max(cq.abs()) {
            tie += 1;
        } else if cq < ca {
            ql += 1;
        } else {
            aco += 1;
        }
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    CellSummary {
        variant: cell.label.clone(),
        n,
        ql_better_frac: frac(ql),
        tie_frac: frac(tie),
        aco_better_frac: frac(aco),
        mean_cost_ql: mean_std(&costs_q).map(|m| m.0),
        mean_cost_aco: mean_std(&costs_a).map(|m| m.0),
        mean_exec_ql: mean_std(&exec_q).map_or(0.0, |m| m.0),
        mean_exec_aco: mean_std(&exec_a).map_or(0.0, |m| m.0),
        n_no_path,
        n_invalid,
    }
}

/// Runs both planners on every (cell, pair, repetition) and summarizes each
/// cell. Output order and content are independent of thread scheduling.
pub fn run_comparison(spec: &ExperimentSpec) -> Result<ComparisonResult, HarnessError> {
    let prepared = prepare(spec)?;
    let hubs = prepared.scenario.hub_nodes();
    let reduced: Vec<Result<ReducedGraph, RouteError>> = prepared
        .pairs
        .par_iter()
        .map(|(o, d)| build_reduced_graph(&prepared.scenario.graph, o, d, &hubs).map_err(RouteError::from))
        .collect();
    let mut records = Vec::new();
    let mut traces = Vec::new();
    let mut cells = Vec::new();
    for cell in &prepared.cells {
        let runs: Vec<PairRuns> =
            prepared.pairs.par_iter().enumerate().map(|(i, od)| run_pair(spec, cell, i, od, &reduced[i])).collect();
        let start = records.len();
        for r in runs {
            records.extend(r.records);
            traces.extend(r.traces);
        }
        cells.push(summarize(cell, &records[start..]));
    }
    Ok(ComparisonResult { records, traces, summary: ComparisonSummary { experiment: spec.id.clone(), cells } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_factor_cells_around_baseline() {
        let spec = ExperimentSpec::default();
        let labels: Vec<String> = cell_levels(&spec).into_iter().map(|c| c.0).collect();
        assert_eq!(labels, ["soc=50", "soc=100", "dist=fixed", "dist=random", "pref=equal", "pref=no-ECar"]);
        let full = ExperimentSpec { design: Design::Full, ..ExperimentSpec::default() };
        assert_eq!(cell_levels(&full).len(), 8);
    }
}
