use std::path::Path;

use emob_core::aco::AcoParams;
use emob_core::netgraph::NetworkDocument;
use emob_core::qlearn::QParams;
use emob_core::scenario::{Scenario, ScenarioDocument, ToolPolicy, UserPreference};
use emob_core::synth::{self, GridSpec};
use emob_core::{fixtures, Mode};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Where an experiment's scenario comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSource {
    /// The built-in four-node fixture with the given e-bike SOC.
    T3 {
        #[serde(default = "default_t3_soc")]
        ebike_soc: f64,
    },
    Grid {
        #[serde(default)]
        grid: GridSpec,
        #[serde(default = "default_hubs")]
        n_hubs: usize,
    },
    Inline {
        network: Box<NetworkDocument>,
        scenario: Box<ScenarioDocument>,
    },
}

fn default_t3_soc() -> f64 {
    50.0
}

fn default_hubs() -> usize {
    20
}

impl Default for ScenarioSource {
    fn default() -> Self {
        ScenarioSource::Grid { grid: GridSpec::default(), n_hubs: default_hubs() }
    }
}

impl ScenarioSource {
    pub fn load(&self, seed: u64) -> Result<Scenario, HarnessError> {
        Ok(match self {
            ScenarioSource::T3 { ebike_soc } => {
                Scenario::from_documents(&fixtures::t3_network(), &fixtures::t3_scenario_document(*ebike_soc))?
            }
            ScenarioSource::Grid { grid, n_hubs } => synth::benchmark_scenario(grid, *n_hubs, seed),
            ScenarioSource::Inline { network, scenario } => Scenario::from_documents(network, scenario)?,
        })
    }
}

/// How variant cells are formed from the factor lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Vary one factor at a time around the baseline.
    #[default]
    OneFactor,
    /// Every combination of the factor levels.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub soc: f64,
    pub distribution: ToolPolicy,
    pub preference: UserPreference,
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline { soc: 100.0, distribution: ToolPolicy::Fixed, preference: UserPreference::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub id: String,
    pub seed: u64,
    pub scenario: ScenarioSource,
    pub n_od_pairs: usize,
    pub repetitions: usize,
    pub soc_levels: Vec<f64>,
    pub distributions: Vec<ToolPolicy>,
    pub preferences: Vec<UserPreference>,
    pub baseline: Baseline,
    pub design: Design,
    pub aco: AcoParams,
    pub qlearning: QParams,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            id: "comparison".into(),
            seed: 1,
            scenario: ScenarioSource::default(),
            n_od_pairs: 100,
            repetitions: 1,
            soc_levels: vec![50.0, 100.0],
            distributions: vec![ToolPolicy::Fixed, ToolPolicy::Random],
            preferences: vec![UserPreference::default(), UserPreference::excluding(Mode::ECar)],
            baseline: Baseline::default(),
            design: Design::OneFactor,
            aco: AcoParams::default(),
            qlearning: QParams::default(),
        }
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse { path: path.into(), message: e.to_string() })
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = read_json(path)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.to_string()));
        if self.n_od_pairs == 0 {
            return bad("n_od_pairs must be at least 1");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.soc_levels.is_empty() || self.distributions.is_empty() || self.preferences.is_empty() {
            return bad("every variant list must be nonempty");
        }
        if self.soc_levels.iter().chain([&self.baseline.soc]).any(|s| !(0.0..=100.0).contains(s)) {
            return bad("SOC levels must lie in [0, 100]");
        }
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return bad("id must be a nonempty file-name-safe string");
        }
        self.aco.validate().map_err(|e| HarnessError::InvalidSpec(format!("aco: {e}")))?;
        self.qlearning.validate().map_err(|e| HarnessError::InvalidSpec(format!("qlearning: {e}")))?;
        Ok(())
    }
}

/// Hyperparameter sweep on one fixed query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub id: String,
    pub seed: u64,
    pub scenario: ScenarioSource,
    pub origin: String,
    pub destination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preference: Option<UserPreference>,
    pub ant_counts: Vec<usize>,
    pub episode_counts: Vec<usize>,
    pub repetitions: usize,
    pub aco: AcoParams,
    pub qlearning: QParams,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            id: "sweep".into(),
            seed: 1,
            scenario: ScenarioSource::T3 { ebike_soc: 50.0 },
            origin: "O".into(),
            destination: "D".into(),
            preference: None,
            ant_counts: vec![10, 100, 400, 1600],
            episode_counts: vec![100, 500, 2000],
            repetitions: 30,
            aco: AcoParams::default(),
            qlearning: QParams::default(),
        }
    }
}

impl SweepSpec {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let spec: SweepSpec = read_json(path)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::InvalidSpec("repetitions must be at least 1".into()));
        }
        if self.ant_counts.contains(&0) {
            return Err(HarnessError::InvalidSpec("ant counts must be positive".into()));
        }
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(HarnessError::InvalidSpec("id must be a nonempty file-name-safe string".into()));
        }
        Ok(())
    }
}
