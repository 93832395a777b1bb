//! Scenario state: hubs and their tools, energy model, user preference,
//! speed profile, planner parameters, and the generators used by the
//! benchmark harness.

mod energy;
mod generators;
mod profile;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use energy::{EnergyModel, SOC_EPS};
pub use generators::{distribute_tools, sample_od_pairs, ToolPolicy, DEFAULT_TOOL_SOC};
pub use profile::{ClockOutOfRange, CongestionWindow, SpeedProfile, DAY_SECONDS};

use crate::aco::AcoParams;
use crate::mode::{Mode, ModeSet};
use crate::netgraph::{load_graph, GraphError, MultiModalGraph, NetworkDocument};
use crate::qlearn::QParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Malformed(String),
    #[error("network: scenario does not reference a network")]
    MissingNetwork,
    #[error("network: unknown network {0:?}")]
    UnknownNetwork(String),
    #[error("network: {0}")]
    Network(GraphError),
    #[error("{field}: hub node {node:?} is not in the network")]
    UnknownHubNode { field: String, node: String },
    #[error("{field}: hub {node:?} listed twice")]
    DuplicateHub { field: String, node: String },
    #[error("{field}: SOC {soc} outside [0, 100]")]
    SocOutOfRange { field: String, soc: f64 },
    #[error("{field}: walking is not a tool")]
    ToolIsWalk { field: String },
    #[error("{field}: hub does not dock {mode}")]
    ToolNotDocked { field: String, mode: Mode },
    #[error("{field}: hub already holds a {mode}")]
    DuplicateTool { field: String, mode: Mode },
    #[error("{field}: negative or non-finite rate for {mode}")]
    NegativeRate { field: String, mode: Mode },
    #[error("{field}: walking consumes no energy")]
    WalkRate { field: String },
    #[error("{field}: speed for {mode} must be positive")]
    InvalidSpeed { field: String, mode: Mode },
    #[error("{field}: {reason}")]
    InvalidCongestion { field: String, reason: String },
    #[error("clock_s: {clock} outside [0, 86400)")]
    ClockOutOfRange { clock: f64 },
    #[error("{field}: {reason}")]
    InvalidParams { field: String, reason: String },
    #[error("requested {requested} O/D pairs but only {available} are reachable")]
    NotEnoughPairs { requested: usize, available: usize },
    #[error("{0}")]
    InvalidRequest(String),
}

impl ScenarioError {
    /// Document path of the offending value, when there is one.
    pub fn field(&self) -> Option<&str> {
        use ScenarioError::*;
        match self {
            MissingNetwork | UnknownNetwork(_) | Network(_) => Some("network"),
            UnknownHubNode { field, .. }
            | DuplicateHub { field, .. }
            | SocOutOfRange { field, .. }
            | ToolIsWalk { field }
            | ToolNotDocked { field, .. }
            | DuplicateTool { field, .. }
            | NegativeRate { field, .. }
            | WalkRate { field }
            | InvalidSpeed { field, .. }
            | InvalidCongestion { field, .. }
            | InvalidParams { field, .. } => Some(field),
            ClockOutOfRange { .. } => Some("clock_s"),
            Malformed(_) | NotEnoughPairs { .. } | InvalidRequest(_) => None,
        }
    }

    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        use ScenarioError::*;
        match self {
            Malformed(_) => "Malformed",
            MissingNetwork => "MissingNetwork",
            UnknownNetwork(_) => "UnknownNetwork",
            Network(_) => "InvalidNetwork",
            UnknownHubNode { .. } => "UnknownHubNode",
            DuplicateHub { .. } => "DuplicateHub",
            SocOutOfRange { .. } => "SocOutOfRange",
            ToolIsWalk { .. } => "ToolIsWalk",
            ToolNotDocked { .. } => "ToolNotDocked",
            DuplicateTool { .. } => "DuplicateTool",
            NegativeRate { .. } => "NegativeRate",
            WalkRate { .. } => "WalkRate",
            InvalidSpeed { .. } => "InvalidSpeed",
            InvalidCongestion { .. } => "InvalidCongestion",
            ClockOutOfRange { .. } => "ClockOutOfRange",
            InvalidParams { .. } => "InvalidParams",
            NotEnoughPairs { .. } => "NotEnoughPairs",
            InvalidRequest(_) => "InvalidRequest",
        }
    }
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

/// Either the name of a network known to the loader or an inline document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkRef {
    Name(String),
    Inline(NetworkDocument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDocument {
    pub mode: Mode,
    pub soc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubDocument {
    pub node: String,
    pub docks: Vec<Mode>,
    #[serde(default)]
    pub tools: Vec<ToolDocument>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyDocument {
    #[serde(default)]
    pub rate_per_100s: BTreeMap<Mode, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceDocument {
    pub allowed: Vec<Mode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    #[serde(default)]
    pub base_speed: BTreeMap<Mode, f64>,
    #[serde(default)]
    pub congestion: Vec<CongestionWindow>,
}

/// Scenario configuration as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkRef>,
    pub hubs: Vec<HubDocument>,
    #[serde(default)]
    pub energy: EnergyDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<PreferenceDocument>,
    #[serde(default)]
    pub profile: ProfileDocument,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clock_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aco: Option<AcoParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qlearning: Option<QParams>,
}

impl ScenarioDocument {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Malformed(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Validated configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToolState {
    pub mode: Mode,
    pub soc: f64,
}

/// A hub docks a set of tool types and holds at most one tool per type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EHub {
    pub node: String,
    pub docks: ModeSet,
    pub tools: Vec<ToolState>,
}

impl EHub {
    pub fn tool(&self, mode: Mode) -> Option<&ToolState> {
        self.tools.iter().find(|t| t.mode == mode)
    }
}

/// Modes the user accepts. Walking is always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserPreference {
    allowed: ModeSet,
}

impl Default for UserPreference {
    fn default() -> Self {
        UserPreference { allowed: ModeSet::ALL }
    }
}

impl UserPreference {
    pub fn new(allowed: impl IntoIterator<Item = Mode>) -> Self {
        UserPreference { allowed: allowed.into_iter().collect::<ModeSet>().with(Mode::Walk) }
    }

    pub fn excluding(mode: Mode) -> Self {
        UserPreference::new(Mode::ALL.into_iter().filter(|m| *m != mode))
    }

    pub fn allowed(&self) -> ModeSet {
        self.allowed
    }

    #[inline]
    pub fn allows(&self, mode: Mode) -> bool {
        self.allowed.contains(mode)
    }
}

impl Serialize for UserPreference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PreferenceDocument { allowed: self.allowed.iter().collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UserPreference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(UserPreference::new(PreferenceDocument::deserialize(d)?.allowed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Name of the referenced network, when it was not inline.
    pub network: Option<String>,
    pub hubs: Vec<EHub>,
    pub energy: EnergyModel,
    pub preference: UserPreference,
    pub profile: SpeedProfile,
    pub seed: u64,
    pub clock_s: f64,
    pub aco: AcoParams,
    pub qlearning: QParams,
}

impl ScenarioConfig {
    pub fn hub(&self, node: &str) -> Option<&EHub> {
        self.hubs.iter().find(|h| h.node == node)
    }

    pub fn hub_nodes(&self) -> Vec<&str> {
        self.hubs.iter().map(|h| h.node.as_str()).collect()
    }

    pub fn tool_count(&self) -> usize {
        self.hubs.iter().map(|h| h.tools.len()).sum()
    }

    pub fn energy_required(&self, mode: Mode, ride_seconds: f64) -> f64 {
        self.energy.energy_required(mode, ride_seconds)
    }

    /// Binary energy factor of riding `mode` for `ride_seconds` on `carried_soc`.
    pub fn feasible_transition(&self, carried_soc: f64, mode: Mode, ride_seconds: f64) -> bool {
        self.energy.feasible(carried_soc, mode, ride_seconds)
    }

    pub fn edge_speed(&self, mode: Mode, clock_s: f64) -> Result<f64, ScenarioError> {
        self.profile.speed(mode, clock_s).map_err(|_| ScenarioError::ClockOutOfRange { clock: clock_s })
    }

    pub fn with_preference(&self, preference: UserPreference) -> Self {
        ScenarioConfig { preference, ..self.clone() }
    }

    /// Sets every tool's SOC to `soc`.
    pub fn with_uniform_soc(&self, soc: f64) -> Result<Self, ScenarioError> {
        check_soc("soc", soc)?;
        let mut next = self.clone();
        for hub in &mut next.hubs {
            for tool in &mut hub.tools {
                tool.soc = soc;
            }
        }
        Ok(next)
    }

    /// Sets the SOC of one tool.
    pub fn with_tool_soc(&self, node: &str, mode: Mode, soc: f64) -> Result<Self, ScenarioError> {
        check_soc("soc", soc)?;
        let mut next = self.clone();
        let tool = next
            .hubs
            .iter_mut()
            .find(|h| h.node == node)
            .and_then(|h| h.tools.iter_mut().find(|t| t.mode == mode))
            .ok_or_else(|| ScenarioError::InvalidRequest(format!("no {mode} at hub {node:?}")))?;
        tool.soc = soc;
        Ok(next)
    }

    /// Serializes back to a document, referencing `network`.
    pub fn to_document(&self, network: Option<NetworkRef>) -> ScenarioDocument {
        ScenarioDocument {
            network,
            hubs: self
                .hubs
                .iter()
                .map(|h| HubDocument {
                    node: h.node.clone(),
                    docks: h.docks.iter().collect(),
                    tools: h.tools.iter().map(|t| ToolDocument { mode: t.mode, soc: t.soc }).collect(),
                })
                .collect(),
            energy: EnergyDocument {
                rate_per_100s: Mode::TOOLS.into_iter().map(|m| (m, self.energy.rate(m))).collect(),
            },
            preference: Some(PreferenceDocument { allowed: self.preference.allowed().iter().collect() }),
            profile: ProfileDocument {
                base_speed: Mode::ALL.into_iter().map(|m| (m, *self.profile.base_speed.get(m))).collect(),
                congestion: self.profile.congestion.clone(),
            },
            seed: self.seed,
            clock_s: self.clock_s,
            aco: Some(self.aco.clone()),
            qlearning: Some(self.qlearning.clone()),
        }
    }
}

fn check_soc(field: &str, soc: f64) -> Result<(), ScenarioError> {
    if soc.is_finite() && (0.0..=100.0).contains(&soc) {
        Ok(())
    } else {
        Err(ScenarioError::SocOutOfRange { field: field.to_string(), soc })
    }
}

/// Validates the speed-profile part of a document.
pub fn parse_profile(doc: &ProfileDocument) -> Result<SpeedProfile, ScenarioError> {
    let mut profile = SpeedProfile::default();
    for (&mode, &speed) in &doc.base_speed {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(ScenarioError::InvalidSpeed { field: format!("profile.base_speed.{mode}"), mode });
        }
        profile.base_speed.set(mode, speed);
    }
    let mut windows = doc.congestion.clone();
    for (i, w) in windows.iter().enumerate() {
        let field = format!("profile.congestion[{i}]");
        let bad = |reason: &str| ScenarioError::InvalidCongestion { field: field.clone(), reason: reason.to_string() };
        if !(w.mult.is_finite() && w.mult > 0.0 && w.mult <= 1.0) {
            return Err(bad("multiplier must lie in (0, 1]"));
        }
        if !(0.0 <= w.from_s && w.from_s < w.to_s && w.to_s <= DAY_SECONDS) {
            return Err(bad("window must satisfy 0 <= from_s < to_s <= 86400"));
        }
    }
    windows.sort_by(|a, b| a.from_s.total_cmp(&b.from_s));
    if windows.windows(2).any(|p| p[1].from_s < p[0].to_s) {
        return Err(ScenarioError::InvalidCongestion {
            field: "profile.congestion".into(),
            reason: "windows overlap".into(),
        });
    }
    profile.congestion = windows;
    Ok(profile)
}

/// Validates a scenario document against an already-built graph.
pub fn load_scenario(doc: &ScenarioDocument, g: &MultiModalGraph) -> Result<ScenarioConfig, ScenarioError> {
    if !(doc.clock_s.is_finite() && (0.0..DAY_SECONDS).contains(&doc.clock_s)) {
        return Err(ScenarioError::ClockOutOfRange { clock: doc.clock_s });
    }
    let profile = parse_profile(&doc.profile)?;

    let mut hubs: Vec<EHub> = Vec::with_capacity(doc.hubs.len());
    for (i, h) in doc.hubs.iter().enumerate() {
        let field = format!("hubs[{i}]");
        if g.node_index(&h.node).is_none() {
            return Err(ScenarioError::UnknownHubNode { field: format!("{field}.node"), node: h.node.clone() });
        }
        if hubs.iter().any(|x| x.node == h.node) {
            return Err(ScenarioError::DuplicateHub { field: format!("{field}.node"), node: h.node.clone() });
        }
        let docks: ModeSet = h.docks.iter().copied().filter(|m| m.is_tool()).collect();
        let mut tools: Vec<ToolState> = Vec::with_capacity(h.tools.len());
        for (j, t) in h.tools.iter().enumerate() {
            let tfield = format!("{field}.tools[{j}]");
            if t.mode == Mode::Walk {
                return Err(ScenarioError::ToolIsWalk { field: format!("{tfield}.mode") });
            }
            check_soc(&format!("{tfield}.soc"), t.soc)?;
            if !docks.contains(t.mode) {
                return Err(ScenarioError::ToolNotDocked { field: format!("{tfield}.mode"), mode: t.mode });
            }
            if tools.iter().any(|x| x.mode == t.mode) {
                return Err(ScenarioError::DuplicateTool { field: format!("{tfield}.mode"), mode: t.mode });
            }
            tools.push(ToolState { mode: t.mode, soc: t.soc });
        }
        tools.sort_by_key(|t| t.mode);
        hubs.push(EHub { node: h.node.clone(), docks, tools });
    }

    for (&mode, &rate) in &doc.energy.rate_per_100s {
        let field = format!("energy.rate_per_100s.{mode}");
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(ScenarioError::NegativeRate { field, mode });
        }
        if mode == Mode::Walk && rate != 0.0 {
            return Err(ScenarioError::WalkRate { field });
        }
    }
    let energy =
        EnergyModel::new(doc.energy.rate_per_100s.iter().map(|(m, r)| (*m, *r))).expect("rates validated above");

    let preference = doc
        .preference
        .as_ref()
        .map_or_else(UserPreference::default, |p| UserPreference::new(p.allowed.iter().copied()));

    let aco = doc.aco.clone().unwrap_or_default();
    aco.validate().map_err(|reason| ScenarioError::InvalidParams { field: "aco".into(), reason })?;
    let qlearning = doc.qlearning.clone().unwrap_or_default();
    qlearning.validate().map_err(|reason| ScenarioError::InvalidParams { field: "qlearning".into(), reason })?;

    let network = match &doc.network {
        Some(NetworkRef::Name(name)) => Some(name.clone()),
        _ => None,
    };
    Ok(ScenarioConfig {
        network,
        hubs,
        energy,
        preference,
        profile,
        seed: doc.seed,
        clock_s: doc.clock_s,
        aco,
        qlearning,
    })
}

/// A validated scenario together with the graph timed under its profile.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub graph: Arc<MultiModalGraph>,
}

impl Scenario {
    /// Builds the graph with the scenario's speeds at its clock, then
    /// validates the scenario against it.
    pub fn from_documents(network: &NetworkDocument, doc: &ScenarioDocument) -> Result<Self, ScenarioError> {
        if !(doc.clock_s.is_finite() && (0.0..DAY_SECONDS).contains(&doc.clock_s)) {
            return Err(ScenarioError::ClockOutOfRange { clock: doc.clock_s });
        }
        let profile = parse_profile(&doc.profile)?;
        let speeds = profile.speed_table(doc.clock_s).expect("clock checked above");
        let graph = load_graph(network, &speeds).map_err(ScenarioError::Network)?;
        let config = load_scenario(doc, &graph)?;
        Ok(Scenario { config, graph: Arc::new(graph) })
    }

    /// Loads a document whose `network` field is inline or resolvable by name.
    pub fn load(
        doc: &ScenarioDocument,
        resolve: impl Fn(&str) -> Option<NetworkDocument>,
    ) -> Result<Self, ScenarioError> {
        match &doc.network {
            None => Err(ScenarioError::MissingNetwork),
            Some(NetworkRef::Inline(net)) => Scenario::from_documents(net, doc),
            Some(NetworkRef::Name(name)) => {
                let net = resolve(name).ok_or_else(|| ScenarioError::UnknownNetwork(name.clone()))?;
                Scenario::from_documents(&net, doc)
            }
        }
    }

    /// Same graph, different configuration (e.g. a preference or SOC variant).
    pub fn with_config(&self, config: ScenarioConfig) -> Self {
        Scenario { config, graph: Arc::clone(&self.graph) }
    }

    pub fn hub_nodes(&self) -> Vec<&str> {
        self.config.hub_nodes()
    }
}

/// Index of hubs by node id.
pub fn hub_index(sc: &ScenarioConfig) -> HashMap<&str, &EHub> {
    sc.hubs.iter().map(|h| (h.node.as_str(), h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn t3_document_loads() {
        let sc = fixtures::t3(50.0);
        let cfg = &sc.config;
        assert_eq!(cfg.hubs.len(), 2);
        let h1 = cfg.hub("H1").unwrap();
        assert_eq!(h1.tool(Mode::EBike).unwrap().soc, 50.0);
        assert_eq!(h1.tool(Mode::ECar).unwrap().soc, 100.0);
        assert!(cfg.hub("H2").unwrap().tools.is_empty());
        assert_eq!(cfg.profile.multiplier_at(12.0 * 3600.0).unwrap(), 1.0);
    }

    #[test]
    fn soc_out_of_range_names_field() {
        let mut doc = fixtures::t3_scenario_document(50.0);
        doc.hubs[0].tools[0].soc = 130.0;
        let err = Scenario::from_documents(&fixtures::t3_network(), &doc).unwrap_err();
        assert!(matches!(err, ScenarioError::SocOutOfRange { .. }));
        assert_eq!(err.field(), Some("hubs[0].tools[0].soc"));
    }

    #[test]
    fn validation_errors() {
        let net = fixtures::t3_network();
        let mut doc = fixtures::t3_scenario_document(50.0);
        doc.hubs[0].node = "Nowhere".into();
        assert!(matches!(Scenario::from_documents(&net, &doc), Err(ScenarioError::UnknownHubNode { .. })));

        let mut doc = fixtures::t3_scenario_document(50.0);
        doc.energy.rate_per_100s.insert(Mode::EBike, -1.0);
        assert!(matches!(Scenario::from_documents(&net, &doc), Err(ScenarioError::NegativeRate { .. })));

        let mut doc = fixtures::t3_scenario_document(50.0);
        doc.hubs[0].docks.retain(|m| *m != Mode::EBike);
        assert!(matches!(Scenario::from_documents(&net, &doc), Err(ScenarioError::ToolNotDocked { .. })));

        let mut doc = fixtures::t3_scenario_document(50.0);
        doc.clock_s = DAY_SECONDS;
        assert!(matches!(Scenario::from_documents(&net, &doc), Err(ScenarioError::ClockOutOfRange { .. })));

        let mut doc = fixtures::t3_scenario_document(50.0);
        doc.network = Some(NetworkRef::Name("missing".into()));
        assert_eq!(Scenario::load(&doc, |_| None).unwrap_err(), ScenarioError::UnknownNetwork("missing".into()));
    }

    #[test]
    fn preference_always_contains_walk() {
        let p = UserPreference::new([Mode::EBike]);
        assert!(p.allows(Mode::Walk));
        assert!(p.allows(Mode::EBike));
        assert!(!p.allows(Mode::ECar));
        assert!(!UserPreference::excluding(Mode::ECar).allows(Mode::ECar));
    }

    #[test]
    fn document_round_trip() {
        let sc = fixtures::t3(20.0);
        let doc = sc.config.to_document(Some(NetworkRef::Inline(fixtures::t3_network())));
        let json = serde_json::to_string(&doc).unwrap();
        let again = Scenario::load(&ScenarioDocument::from_json(&json).unwrap(), |_| None).unwrap();
        // The inline network replaces the named reference.
        assert_eq!(again.config, ScenarioConfig { network: None, ..sc.config.clone() });
    }

    #[test]
    fn edge_speed_uses_profile() {
        let sc = fixtures::t3(50.0);
        assert_eq!(sc.config.edge_speed(Mode::Walk, 0.0).unwrap(), 1.0);
        assert!(sc.config.edge_speed(Mode::Walk, DAY_SECONDS).is_err());
    }
}
