//! JSON-over-HTTP front end to the planners.
//!
//! Scenarios are immutable once loaded. Each route request plans
//! independently on a blocking worker; reduced graphs are cached per
//! (scenario, origin, destination).

mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use emob_core::aco::AcoParams;
use emob_core::netgraph::{build_reduced_graph, NetworkDocument, ReducedGraph};
use emob_core::oracle::DEFAULT_QUANT;
use emob_core::qlearn::QParams;
use emob_core::route::{effective_config, plan_on, Diagnostics};
use emob_core::scenario::{NetworkRef, Scenario, ScenarioDocument, UserPreference};
use emob_core::{fixtures, PlannerKind, RouteOptions, RouteOutcome};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub use error::{ApiError, ErrorBody};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },
}

type ReducedKey = (String, String);

struct StoredScenario {
    network_name: Option<String>,
    network: NetworkDocument,
    scenario: Scenario,
    reduced: RwLock<HashMap<ReducedKey, Arc<ReducedGraph>>>,
}

impl StoredScenario {
    fn reduced(&self, origin: &str, destination: &str) -> Result<Arc<ReducedGraph>, emob_core::RouteError> {
        let key = (origin.to_string(), destination.to_string());
        if let Some(r) = self.reduced.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(r));
        }
        let built =
            Arc::new(build_reduced_graph(&self.scenario.graph, origin, destination, &self.scenario.hub_nodes())?);
        let mut cache = self.reduced.write().expect("cache lock");
        Ok(Arc::clone(cache.entry(key).or_insert(built)))
    }
}

/// Shared server state: named networks and loaded scenarios.
pub struct AppState {
    networks: RwLock<HashMap<String, NetworkDocument>>,
    scenarios: RwLock<HashMap<String, Arc<StoredScenario>>>,
    next_id: AtomicU64,
}

impl Default for AppState {
    fn default() -> Self {
        let mut networks = HashMap::new();
        networks.insert("t3".to_string(), fixtures::t3_network());
        AppState { networks: RwLock::new(networks), scenarios: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1) }
    }
}

fn looks_like_network(v: &serde_json::Value) -> bool {
    v.get("nodes").is_some() && v.get("edges").is_some()
}

impl AppState {
    /// Registers every network file in `dir` under its file stem, then loads
    /// every scenario file under its file stem as the scenario id.
    pub fn from_dir(dir: &Path) -> Result<Self, ServerError> {
        let state = AppState::default();
        let io = |path: &Path, source| ServerError::Io { path: path.to_path_buf(), source };
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut scenario_files = Vec::new();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
            let load = |message: String| ServerError::Load { path: path.clone(), message };
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| load(e.to_string()))?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if looks_like_network(&value) {
                let net: NetworkDocument = serde_json::from_value(value).map_err(|e| load(e.to_string()))?;
                state.networks.write().expect("lock").insert(stem, net);
            } else if value.get("hubs").is_some() {
                scenario_files.push((path.clone(), stem, value));
            }
        }
        for (path, stem, value) in scenario_files {
            let load = |message: String| ServerError::Load { path: path.clone(), message };
            let doc: ScenarioDocument = serde_json::from_value(value).map_err(|e| load(e.to_string()))?;
            let stored = state.build(&doc).map_err(|e| load(e.body.message))?;
            state.scenarios.write().expect("lock").insert(stem, Arc::new(stored));
        }
        Ok(state)
    }

    pub fn scenario_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.scenarios.read().expect("lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn build(&self, doc: &ScenarioDocument) -> Result<StoredScenario, ApiError> {
        let (network_name, network) = match &doc.network {
            None => return Err(emob_core::scenario::ScenarioError::MissingNetwork.into()),
            Some(NetworkRef::Inline(net)) => (None, net.clone()),
            Some(NetworkRef::Name(name)) => {
                let net = self.networks.read().expect("lock").get(name).cloned();
                let net = net.ok_or_else(|| emob_core::scenario::ScenarioError::UnknownNetwork(name.clone()))?;
                (Some(name.clone()), net)
            }
        };
        let scenario = Scenario::from_documents(&network, doc)?;
        Ok(StoredScenario { network_name, network, scenario, reduced: RwLock::new(HashMap::new()) })
    }

    /// Validates and stores a scenario document, returning its new id.
    pub fn insert(&self, doc: &ScenarioDocument) -> Result<String, ApiError> {
        let stored = self.build(doc)?;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        self.scenarios.write().expect("lock").insert(id.clone(), Arc::new(stored));
        Ok(id)
    }

    fn get(&self, id: &str) -> Result<Arc<StoredScenario>, ApiError> {
        self.scenarios.read().expect("lock").get(id).cloned().ok_or_else(|| ApiError::not_found("scenario", id))
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(ApiError::malformed)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteParams {
    pub seed: Option<u64>,
    pub aco: Option<AcoParams>,
    pub qlearning: Option<QParams>,
    pub quant: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteRequest {
    #[serde(alias = "scenario")]
    pub scenario_id: String,
    pub origin: String,
    pub destination: String,
    #[serde(default = "default_planner")]
    pub planner: PlannerKind,
    #[serde(default)]
    pub preference: Option<UserPreference>,
    #[serde(default)]
    pub params: RouteParams,
}

fn default_planner() -> PlannerKind {
    PlannerKind::Aco
}

async fn create_scenario(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let doc: ScenarioDocument = parse_body(&body)?;
    let state2 = Arc::clone(&state);
    let id = tokio::task::spawn_blocking(move || state2.insert(&doc))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", None, e.to_string()))??;
    Ok((StatusCode::CREATED, Json(serde_json::json!({ "id": id }))))
}

async fn list_scenarios(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    Json(serde_json::json!({ "scenarios": state.scenario_ids() }))
}

async fn scenario_state(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    let stored = state.get(&id)?;
    let cfg = &stored.scenario.config;
    let doc = cfg.to_document(stored.network_name.clone().map(NetworkRef::Name));
    Ok(Json(serde_json::json!({
        "id": id,
        "node_count": stored.scenario.graph.node_count(),
        "tool_count": cfg.tool_count(),
        "scenario": doc,
    })))
}

async fn scenario_network(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    let stored = state.get(&id)?;
    Ok(Json(serde_json::json!({
        "network": stored.network,
        "hubs": stored.scenario.hub_nodes(),
    })))
}

/// Plans one request synchronously. Exposed for callers that hold the state
/// directly, such as tests and the command line.
pub fn plan_request(state: &AppState, req: &RouteRequest) -> Result<RouteOutcome, ApiError> {
    let stored = state.get(&req.scenario_id)?;
    let graph = &stored.scenario.graph;
    for (field, node) in [("origin", &req.origin), ("destination", &req.destination)] {
        if graph.node_index(node).is_none() {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "UnknownNode",
                Some(field),
                format!("unknown node {node:?}"),
            ));
        }
    }
    let seed = req.params.seed.unwrap_or_else(|| rand::random::<u32>() as u64);
    let opts = RouteOptions {
        preference: req.preference,
        seed: Some(seed),
        aco: req.params.aco.clone(),
        qlearning: req.params.qlearning.clone(),
        quant: req.params.quant,
    };
    if req.origin == req.destination {
        return Ok(emob_core::route(&stored.scenario, &req.origin, &req.destination, req.planner, &opts)?);
    }
    let cfg = effective_config(&stored.scenario.config, &opts);
    let r = stored.reduced(&req.origin, &req.destination)?;
    let mut out = plan_on(&r, &cfg, req.planner, opts.quant.unwrap_or(DEFAULT_QUANT))?;
    out.diagnostics = Diagnostics { seed: Some(seed), ..out.diagnostics };
    Ok(out)
}

async fn route_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: RouteRequest = parse_body(&body)?;
    let out = tokio::task::spawn_blocking(move || plan_request(&state, &req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", None, e.to_string()))??;
    Ok(Json(out))
}

async fn health() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok" }))
}

/// The `/v1` API, plus static files from `static_dir` when given.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/scenario", post(create_scenario))
        .route("/scenarios", get(list_scenarios))
        .route("/scenario/{id}/state", get(scenario_state))
        .route("/scenario/{id}/network", get(scenario_network))
        .route("/route", post(route_handler));
    let app = Router::new().nest("/v1", api).with_state(state);
    let app = match static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    };
    app.layer(tower_http::cors::CorsLayer::permissive())
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, state, static_dir, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    static_dir: Option<PathBuf>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(state, static_dir.as_deref());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
