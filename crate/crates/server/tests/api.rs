use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use emob_core::fixtures;
use emob_core::scenario::NetworkRef;
use emob_core::synth::{benchmark_scenario, grid_network, GridSpec};
use emob_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn app() -> axum::Router {
    router(Arc::new(AppState::default()), None)
}

fn t3_doc() -> Value {
    serde_json::to_value(fixtures::t3_scenario_document(50.0)).unwrap()
}

async fn load_t3(app: &axum::Router) -> String {
    let (status, body) = call(app, "POST", "/v1/scenario", Some(t3_doc())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn t3_oracle_round_trip() {
    let app = app();
    let id = load_t3(&app).await;
    let req = json!({"scenario_id": id, "origin": "O", "destination": "D", "planner": "oracle"});
    let (status, body) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["total_time_s"], 1050.0);
    let modes: Vec<&str> =
        body["plan"]["legs"].as_array().unwrap().iter().map(|l| l["mode"].as_str().unwrap()).collect();
    assert_eq!(modes, ["Walk", "ECar", "Walk"]);

    let req = json!({
        "scenario_id": id, "origin": "O", "destination": "D", "planner": "oracle",
        "preference": {"allowed": ["Walk", "EBike", "EScooter"]}
    });
    let (status, body) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["total_time_s"], 1200.0);
}

#[tokio::test]
async fn seeded_requests_are_reproducible() {
    let app = app();
    let id = load_t3(&app).await;
    for planner in ["aco", "q"] {
        let req = json!({
            "scenario_id": id, "origin": "O", "destination": "D", "planner": planner,
            "params": {"seed": 42, "aco": {"n_ants": 50, "n_iterations": 5}, "qlearning": {"n_episodes": 500}}
        });
        let (s1, a) = call(&app, "POST", "/v1/route", Some(req.clone())).await;
        let (s2, b) = call(&app, "POST", "/v1/route", Some(req)).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK), "{a}");
        assert_eq!(a["plan"], b["plan"]);
        assert_eq!(a["diagnostics"]["seed"], 42);
    }
    // Without a seed the server picks one and reports it.
    let req = json!({"scenario_id": id, "origin": "O", "destination": "D", "params": {"aco": {"n_ants": 20, "n_iterations": 2}}});
    let (_, body) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert!(body["diagnostics"]["seed"].is_u64());
}

#[tokio::test]
async fn invalid_scenarios_name_the_field() {
    let app = app();
    let mut doc = t3_doc();
    doc["hubs"][0]["tools"][0]["soc"] = json!(130.0);
    let (status, body) = call(&app, "POST", "/v1/scenario", Some(doc)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["kind"], "SocOutOfRange");
    assert_eq!(body["error"]["field"], "hubs[0].tools[0].soc");

    let mut doc = t3_doc();
    doc["network"] = json!("nowhere");
    let (status, body) = call(&app, "POST", "/v1/scenario", Some(doc)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "network");

    let mut doc = t3_doc();
    doc["hubs"][1]["docks"] = json!(["EBike", "Hovercraft"]);
    let (status, body) = call(&app, "POST", "/v1/scenario", Some(doc)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["kind"], "Malformed");
    assert_eq!(body["error"]["field"], "hubs[1].docks[1]");
}

#[tokio::test]
async fn unknown_ids_and_nodes() {
    let app = app();
    let (status, _) = call(&app, "GET", "/v1/scenario/nope/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let req = json!({"scenario_id": "nope", "origin": "O", "destination": "D"});
    let (status, _) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = load_t3(&app).await;
    let req = json!({"scenario_id": id, "origin": "X", "destination": "D"});
    let (status, body) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "origin");

    let req = json!({"scenario_id": id, "origin": "D", "destination": "D", "planner": "q"});
    let (status, body) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["total_time_s"], 0.0);
    assert_eq!(body["plan"]["legs"], json!([]));

    let req = json!({"scenario_id": id, "origin": "O", "destination": "D", "params": {"aco": {"rho": 2.0}}});
    let (status, body) = call(&app, "POST", "/v1/route", Some(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "params.aco");
}

#[tokio::test]
async fn infeasible_queries_are_422() {
    let app = app();
    // The only way into D is by car, and D cannot take the car back.
    let doc = json!({
        "network": {
            "nodes": [{"id": "O"}, {"id": "H"}, {"id": "D"}],
            "edges": [
                {"id": "oh", "from": "O", "to": "H", "length_m": 100.0, "modes": ["Walk"]},
                {"id": "hd", "from": "H", "to": "D", "length_m": 100.0, "modes": ["ECar"]}
            ]
        },
        "hubs": [{"node": "H", "docks": ["ECar"], "tools": [{"mode": "ECar", "soc": 100.0}]}]
    });
    let (status, body) = call(&app, "POST", "/v1/scenario", Some(doc)).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let id = body["id"].as_str().unwrap();
    for planner in ["aco", "q", "oracle"] {
        let req = json!({"scenario_id": id, "origin": "O", "destination": "D", "planner": planner});
        let (status, body) = call(&app, "POST", "/v1/route", Some(req)).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{planner}: {body}");
        assert_eq!(body["error"]["kind"], "NoFeasiblePlan");
    }
}

#[tokio::test]
async fn state_snapshots() {
    let app = app();
    let id = load_t3(&app).await;
    let (status, body) = call(&app, "GET", &format!("/v1/scenario/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    let hubs = body["scenario"]["hubs"].as_array().unwrap();
    assert_eq!(hubs.len(), 2);
    assert_eq!(hubs[0]["node"], "H1");
    assert_eq!(hubs[0]["tools"][0], json!({"mode": "EBike", "soc": 50.0}));

    let spec = GridSpec::default();
    let sc = benchmark_scenario(&spec, 20, 3);
    let doc = sc.config.to_document(Some(NetworkRef::Inline(grid_network(&spec))));
    let (status, body) = call(&app, "POST", "/v1/scenario", Some(serde_json::to_value(doc).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = body["id"].as_str().unwrap();
    let (_, body) = call(&app, "GET", &format!("/v1/scenario/{id}/state"), None).await;
    assert_eq!(body["tool_count"], 60);
    let (status, body) = call(&app, "GET", &format!("/v1/scenario/{id}/network"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["network"]["nodes"].as_array().unwrap().len(), 256);
    assert_eq!(body["hubs"].as_array().unwrap().len(), 20);
}

#[test]
fn scenario_directory_preloads() {
    let dir = tempfile::tempdir().unwrap();
    let net = serde_json::to_string(&fixtures::t3_network()).unwrap();
    std::fs::write(dir.path().join("small.json"), net).unwrap();
    let mut doc = fixtures::t3_scenario_document(50.0);
    doc.network = Some(NetworkRef::Name("small".into()));
    std::fs::write(dir.path().join("demo.json"), serde_json::to_string(&doc).unwrap()).unwrap();
    let state = AppState::from_dir(dir.path()).unwrap();
    assert_eq!(state.scenario_ids(), ["demo"]);

    let mut bad = fixtures::t3_scenario_document(50.0);
    bad.network = Some(NetworkRef::Name("missing".into()));
    std::fs::write(dir.path().join("zz.json"), serde_json::to_string(&bad).unwrap()).unwrap();
    let err = AppState::from_dir(dir.path()).err().unwrap();
    assert!(err.to_string().contains("zz.json"), "{err}");
}
