use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use emob_core::netgraph::{GraphError, ReducedGraphError};
use emob_core::scenario::ScenarioError;
use emob_core::RouteError;
use serde::Serialize;

/// Error body: `{"error": {"kind", "field", "message"}}`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_events: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, field: Option<&str>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                kind: kind.to_string(),
                field: field.map(str::to_string),
                message: message.into(),
                penalty_events: None,
            },
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", None, format!("unknown {what} {id:?}"))
    }

    /// A body that failed to deserialize, with the JSON path of the culprit.
    pub fn malformed(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = err.path().to_string();
        let field = (path != ".").then_some(path);
        ApiError::new(StatusCode::BAD_REQUEST, "Malformed", field.as_deref(), err.inner().to_string())
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.kind(), e.field(), e.to_string())
    }
}

impl From<RouteError> for ApiError {
    fn from(e: RouteError) -> Self {
        use emob_core::aco::AcoError;
        use emob_core::oracle::OracleError;
        use emob_core::qlearn::QError;
        let msg = e.to_string();
        match &e {
            RouteError::NoFeasiblePlan { penalty_events, .. } => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "NoFeasiblePlan", None, msg);
                err.body.penalty_events = *penalty_events;
                err
            }
            RouteError::Reduced(ReducedGraphError::NoFeasibleEntry(node)) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "NoFeasiblePlan", None, format!("{msg} ({node})"))
            }
            RouteError::Reduced(ReducedGraphError::Graph(GraphError::UnknownNode(n))) => {
                ApiError::new(StatusCode::BAD_REQUEST, "UnknownNode", None, format!("unknown node {n:?}"))
            }
            RouteError::Reduced(ReducedGraphError::NoHubs) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "NoHubs", Some("hubs"), msg)
            }
            RouteError::Aco(AcoError::InvalidParams(_)) => {
                ApiError::new(StatusCode::BAD_REQUEST, "InvalidParams", Some("params.aco"), msg)
            }
            RouteError::Q(QError::InvalidParams(_) | QError::PenaltyTooWeak { .. }) => {
                ApiError::new(StatusCode::BAD_REQUEST, "InvalidParams", Some("params.qlearning"), msg)
            }
            RouteError::Oracle(OracleError::InvalidQuant) => {
                ApiError::new(StatusCode::BAD_REQUEST, "InvalidParams", Some("params.quant"), msg)
            }
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", None, msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.body }))).into_response()
    }
}
