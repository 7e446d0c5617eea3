//! Read-only HTTP service over one dataset loaded at startup.
//!
//! Every 200 response body is byte-identical to what the matching CLI
//! command writes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::Value;
use siting_core::{AppError, Category, Dataset, GroupMode, SCHEMA_VERSION};

type Shared = Arc<Dataset>;

#[derive(Debug, Serialize)]
struct ErrorBody {
    schema_version: &'static str,
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: impl Into<String>, field: Option<&str>) -> Response {
    let body = ErrorBody {
        schema_version: SCHEMA_VERSION,
        error: message.into(),
        field: field.map(str::to_string),
    };
    let mut text = serde_json::to_string_pretty(&body).expect("error body serializes");
    text.push('\n');
    json(status, text)
}

fn app_error(e: AppError) -> Response {
    match e {
        AppError::Input(m) => error(StatusCode::UNPROCESSABLE_ENTITY, m, None),
        AppError::Internal(m) => error(StatusCode::INTERNAL_SERVER_ERROR, m, None),
    }
}

pub fn router(dataset: Dataset) -> Router {
    Router::new()
        .route("/api/weights", get(weights))
        .route("/api/ranking", get(ranking))
        .route("/api/sites", get(sites))
        .route("/api/whatif", post(whatif))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "no such route", None) })
        .with_state(Arc::new(dataset))
}

async fn weights(State(ds): State<Shared>) -> Response {
    json(StatusCode::OK, ds.weights_document().to_json_string())
}

async fn sites(State(ds): State<Shared>) -> Response {
    json(StatusCode::OK, ds.sites_document().to_json_string())
}

async fn ranking(State(ds): State<Shared>, Query(query): Query<HashMap<String, String>>) -> Response {
    let mut group = None;
    let mut mode = None;
    for (key, value) in &query {
        match key.as_str() {
            "group" if value.is_empty() => {}
            "group" => match value.parse::<Category>() {
                Ok(c) => group = Some(c),
                Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string(), Some("group")),
            },
            "mode" if value.is_empty() => {}
            "mode" => {
                mode = Some(match value.as_str() {
                    "overall" => GroupMode::Overall,
                    "renormalized" => GroupMode::Renormalized,
                    other => {
                        return error(
                            StatusCode::BAD_REQUEST,
                            format!("unknown mode {other:?}; expected overall or renormalized"),
                            Some("mode"),
                        )
                    }
                })
            }
            other => {
                return error(StatusCode::BAD_REQUEST, format!("unknown query parameter {other:?}"), Some(other))
            }
        }
    }
    match ds.ranking(group, mode) {
        Ok(doc) => json(StatusCode::OK, doc.to_json_string()),
        Err(e) => app_error(e),
    }
}

/// Body: `{"overrides": {"CODE": weight, ...}}`; `{}` means no overrides.
fn parse_whatif_body(body: &[u8]) -> Result<BTreeMap<String, f64>, Response> {
    let bad = |m: String, f: &str| error(StatusCode::BAD_REQUEST, m, Some(f));
    let value: Value = serde_json::from_slice(body).map_err(|e| bad(format!("malformed JSON: {e}"), "body"))?;
    let Value::Object(obj) = value else {
        return Err(bad("expected a JSON object".into(), "body"));
    };
    if let Some(key) = obj.keys().find(|k| *k != "overrides") {
        return Err(bad(format!("unknown field {key:?}"), key));
    }
    let mut out = BTreeMap::new();
    match obj.get("overrides") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (code, v) in map {
                let path = format!("overrides.{code}");
                let w = v
                    .as_f64()
                    .ok_or_else(|| bad(format!("weight must be a number, got {v}"), &path))?;
                out.insert(code.clone(), w);
            }
        }
        Some(_) => return Err(bad("expected an object of code to weight".into(), "overrides")),
    }
    Ok(out)
}

async fn whatif(State(ds): State<Shared>, body: Bytes) -> Response {
    let overrides = match parse_whatif_body(&body) {
        Ok(o) => o,
        Err(r) => return r,
    };
    tracing::debug!(?overrides, "what-if request");
    match ds.whatif(&overrides) {
        Ok(report) => json(StatusCode::OK, report.to_json_string()),
        Err(e) => app_error(e),
    }
}

pub async fn serve(dataset: Dataset, bind: &str, port: u16) -> Result<(), AppError> {
    let listener = tokio::net::TcpListener::bind((bind, port))
        .await
        .map_err(|e| AppError::Input(format!("cannot bind {bind}:{port}: {e}")))?;
    tracing::info!("listening on {bind}:{port}");
    axum::serve(listener, router(dataset))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::Internal(format!("server error: {e}")))
}
