//! The read-only HTTP API over a loaded [`Engine`].
//!
//! | Route | Answer |
//! |---|---|
//! | `GET /v1/health` | `{"entities":[..],"status":"ok","workflows":N}` |
//! | `GET /v1/search?q=&entity=&limit=&refine=&cloud=&k=` | search result, with `cloud` when `cloud=true` |
//! | `GET /v1/cloud?q=&entity=&k=&refine=` | data cloud |
//! | `GET /v1/workflows` | workflows with parameter and output signatures |
//! | `POST /v1/workflows/{name}/run` | `{"params":{..},"top":N}` → ranked rows |
//! | `POST /v1/workflows/{name}/sql` | `{"params":{..}}` → compiled script |
//!
//! Errors are `{"code":..,"message":..}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use flexcloud::sql::Dialect;
use serde::Serialize;

use crate::api::ApiError;
use crate::engine::{args_from_json, render, Engine, SearchRequest};

type Params = Result<Query<BTreeMap<String, String>>, QueryRejection>;

fn json(status: u16, body: String) -> Response {
    let status = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json(self.status, render(&self))
    }
}

fn reply(result: Result<String, ApiError>) -> Response {
    match result {
        Ok(body) => json(200, body),
        Err(e) => e.into_response(),
    }
}

fn number(params: &BTreeMap<String, String>, key: &str) -> Result<Option<usize>, ApiError> {
    params
        .get(key)
        .map(|v| {
            v.parse().map_err(|_| {
                ApiError::bad_request(format!("{key} must be a non-negative integer, got {v:?}"))
            })
        })
        .transpose()
}

fn search_request(params: Params) -> Result<(SearchRequest, bool), ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let known = ["q", "entity", "limit", "refine", "k", "cloud"];
    if let Some(unknown) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(ApiError::bad_request(format!(
            "unknown query parameter {unknown:?}"
        )));
    }
    let q = params
        .get("q")
        .cloned()
        .ok_or_else(|| ApiError::bad_request("missing query parameter q"))?;
    let cloud = match params.get("cloud").map(String::as_str) {
        None | Some("false") | Some("0") => false,
        Some("true") | Some("1") => true,
        Some(other) => {
            return Err(ApiError::bad_request(format!(
                "cloud must be true or false, got {other:?}"
            )))
        }
    };
    Ok((
        SearchRequest {
            q,
            entity: params.get("entity").cloned(),
            limit: number(&params, "limit")?,
            refine: params.get("refine").cloned(),
            k: number(&params, "k")?,
        },
        cloud,
    ))
}

async fn search(State(engine): State<Arc<Engine>>, params: Params) -> Response {
    reply(search_request(params).and_then(|(req, cloud)| engine.search(&req, cloud)))
}

async fn cloud(State(engine): State<Arc<Engine>>, params: Params) -> Response {
    reply(search_request(params).and_then(|(req, _)| engine.cloud(&req)))
}

async fn workflows(State(engine): State<Arc<Engine>>) -> Response {
    json(200, engine.list_workflows())
}

#[derive(Serialize)]
struct Health<'a> {
    entities: Vec<&'a str>,
    status: &'static str,
    workflows: usize,
}

async fn health(State(engine): State<Arc<Engine>>) -> Response {
    json(
        200,
        render(&Health {
            entities: engine.entity_names(),
            status: "ok",
            workflows: engine.workflow_count(),
        }),
    )
}

struct RunBody {
    params: serde_json::Map<String, serde_json::Value>,
    top: Option<usize>,
}

fn run_body(body: &[u8]) -> Result<RunBody, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(RunBody {
            params: Default::default(),
            top: None,
        });
    }
    let value: serde_json::Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("malformed JSON body: {e}")))?;
    let serde_json::Value::Object(mut fields) = value else {
        return Err(ApiError::bad_request("body must be a JSON object"));
    };
    let params = match fields.remove("params") {
        None => Default::default(),
        Some(serde_json::Value::Object(p)) => p,
        Some(_) => return Err(ApiError::bad_request("params must be an object")),
    };
    let top = match fields.remove("top") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| ApiError::bad_request("top must be a non-negative integer"))?
                as usize,
        ),
    };
    if let Some(unknown) = fields.keys().next() {
        return Err(ApiError::bad_request(format!("unknown field {unknown:?}")));
    }
    Ok(RunBody { params, top })
}

async fn run(State(engine): State<Arc<Engine>>, Path(name): Path<String>, body: Bytes) -> Response {
    reply((|| {
        let wf = engine.workflow(&name)?;
        let body = run_body(&body)?;
        let args = args_from_json(&wf.ast, &body.params)?;
        engine.run(&name, &args, body.top)
    })())
}

async fn sql(State(engine): State<Arc<Engine>>, Path(name): Path<String>, body: Bytes) -> Response {
    reply((|| {
        let wf = engine.workflow(&name)?;
        let body = run_body(&body)?;
        if body.top.is_some() {
            return Err(ApiError::bad_request("top applies to run, not sql"));
        }
        let args = args_from_json(&wf.ast, &body.params)?;
        engine
            .sql(&name, &args, Dialect::Ansi)
            .map(|(_, json)| json)
    })())
}

async fn fallback() -> Response {
    ApiError::not_found("no such endpoint").into_response()
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/search", get(search))
        .route("/v1/cloud", get(cloud))
        .route("/v1/workflows", get(workflows))
        .route("/v1/workflows/{name}/run", post(run))
        .route("/v1/workflows/{name}/sql", post(sql))
        .fallback(fallback)
        .with_state(engine)
}
