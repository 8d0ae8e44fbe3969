//! HTTP front end: sessions, statements, workspace tables, the session log,
//! metrics, and catalog browsing over one shared [`Engine`].
//!
//! Payload shapes are documented in `docs/api.md`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Deserialize;
use serde_json::{json, Value as Json_};
use tokio::net::TcpListener;
use tokio::sync::Mutex;

use rubicon_core::exec::{Engine, Outcome, Session};
use rubicon_core::table::{ColumnSchema, ResultTable};
use rubicon_core::Error;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Per-statement execution bound.
    pub statement_timeout: Duration,
    pub default_principal: String,
    pub default_page: usize,
    pub max_page: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            statement_timeout: Duration::from_secs(30),
            default_principal: "user".into(),
            default_page: 100,
            max_page: 10_000,
        }
    }
}

struct Slot {
    principal: String,
    created: DateTime<Utc>,
    /// tokio's mutex queues waiters fairly, so statements run in arrival order.
    session: Arc<Mutex<Session>>,
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    config: Arc<ServerConfig>,
    sessions: Arc<RwLock<HashMap<String, Arc<Slot>>>>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, config: ServerConfig) -> Self {
        AppState {
            engine,
            config: Arc::new(config),
            sessions: Arc::default(),
        }
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("session not found: {id}")))
    }
}

/// Error payload: `{stage, message, offset}` for engine errors.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Json_,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            body: json!({ "stage": null, "message": message, "offset": null }),
        }
    }

    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "stage": null, "message": message, "offset": null }),
        }
    }

    fn fault(message: String) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "stage": "execute", "message": message, "offset": null }),
        }
    }

    fn engine(e: &Error) -> Self {
        let status = match e {
            Error::Io(_) | Error::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError {
            status,
            body: json!({ "stage": e.stage().to_string(), "message": e.to_string(), "offset": e.offset() }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn columns(schema: &[ColumnSchema]) -> Json_ {
    schema
        .iter()
        .map(|c| json!({ "name": c.name, "type": c.ty.name() }))
        .collect()
}

fn table_summary(name: &str, t: &ResultTable) -> Json_ {
    json!({
        "name": name,
        "columns": columns(&t.schema),
        "row_count": t.len(),
        "calls": t.call_count(),
    })
}

fn outcome_json(o: &Outcome) -> Json_ {
    json!({
        "index": o.index,
        "name": o.name,
        "message": o.message,
        "columns": o.table.as_ref().map(|t| columns(&t.schema)),
        "row_count": o.table.as_ref().map(|t| t.len()),
        "plan": o.plan,
        "metrics": o.metrics,
        "output": o.output,
    })
}

#[derive(Deserialize, Default)]
struct NewSession {
    principal: Option<String>,
}

async fn create_session(State(st): State<AppState>, body: Option<Json<NewSession>>) -> ApiResult {
    let principal = body
        .and_then(|Json(b)| b.principal)
        .unwrap_or_else(|| st.config.default_principal.clone());
    let id = uuid::Uuid::new_v4().simple().to_string();
    let slot = Arc::new(Slot {
        principal: principal.clone(),
        created: Utc::now(),
        session: Arc::new(Mutex::new(Session::with_id(st.engine.clone(), id.clone(), principal))),
    });
    let body = json!({ "id": id, "principal": slot.principal, "created": slot.created });
    st.sessions.write().unwrap().insert(id, slot);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let slot = st.slot(&id)?;
    let session = slot.session.lock().await;
    Ok(Json(json!({
        "id": id,
        "principal": slot.principal,
        "created": slot.created,
        "statements": session.workspace().log().len(),
        "tables": session.workspace().tables().len(),
    }))
    .into_response())
}

#[derive(Deserialize)]
struct StatementBody {
    text: String,
}

async fn submit(State(st): State<AppState>, Path(id): Path<String>, Json(body): Json<StatementBody>) -> ApiResult {
    let slot = st.slot(&id)?;
    let mut guard = slot.session.clone().lock_owned().await;
    let task = tokio::task::spawn_blocking(move || {
        let mut done = Vec::new();
        let stmts = rubicon_core::aql::parse_script(&body.text).map_err(|e| (e, Vec::new()))?;
        if stmts.is_empty() {
            return Err((Error::Parse { offset: 0, message: "no statement".into() }, done));
        }
        for s in &stmts {
            match guard.run(s) {
                Ok(o) => done.push(o),
                Err(e) => return Err((e, done)),
            }
        }
        Ok(done)
    });
    let outcome = match tokio::time::timeout(st.config.statement_timeout, task).await {
        Err(_) => {
            return Err(ApiError {
                status: StatusCode::GATEWAY_TIMEOUT,
                body: json!({
                    "stage": "execute",
                    "message": format!("statement exceeded {}s", st.config.statement_timeout.as_secs_f64()),
                    "offset": null,
                }),
            })
        }
        Ok(Err(join)) => return Err(ApiError::fault(format!("engine fault: {join}"))),
        Ok(Ok(r)) => r,
    };
    match outcome {
        Ok(done) => Ok(Json(json!({
            "session": id,
            "results": done.iter().map(outcome_json).collect::<Vec<_>>(),
        }))
        .into_response()),
        Err((e, done)) => {
            let mut err = ApiError::engine(&e);
            err.body["committed"] = done.iter().map(outcome_json).collect();
            Err(err)
        }
    }
}

async fn list_tables(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let slot = st.slot(&id)?;
    let session = slot.session.lock().await;
    let tables: Vec<Json_> = session
        .workspace()
        .tables()
        .iter()
        .map(|(n, t)| table_summary(n, t))
        .collect();
    Ok(Json(json!({ "tables": tables })).into_response())
}

#[derive(Deserialize)]
struct Page {
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn get_table(
    State(st): State<AppState>,
    Path((id, name)): Path<(String, String)>,
    Query(page): Query<Page>,
) -> ApiResult {
    let slot = st.slot(&id)?;
    let table = {
        let session = slot.session.lock().await;
        session
            .table(&name)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("workspace table not found: {name}")))?
    };
    let offset = page.offset.unwrap_or(0);
    let limit = page.limit.unwrap_or(st.config.default_page);
    if limit > st.config.max_page {
        return Err(ApiError::bad_request(format!("limit exceeds {}", st.config.max_page)));
    }
    let rows: Vec<Json_> = table
        .rows
        .iter()
        .skip(offset)
        .take(limit)
        .map(|r| r.iter().map(|v| v.to_json()).collect())
        .collect();
    Ok(Json(json!({
        "name": name,
        "columns": columns(&table.schema),
        "total": table.len(),
        "offset": offset,
        "limit": limit,
        "rows": rows,
        "provenance": table.provenance,
    }))
    .into_response())
}

async fn get_log(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let slot = st.slot(&id)?;
    let session = slot.session.lock().await;
    Ok(Json(json!({ "entries": session.workspace().log() })).into_response())
}

async fn get_metrics(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let slot = st.slot(&id)?;
    let session = slot.session.lock().await;
    let mut total = rubicon_core::exec::MetricsRecord::default();
    let mut calls: std::collections::BTreeMap<String, u64> = Default::default();
    let per: Vec<Json_> = session
        .workspace()
        .log()
        .iter()
        .map(|e| {
            total.add(&e.metrics);
            total.ttft_s += e.metrics.ttft_s;
            for p in &e.provenance {
                *calls.entry(p.source.to_string()).or_default() += p.call_count;
            }
            json!({ "index": e.index, "metrics": e.metrics })
        })
        .collect();
    Ok(Json(json!({ "statements": per, "total": total, "calls_by_source": calls })).into_response())
}

async fn catalog_sources(State(st): State<AppState>) -> ApiResult {
    let sources: Vec<Json_> = st
        .engine
        .catalog()
        .sources()
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "wrapper_kind": s.wrapper_kind,
                "tables": s.tables.iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Json(json!({ "sources": sources })).into_response())
}

fn table_json(t: &rubicon_core::catalog::TableSchema) -> Json_ {
    json!({
        "name": t.name,
        "columns": t.columns.iter().map(|c| json!({ "name": c.name, "type": c.ty.name() })).collect::<Vec<_>>(),
        "row_estimate": t.row_estimate,
        "per_call_cost": t.per_call_cost,
        "per_row_cost": t.per_row_cost,
        "page_size": t.page_size,
    })
}

async fn catalog_source(State(st): State<AppState>, Path(name): Path<String>) -> ApiResult {
    let s = st
        .engine
        .catalog()
        .source(&name)
        .ok_or_else(|| ApiError::not_found(format!("source not found: {name}")))?;
    Ok(Json(json!({
        "name": s.name,
        "wrapper_kind": s.wrapper_kind,
        "tables": s.tables.iter().map(table_json).collect::<Vec<_>>(),
    }))
    .into_response())
}

async fn catalog_table(State(st): State<AppState>, Path(name): Path<String>) -> ApiResult {
    let t = st
        .engine
        .catalog()
        .table(&name)
        .ok_or_else(|| ApiError::not_found(format!("table not found: {name}")))?;
    Ok(Json(table_json(&t)).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/statements", post(submit))
        .route("/sessions/{id}/tables", get(list_tables))
        .route("/sessions/{id}/tables/{name}", get(get_table))
        .route("/sessions/{id}/log", get(get_log))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .route("/catalog/sources", get(catalog_sources))
        .route("/catalog/sources/{name}", get(catalog_source))
        .route("/catalog/tables/{name}", get(catalog_table))
        .with_state(state)
}

/// Serve until the process exits.
pub async fn serve(engine: Arc<Engine>, addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(engine, config))).await
}

/// A running server on its own runtime thread; for tests and embedding.
pub struct Handle {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Handle {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Bind `addr` (port 0 picks a free one) and serve on a background thread.
pub fn spawn(engine: Arc<Engine>, addr: SocketAddr, config: ServerConfig) -> std::io::Result<Handle> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let listener = rt.block_on(TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let app = router(AppState::new(engine, config));
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(Handle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
