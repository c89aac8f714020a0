//! HTTP API over the simulated homes, the agent and the stored benchmark report, plus a
//! server-sent event stream of state changes and run progress.

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use bems_agent::{run_analysis, run_query, AgentEnv, AgentProfile, AnalysisRequest, Provider, RunOptions};
use bems_core::AttributeValue;
use bems_home::{AutomationError, CommandSource, HomeError, MemoryEdit, MemoryError, MemoryFilter, NewSchedule, ScheduleEdit};
use futures::stream::{self, Stream};
use indexmap::IndexMap;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast;
use tower_http::services::ServeDir;

use crate::commands::stored_report;
use crate::config::ServiceConfig;
use crate::data::{build_provider, load_building};
use crate::error::CliError;

/// One building's home, agent and provider.
pub struct BuildingCtx {
    pub env: AgentEnv,
    pub agent: AgentProfile,
    pub provider: Arc<dyn Provider>,
}

#[derive(Clone)]
pub struct AppState {
    pub cfg: Arc<ServiceConfig>,
    pub buildings: Arc<IndexMap<String, Arc<BuildingCtx>>>,
    pub events: broadcast::Sender<Value>,
}

impl AppState {
    /// Loads every configured building and wires its home events into the stream.
    pub fn new(cfg: ServiceConfig) -> Result<Self, CliError> {
        let (events, _) = broadcast::channel(256);
        let mut buildings = IndexMap::new();
        for id in &cfg.buildings {
            let (profile, series) = load_building(&cfg, id)?;
            let provider: Arc<dyn Provider> = Arc::from(build_provider(&cfg, id)?);
            let mut agent = AgentProfile::new(profile.clone());
            if let Some(m) = &cfg.provider.model {
                agent = agent.with_model(m.clone());
            }
            let env = AgentEnv::from_profile(profile, series);
            let tx = events.clone();
            let building_id = id.clone();
            env.home.subscribe(Arc::new(move |e| {
                let mut v = serde_json::to_value(e).unwrap_or(Value::Null);
                if let Some(o) = v.as_object_mut() {
                    o.insert("building_id".into(), building_id.clone().into());
                }
                let _ = tx.send(v);
            }));
            buildings.insert(id.clone(), Arc::new(BuildingCtx { env, agent, provider }));
        }
        Ok(AppState { cfg: Arc::new(cfg), buildings: Arc::new(buildings), events })
    }

    fn building(&self, id: Option<&str>) -> Result<Arc<BuildingCtx>, ApiError> {
        let found = match id {
            Some(id) => self.buildings.get(id),
            None => self.buildings.values().next(),
        };
        found.cloned().ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_building", format!("no building {:?}", id.unwrap_or(""))))
    }

    fn emit(&self, building_id: &str, kind: &str, mut body: Value) {
        if let Some(o) = body.as_object_mut() {
            o.insert("type".into(), kind.into());
            o.insert("building_id".into(), building_id.into());
        }
        let _ = self.events.send(body);
    }
}

/// JSON error payload `{"error": {"code", "message"}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), extra: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": {"code": self.code, "message": self.message}});
        if let (Some(extra), Some(o)) = (self.extra, body.as_object_mut()) {
            o.insert("run".into(), extra);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<HomeError> for ApiError {
    fn from(e: HomeError) -> Self {
        let status = match e {
            HomeError::UnknownDevice(_) | HomeError::UnknownMeter(_) => StatusCode::NOT_FOUND,
            HomeError::OfflineDevice(_) => StatusCode::CONFLICT,
            HomeError::Io(_) | HomeError::Document(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<AutomationError> for ApiError {
    fn from(e: AutomationError) -> Self {
        let status = match e {
            AutomationError::UnknownSchedule(_) | AutomationError::UnknownDevice(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<MemoryError> for ApiError {
    fn from(e: MemoryError) -> Self {
        let status = match e {
            MemoryError::UnknownMemory(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default, Deserialize)]
pub struct BuildingParam {
    pub building: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct ChatBody {
    pub query: String,
    pub building: Option<String>,
}

async fn chat(State(s): State<AppState>, Json(body): Json<ChatBody>) -> ApiResult<Json<Value>> {
    let ctx = s.building(body.building.as_deref())?;
    let query = body.query.trim().to_string();
    if query.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty_query", "query is empty"));
    }
    let building_id = ctx.env.profile.building_id.clone();
    s.emit(&building_id, "run_started", json!({"query": query}));
    let worker = ctx.clone();
    let run = tokio::task::spawn_blocking(move || {
        run_query(&query, &worker.env, &worker.agent, worker.provider.as_ref(), &RunOptions::default())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    s.emit(
        &building_id,
        "run_finished",
        json!({"run_id": run.run_id, "state": run.state, "response_type": run.response.response_type}),
    );
    if run.tool_names().iter().any(|n| n.starts_with("memory.")) {
        s.emit(&building_id, "memories_changed", json!({"count": ctx.env.memory_snapshot().len()}));
    }
    match &run.error {
        Some(e) if e.code.starts_with("provider_") || e.code == "fixture_miss" => {
            let mut err = ApiError::new(StatusCode::BAD_GATEWAY, &e.code, e.message.clone());
            err.extra = Some(run.to_json());
            Err(err)
        }
        _ => Ok(Json(run.to_json())),
    }
}

async fn home(State(s): State<AppState>, Query(p): Query<BuildingParam>) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    let h = &ctx.env.home;
    Ok(Json(json!({
        "building_id": h.building_id(),
        "sim_clock": h.sim_clock(),
        "devices": h.devices_sync(),
        "meters": h.meters_query(None)?,
    })))
}

#[derive(Debug, Deserialize)]
pub struct ExecuteBody {
    pub attribute: String,
    pub value: AttributeValue,
}

async fn execute(
    State(s): State<AppState>,
    Path(device): Path<String>,
    Query(p): Query<BuildingParam>,
    Json(body): Json<ExecuteBody>,
) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    let d = ctx.env.home.devices_execute(&device, &body.attribute, &body.value, CommandSource::Api)?;
    Ok(Json(json!({"device": d})))
}

#[derive(Debug, Default, Deserialize)]
pub struct ScheduleParams {
    pub building: Option<String>,
    pub device: Option<String>,
}

async fn schedules(State(s): State<AppState>, Query(p): Query<ScheduleParams>) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    Ok(Json(json!({"schedules": ctx.env.home.schedule_sync(p.device.as_deref())})))
}

async fn create_schedule(
    State(s): State<AppState>,
    Query(p): Query<BuildingParam>,
    Json(new): Json<NewSchedule>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let ctx = s.building(p.building.as_deref())?;
    let entry = ctx.env.home.schedule_create(new)?;
    Ok((StatusCode::CREATED, Json(json!({"schedule": entry}))))
}

async fn delete_schedule(State(s): State<AppState>, Path(id): Path<String>, Query(p): Query<BuildingParam>) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    ctx.env.home.schedule_change(&id, ScheduleEdit::Delete)?;
    Ok(Json(json!({"deleted": id})))
}

#[derive(Debug, Default, Deserialize)]
pub struct MemoryParams {
    pub building: Option<String>,
    pub device: Option<String>,
    pub text: Option<String>,
}

async fn memories(State(s): State<AppState>, Query(p): Query<MemoryParams>) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    let filter = match (p.device, p.text) {
        (Some(d), _) => MemoryFilter::Device(d),
        (None, Some(t)) => MemoryFilter::Text(t),
        (None, None) => MemoryFilter::All,
    };
    Ok(Json(json!({"memories": ctx.env.memory_snapshot().sync(&filter)})))
}

#[derive(Debug, Deserialize)]
pub struct MemoryBody {
    pub utterance: String,
}

async fn create_memory(
    State(s): State<AppState>,
    Query(p): Query<BuildingParam>,
    Json(body): Json<MemoryBody>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let ctx = s.building(p.building.as_deref())?;
    let (entry, count) = {
        let mut store = ctx.env.memory.write().unwrap_or_else(|e| e.into_inner());
        let entry = store.create_from_utterance(&body.utterance, ctx.env.home.sim_clock())?;
        (entry, store.len())
    };
    s.emit(&ctx.env.profile.building_id, "memories_changed", json!({"count": count}));
    Ok((StatusCode::CREATED, Json(json!({"memory": entry}))))
}

async fn delete_memory(State(s): State<AppState>, Path(id): Path<String>, Query(p): Query<BuildingParam>) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    let count = {
        let mut store = ctx.env.memory.write().unwrap_or_else(|e| e.into_inner());
        store.change(&id, MemoryEdit::Delete)?;
        store.len()
    };
    s.emit(&ctx.env.profile.building_id, "memories_changed", json!({"count": count}));
    Ok(Json(json!({"deleted": id})))
}

async fn analytics(
    State(s): State<AppState>,
    Query(p): Query<BuildingParam>,
    request: Result<Query<AnalysisRequest>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<Value>> {
    let ctx = s.building(p.building.as_deref())?;
    let Query(req) = request.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let out = run_analysis(&ctx.env.series, &ctx.env.rates, &req)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()))?;
    Ok(Json(json!({"result": out.result, "artifact": out.artifact})))
}

async fn bench_report(State(s): State<AppState>) -> ApiResult<Json<Value>> {
    stored_report(&s.cfg)
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_report", "no benchmark report has been written"))
}

async fn events(State(s): State<AppState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = s.events.subscribe();
    let stream = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(v) => {
                    let kind = v.get("type").and_then(Value::as_str).unwrap_or("message").to_string();
                    return Some((Ok(Event::default().event(kind).data(v.to_string())), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}

#[derive(Debug, Default, Deserialize)]
struct TokenParam {
    token: Option<String>,
}

/// Bearer token check; the query-string form is for event-stream clients that cannot set headers.
async fn require_token(State(s): State<AppState>, Query(q): Query<TokenParam>, req: Request, next: Next) -> Response {
    let Some(expected) = s.cfg.api_token.as_deref() else {
        return next.run(req).await;
    };
    let header_token = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|h| h.to_str().ok())
        .and_then(|h| h.strip_prefix("Bearer "));
    if header_token == Some(expected) || q.token.as_deref() == Some(expected) {
        next.run(req).await
    } else {
        ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong API token").into_response()
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/chat", post(chat))
        .route("/home", get(home))
        .route("/devices/{id}/execute", post(execute))
        .route("/schedules", get(schedules).post(create_schedule))
        .route("/schedules/{id}", delete(delete_schedule))
        .route("/memories", get(memories).post(create_memory))
        .route("/memories/{id}", delete(delete_memory))
        .route("/analytics", get(analytics))
        .route("/bench/report", get(bench_report))
        .route("/events", get(events))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    let app = match &state.cfg.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.with_state(state)
}

pub async fn serve(cfg: ServiceConfig) -> Result<(), CliError> {
    let listen = cfg.listen.clone();
    let state = AppState::new(cfg)?;
    let listener = tokio::net::TcpListener::bind(&listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
