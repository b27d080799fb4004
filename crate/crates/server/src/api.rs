//! Routes and handlers. Every handler takes the scheduler lock once, so
//! calls are linearized across the whole service.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use cws_core::clock::{Clock, Millis, ScaledWallClock};
use cws_core::model::{AbstractVertex, Edge, TaskRequest, TaskStatus};
use cws_core::strategy::StrategyName;
use cws_core::{Error, ExecutionId, Grant, Scheduler, TaskId, VertexId};
use parking_lot::{Mutex, MutexGuard};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::openapi;

pub const VERSION: &str = "v1";

/// How the simulated cluster's clock moves in server mode.
#[derive(Debug)]
pub enum TimeSource {
    /// Follows the wall clock, sped up by a factor.
    Wall(ScaledWallClock),
    /// Moves only through [`AppState::advance_to`]. Used by tests.
    Manual,
}

#[derive(Debug)]
pub struct AppState {
    scheduler: Mutex<Scheduler>,
    time: TimeSource,
}

impl AppState {
    pub fn new(scheduler: Scheduler, time: TimeSource) -> Arc<Self> {
        Arc::new(Self {
            scheduler: Mutex::new(scheduler),
            time,
        })
    }

    /// Locks the scheduler after catching its clock up with the time source.
    pub fn scheduler(&self) -> MutexGuard<'_, Scheduler> {
        let mut s = self.scheduler.lock();
        if let TimeSource::Wall(clock) = &self.time {
            let now = clock.now_ms();
            if now > s.now() {
                s.advance_until(now).expect("events are drained before the clock moves");
            }
        }
        s
    }

    /// Processes simulated events up to `at`.
    pub fn advance_to(&self, at: Millis) {
        self.scheduler
            .lock()
            .advance_until(at)
            .expect("events are drained before the clock moves");
    }

    pub fn is_wall_clock(&self) -> bool {
        matches!(self.time, TimeSource::Wall(_))
    }
}

type Shared = State<Arc<AppState>>;
type ApiResult<T = Json<Value>> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/openapi.json", get(|| async { Json(openapi::document()) }))
        .route("/{version}/{execution}", post(register).delete(delete_execution))
        .route(
            "/{version}/{execution}/DAG/vertices",
            post(add_vertices).delete(remove_vertices),
        )
        .route("/{version}/{execution}/DAG/edges", post(add_edges).delete(remove_edges))
        .route("/{version}/{execution}/startBatch", put(start_batch))
        .route("/{version}/{execution}/endBatch", put(end_batch))
        .route(
            "/{version}/{execution}/task/{id}",
            post(submit_task).get(task_state).delete(withdraw_task),
        )
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route") })
        .with_state(state)
}

fn check_version(version: &str) -> ApiResult<()> {
    if version == VERSION {
        Ok(())
    } else {
        Err(ApiError::unknown_version(version))
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(ApiError::bad_body)
}

/// Version check, lock, and execution lookup shared by rows 3 to 11.
fn open<'a>(state: &'a AppState, version: &str, execution: &str) -> ApiResult<MutexGuard<'a, Scheduler>> {
    check_version(version)?;
    let s = state.scheduler();
    s.execution(execution)?;
    Ok(s)
}

#[derive(Deserialize)]
struct RegisterBody {
    strategy: String,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct Registered {
    execution: ExecutionId,
    strategy: StrategyName,
}

async fn register(State(st): Shared, Path((version, execution)): Path<(String, String)>, body: Bytes) -> ApiResult<Json<Registered>> {
    check_version(&version)?;
    let id = ExecutionId::parse(&execution)?;
    let req: RegisterBody = parse(&body)?;
    let strategy: StrategyName = req.strategy.parse()?;
    st.scheduler().create_execution(id.clone(), strategy, req.seed)?;
    Ok(Json(Registered {
        execution: id,
        strategy,
    }))
}

async fn delete_execution(State(st): Shared, Path((version, execution)): Path<(String, String)>) -> ApiResult {
    check_version(&version)?;
    let summary = st.scheduler().delete_execution(&execution)?;
    Ok(Json(json!({
        "execution": execution,
        "finished": summary.finished,
        "failed": summary.failed,
        "withdrawn": summary.withdrawn,
    })))
}

async fn add_vertices(State(st): Shared, Path((version, execution)): Path<(String, String)>, body: Bytes) -> ApiResult {
    let mut s = open(&st, &version, &execution)?;
    let vertices: Vec<AbstractVertex> = parse(&body)?;
    let added = s.add_vertices(&execution, &vertices)?;
    Ok(Json(json!({ "added": added })))
}

async fn remove_vertices(State(st): Shared, Path((version, execution)): Path<(String, String)>, body: Bytes) -> ApiResult {
    let mut s = open(&st, &version, &execution)?;
    let ids: Vec<VertexId> = parse(&body)?;
    let removed = s.remove_vertices(&execution, &ids)?;
    Ok(Json(json!({ "removed": removed })))
}

async fn add_edges(State(st): Shared, Path((version, execution)): Path<(String, String)>, body: Bytes) -> ApiResult {
    let mut s = open(&st, &version, &execution)?;
    let edges: Vec<Edge> = parse(&body)?;
    let added = s.add_edges(&execution, &edges)?;
    Ok(Json(json!({ "added": added })))
}

async fn remove_edges(State(st): Shared, Path((version, execution)): Path<(String, String)>, body: Bytes) -> ApiResult {
    let mut s = open(&st, &version, &execution)?;
    let edges: Vec<Edge> = parse(&body)?;
    let removed = s.remove_edges(&execution, &edges)?;
    Ok(Json(json!({ "removed": removed })))
}

async fn start_batch(State(st): Shared, Path((version, execution)): Path<(String, String)>) -> ApiResult {
    open(&st, &version, &execution)?.open_batch(&execution)?;
    Ok(Json(json!({ "batchOpen": true })))
}

async fn end_batch(State(st): Shared, Path((version, execution)): Path<(String, String)>) -> ApiResult {
    open(&st, &version, &execution)?.close_batch(&execution)?;
    Ok(Json(json!({ "batchOpen": false })))
}

async fn submit_task(
    State(st): Shared,
    Path((version, execution, id)): Path<(String, String, String)>,
    body: Bytes,
) -> ApiResult<Json<Grant>> {
    let mut s = open(&st, &version, &execution)?;
    let request: TaskRequest = parse(&body)?;
    match s.submit_task(&execution, TaskId::from(id), request) {
        Ok(grant) => Ok(Json(grant)),
        Err(Error::UnknownVertex(v)) => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "UNKNOWN_ABSTRACT_VERTEX",
            format!("abstract vertex {v} does not exist"),
        )),
        Err(e) => Err(e.into()),
    }
}

async fn task_state(
    State(st): Shared,
    Path((version, execution, id)): Path<(String, String, String)>,
) -> ApiResult<Json<TaskStatus>> {
    let s = open(&st, &version, &execution)?;
    let task = s.task(&execution, &TaskId::from(id))?;
    Ok(Json(TaskStatus::from(task)))
}

async fn withdraw_task(
    State(st): Shared,
    Path((version, execution, id)): Path<(String, String, String)>,
) -> ApiResult<Json<TaskStatus>> {
    let mut s = open(&st, &version, &execution)?;
    let id = TaskId::from(id);
    s.withdraw_task(&execution, &id)?;
    Ok(Json(TaskStatus::from(s.task(&execution, &id)?)))
}
