//! JSON/SSE control surface for one interactive engine.
//!
//! The engine runs on its own thread and takes commands through a channel.
//! Every command is acknowledged with the snapshot taken right after it was
//! applied; sweeps publish snapshots to subscribers at most every
//! [`PUBLISH_INTERVAL`].
//!
//! | verb | route |
//! |---|---|
//! | load-instance | `POST /api/instance` with `{"text": "..."}` or `{"builtin": "pr01"}` |
//! | start, pause, resume, force-reallocate, stop | `POST /api/<verb>` |
//! | set-weight | `POST /api/set-weight` with `{"w_dist": 0.3}` |
//! | snapshot | `GET /api/snapshot` |
//! | subscribe | `GET /api/events` (server-sent `snapshot` events) |

use std::convert::Infallible;
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{Stream, StreamExt};
use marketvrp_core::{
    parse_cordeau, pr01, Customer, Depot, Engine, EngineCommand, EngineConfig, EngineError,
    Instance, PreferenceWeights, Snapshot, VehicleSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{oneshot, watch};
use tokio_stream::wrappers::WatchStream;

pub const PUBLISH_INTERVAL: Duration = Duration::from_millis(50);
pub const INITIAL_WEIGHT: f64 = 0.5;

struct Request {
    command: EngineCommand,
    reply: oneshot::Sender<Snapshot>,
}

struct Session {
    instance: Arc<Instance>,
    requests: mpsc::Sender<Request>,
}

struct Shared {
    config: EngineConfig,
    session: Mutex<Option<Session>>,
    updates: watch::Sender<Option<Arc<Snapshot>>>,
}

#[derive(Clone)]
pub struct Service {
    shared: Arc<Shared>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceView {
    pub customers: Vec<Customer>,
    pub depots: Vec<Depot>,
    pub vehicles: Vec<VehicleSpec>,
}

impl From<&Instance> for InstanceView {
    fn from(inst: &Instance) -> Self {
        Self {
            customers: inst.customers().to_vec(),
            depots: inst.depots().to_vec(),
            vehicles: inst.vehicles().to_vec(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRequest {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub builtin: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct WeightRequest {
    pub w_dist: f64,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn no_engine() -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "no engine is running; load an instance first",
    )
}

impl Service {
    pub fn new(config: EngineConfig) -> Self {
        let (updates, _) = watch::channel(None);
        Self {
            shared: Arc::new(Shared {
                config,
                session: Mutex::new(None),
                updates,
            }),
        }
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/api/instance", post(load_instance))
            .route(
                "/api/start",
                post(|s: State<Service>| command(s, EngineCommand::Resume)),
            )
            .route(
                "/api/pause",
                post(|s: State<Service>| command(s, EngineCommand::Pause)),
            )
            .route(
                "/api/resume",
                post(|s: State<Service>| command(s, EngineCommand::Resume)),
            )
            .route(
                "/api/force-reallocate",
                post(|s: State<Service>| command(s, EngineCommand::ForceReallocate)),
            )
            .route("/api/set-weight", post(set_weight))
            .route("/api/stop", post(stop))
            .route("/api/snapshot", get(snapshot))
            .route("/api/events", get(events))
            .with_state(self.clone())
    }

    /// Replaces any running engine with a fresh, paused one on `instance`.
    pub fn load(&self, instance: Instance) -> Result<Snapshot, EngineError> {
        let instance = Arc::new(instance);
        let w = PreferenceWeights::new(INITIAL_WEIGHT).expect("valid constant");
        let mut engine = Engine::new(Arc::clone(&instance), w, self.shared.config.clone())?;
        engine.apply(EngineCommand::Pause);
        let first = engine.snapshot();
        let (tx, rx) = mpsc::channel();
        let updates = self.shared.updates.clone();
        updates.send_replace(Some(Arc::new(first.clone())));
        // Dropping the previous sender ends the previous worker.
        *self.shared.session.lock().unwrap() = Some(Session {
            instance,
            requests: tx,
        });
        thread::spawn(move || run_worker(engine, rx, updates));
        Ok(first)
    }

    /// Sends a command to the engine and waits for the resulting snapshot.
    pub async fn send(&self, command: EngineCommand) -> Result<Snapshot, ApiError> {
        let (reply, answer) = oneshot::channel();
        {
            let session = self.shared.session.lock().unwrap();
            let session = session.as_ref().ok_or_else(no_engine)?;
            session
                .requests
                .send(Request { command, reply })
                .map_err(|_| no_engine())?;
        }
        answer.await.map_err(|_| no_engine())
    }

    fn instance(&self) -> Option<Arc<Instance>> {
        self.shared
            .session
            .lock()
            .unwrap()
            .as_ref()
            .map(|s| Arc::clone(&s.instance))
    }
}

fn run_worker(
    mut engine: Engine,
    rx: mpsc::Receiver<Request>,
    updates: watch::Sender<Option<Arc<Snapshot>>>,
) {
    let publish = |snap: &Snapshot| {
        updates.send_replace(Some(Arc::new(snap.clone())));
    };
    let mut last = Instant::now();
    loop {
        let mut batch = Vec::new();
        if engine.is_paused() || engine.is_converged() {
            match rx.recv() {
                Ok(r) => batch.push(r),
                Err(_) => return,
            }
        }
        loop {
            match rx.try_recv() {
                Ok(r) => batch.push(r),
                Err(mpsc::TryRecvError::Empty) => break,
                Err(mpsc::TryRecvError::Disconnected) => return,
            }
        }
        for Request { command, reply } in batch {
            let stop = engine.apply(command);
            let snap = engine.snapshot();
            publish(&snap);
            let _ = reply.send(snap);
            if stop {
                return;
            }
        }
        if engine.is_paused() || engine.is_converged() {
            continue;
        }
        let changed = engine.sweep();
        if engine.is_converged() || (changed && last.elapsed() >= PUBLISH_INTERVAL) {
            publish(&engine.snapshot());
            last = Instant::now();
        }
    }
}

async fn load_instance(
    State(service): State<Service>,
    Json(req): Json<LoadRequest>,
) -> Result<Response, ApiError> {
    let instance = match (req.text, req.builtin.as_deref()) {
        (Some(text), None) => parse_cordeau(&text).map_err(|e| ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({ "error": e.to_string(), "issues": e.issues }),
        })?,
        (None, Some("pr01")) => pr01(),
        (None, Some(other)) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("unknown builtin instance {other:?}"),
            ))
        }
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "give exactly one of `text` or `builtin`",
            ))
        }
    };
    let view = InstanceView::from(&instance);
    let worker = service.clone();
    let snap = tokio::task::spawn_blocking(move || worker.load(instance))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(Json(json!({ "instance": view, "snapshot": snap })).into_response())
}

async fn command(
    State(service): State<Service>,
    command: EngineCommand,
) -> Result<Json<Snapshot>, ApiError> {
    service.send(command).await.map(Json)
}

async fn set_weight(
    State(service): State<Service>,
    Json(req): Json<WeightRequest>,
) -> Result<Json<Snapshot>, ApiError> {
    let w = PreferenceWeights::new(req.w_dist)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    service.send(EngineCommand::SetWeight(w)).await.map(Json)
}

async fn stop(State(service): State<Service>) -> Result<Json<Snapshot>, ApiError> {
    let snap = service.send(EngineCommand::Stop).await?;
    service.shared.session.lock().unwrap().take();
    Ok(Json(snap))
}

async fn snapshot(State(service): State<Service>) -> Result<Response, ApiError> {
    let snap = service
        .shared
        .updates
        .borrow()
        .clone()
        .ok_or_else(no_engine)?;
    let instance = service.instance().map(|i| InstanceView::from(&*i));
    Ok(Json(json!({ "instance": instance, "snapshot": &*snap })).into_response())
}

async fn events(
    State(service): State<Service>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let stream =
        WatchStream::new(service.shared.updates.subscribe()).filter_map(|snap| async move {
            let snap = snap?;
            Some(Ok(Event::default()
                .event("snapshot")
                .json_data(&*snap)
                .expect("snapshots serialize")))
        });
    Sse::new(stream).keep_alive(KeepAlive::default())
}
