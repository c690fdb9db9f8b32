use crate::protocol::{parse_request, Request, StationMessage, PROTOCOL_ERROR_TOPIC};
use crate::safe_area::{SafeArea, SafeAreaGuard};
use crate::services::{self, SERVICES};
use crate::topics::{is_known, is_writable, topic_payload, TopicRegistry};
use axum::body::Bytes;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::{json, Value};
use sib_core::engine::{Engine, LiveHandle, LiveHost, Pace};
use sib_core::lang::{parse, ProgramStore, LangError};
use sib_core::sim::{SimConfig, SimError};
use std::collections::HashSet;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use thiserror::Error;
use tokio::sync::{broadcast, oneshot};
use tokio::task::JoinHandle;

const PLACEHOLDER_INDEX: &str = include_str!("../static/index.html");
const BUS_CAPACITY: usize = 4096;

#[derive(Debug, Clone)]
pub struct StationConfig {
    pub bind: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    pub drones: usize,
    pub spacing: f64,
    pub sim: SimConfig,
    pub pace: Pace,
    pub program_dir: PathBuf,
    /// Built UI assets. Without it a placeholder page is served at `/`.
    pub static_dir: Option<PathBuf>,
    pub safe_area: SafeArea,
}

impl StationConfig {
    pub fn new(program_dir: impl Into<PathBuf>) -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            drones: 4,
            spacing: 1.0,
            sim: SimConfig::default(),
            pace: Pace::RealTime,
            program_dir: program_dir.into(),
            static_dir: None,
            safe_area: SafeArea::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StationError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: SocketAddr, source: std::io::Error },
    #[error("program directory {path}: {source}")]
    ProgramDir { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One topic event, serialized once for every subscriber.
#[derive(Debug)]
pub struct Frame {
    pub topic: String,
    pub text: String,
}

/// State shared by every session and HTTP handler.
pub struct Shared {
    pub(crate) engine: LiveHandle,
    pub(crate) store: ProgramStore,
    pub(crate) topics: Arc<Mutex<TopicRegistry>>,
    bus: broadcast::Sender<Arc<Frame>>,
    static_dir: Option<PathBuf>,
    next_session: AtomicU64,
}

impl Shared {
    /// Runs `f` on the engine thread between ticks.
    pub(crate) fn engine<R, F>(&self, f: F) -> Result<R, String>
    where
        R: Send + 'static,
        F: FnOnce(&mut Engine) -> R + Send + 'static,
    {
        self.engine.call(f).ok_or_else(|| "station is shutting down".to_string())
    }

    fn publish(&self, topic: &str, mut payload: Value, sim_time: f64) {
        if let Value::Object(m) = &mut payload {
            m.insert("sim_time".into(), json!(sim_time));
        }
        self.topics.lock().expect("topic registry").record(topic, sim_time);
        let text = StationMessage::event(topic, payload).to_text();
        let _ = self.bus.send(Arc::new(Frame {
            topic: topic.to_string(),
            text,
        }));
    }
}

/// A running station. Dropping it without [`Station::shutdown`] aborts the server.
pub struct Station {
    addr: SocketAddr,
    shared: Arc<Shared>,
    host: Option<LiveHost>,
    stop: Option<oneshot::Sender<()>>,
    server: Option<JoinHandle<()>>,
}

impl Station {
    /// Binds, starts the engine thread and begins serving.
    pub async fn start(config: StationConfig) -> Result<Station, StationError> {
        std::fs::create_dir_all(&config.program_dir).map_err(|source| StationError::ProgramDir {
            path: config.program_dir.clone(),
            source,
        })?;
        let addr = SocketAddr::new(config.bind, config.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|source| StationError::BindFailure { addr, source })?;
        let addr = listener.local_addr().map_err(|source| StationError::BindFailure { addr, source })?;

        let mut engine = Engine::new(config.sim, config.drones, config.spacing)?;
        engine.add_supervisor(Box::new(SafeAreaGuard::new(config.safe_area)));

        let (bus, _) = broadcast::channel(BUS_CAPACITY);
        let topics = Arc::new(Mutex::new(TopicRegistry::new()));
        let sink = {
            let bus = bus.clone();
            let topics = topics.clone();
            move |events: Vec<sib_core::engine::Stamped>| {
                let mut registry = topics.lock().expect("topic registry");
                for s in &events {
                    let (topic, payload) = topic_payload(s);
                    registry.record(&topic, s.sim_time);
                    let text = StationMessage::event(&topic, payload).to_text();
                    let _ = bus.send(Arc::new(Frame { topic, text }));
                }
            }
        };
        let host = LiveHost::spawn(engine, config.pace, sink);
        let shared = Arc::new(Shared {
            engine: host.handle(),
            store: ProgramStore::new(&config.program_dir),
            topics,
            bus,
            static_dir: config.static_dir.clone(),
            next_session: AtomicU64::new(1),
        });

        let app = router(shared.clone());
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let server = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stop_rx.await;
                })
                .await;
        });
        Ok(Station {
            addr,
            shared,
            host: Some(host),
            stop: Some(stop_tx),
            server: Some(server),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn engine(&self) -> LiveHandle {
        self.shared.engine.clone()
    }

    /// Stops serving and returns the engine in its final state.
    pub async fn shutdown(mut self) -> Engine {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(server) = self.server.take() {
            // open web sockets keep graceful shutdown waiting; they are cut off
            server.abort();
            let _ = server.await;
        }
        let host = self.host.take().expect("host present until shutdown");
        tokio::task::spawn_blocking(move || host.shutdown())
            .await
            .expect("engine thread join")
    }
}

impl Drop for Station {
    fn drop(&mut self) {
        if let Some(server) = self.server.take() {
            server.abort();
        }
    }
}

fn router(shared: Arc<Shared>) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/healthz", get(|| async { Json(json!({ "ok": true })) }))
        .route("/api/programs", get(list_programs))
        .route("/api/programs/{name}", get(get_program).put(put_program))
        .route("/api/trace/{run_id}", get(get_trace))
        .route("/", get(index))
        .route("/{*path}", get(static_file))
        .with_state(shared)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn lang_status(e: &LangError) -> StatusCode {
    match e {
        LangError::NotFound(_) => StatusCode::NOT_FOUND,
        LangError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

async fn list_programs(State(shared): State<Arc<Shared>>) -> Response {
    match shared.store.list() {
        Ok(names) => Json(json!({ "programs": names })).into_response(),
        Err(e) => error(lang_status(&e), e.to_string()),
    }
}

async fn get_program(State(shared): State<Arc<Shared>>, Path(name): Path<String>) -> Response {
    match shared.store.load_bytes(&name) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => error(lang_status(&e), e.to_string()),
    }
}

async fn put_program(State(shared): State<Arc<Shared>>, Path(name): Path<String>, body: Bytes) -> Response {
    let stored = parse(&body).and_then(|p| shared.store.store(&name, &p));
    match stored {
        Ok(name) => Json(json!({ "name": name })).into_response(),
        Err(e) => error(lang_status(&e), e.to_string()),
    }
}

async fn get_trace(State(shared): State<Arc<Shared>>, Path(run_id): Path<u64>) -> Response {
    let s = shared.clone();
    let jsonl = tokio::task::spawn_blocking(move || s.engine(move |e| e.trace(run_id).map(|t| t.to_jsonl())))
        .await
        .expect("engine call");
    match jsonl {
        Ok(Some(text)) => ([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response(),
        Ok(None) => error(StatusCode::NOT_FOUND, format!("no trace for run {run_id}")),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e),
    }
}

async fn index(State(shared): State<Arc<Shared>>) -> Response {
    match &shared.static_dir {
        Some(dir) => serve_file(dir.join("index.html")).await,
        None => ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], PLACEHOLDER_INDEX).into_response(),
    }
}

async fn static_file(State(shared): State<Arc<Shared>>, Path(path): Path<String>) -> Response {
    let Some(dir) = &shared.static_dir else {
        return error(StatusCode::NOT_FOUND, "not found");
    };
    // only plain relative paths below the asset directory
    let safe = path
        .split('/')
        .all(|part| !part.is_empty() && part != ".." && part != "." && !part.contains('\\'));
    if !safe {
        return error(StatusCode::NOT_FOUND, "not found");
    }
    serve_file(dir.join(path)).await
}

async fn serve_file(path: PathBuf) -> Response {
    let content_type = match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type)], bytes).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, "not found"),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| session(socket, shared))
}

async fn send(socket: &mut WebSocket, msg: &StationMessage) -> bool {
    socket.send(Message::Text(msg.to_text().into())).await.is_ok()
}

async fn session(mut socket: WebSocket, shared: Arc<Shared>) {
    let session_id = shared.next_session.fetch_add(1, Ordering::Relaxed);
    let mut bus = shared.bus.subscribe();
    let mut subscriptions: HashSet<String> = HashSet::new();
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Binary(_))) => {
                        protocol_error(&mut socket, "binary frames are not supported").await;
                        break;
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                match parse_request(text.as_str()) {
                    Ok(req) => {
                        if !handle(&mut socket, &shared, session_id, &mut subscriptions, req).await {
                            break;
                        }
                    }
                    Err(reason) => {
                        protocol_error(&mut socket, &reason).await;
                        break;
                    }
                }
            }
            frame = bus.recv() => match frame {
                Ok(frame) => {
                    if subscriptions.contains(&frame.topic)
                        && socket.send(Message::Text(frame.text.clone().into())).await.is_err()
                    {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    }
    shared.topics.lock().expect("topic registry").remove_session(session_id);
}

async fn protocol_error(socket: &mut WebSocket, reason: &str) {
    let frame = StationMessage::event(PROTOCOL_ERROR_TOPIC, json!({ "reason": reason }));
    let _ = send(socket, &frame).await;
    let _ = socket
        .send(Message::Close(Some(CloseFrame {
            code: axum::extract::ws::close_code::PROTOCOL,
            reason: "protocol error".into(),
        })))
        .await;
}

/// Returns false when the socket is gone.
async fn handle(
    socket: &mut WebSocket,
    shared: &Arc<Shared>,
    session_id: u64,
    subscriptions: &mut HashSet<String>,
    req: Request,
) -> bool {
    match req {
        Request::Subscribe(topic) => {
            if !is_known(&topic) {
                return send(socket, &StationMessage::response(None, Err(format!("unknown topic `{topic}`")))).await;
            }
            subscriptions.insert(topic);
            true
        }
        Request::Unsubscribe(topic) => {
            subscriptions.remove(&topic);
            true
        }
        Request::Publish { topic, id, payload } => {
            let result = if !is_known(&topic) {
                Err(format!("unknown topic `{topic}`"))
            } else if !is_writable(&topic) {
                Err(format!("topic `{topic}` is not writable"))
            } else {
                let s = shared.clone();
                let p = payload.clone();
                let applied = tokio::task::spawn_blocking(move || services::manual(&s, p))
                    .await
                    .expect("manual command");
                applied.map(|sim_time| {
                    shared.topics.lock().expect("topic registry").add_client_publisher(&topic, session_id);
                    shared.publish(&topic, payload, sim_time);
                })
            };
            match (result, id) {
                (Ok(()), None) => true,
                (Ok(()), Some(id)) => send(socket, &StationMessage::response(Some(id), Ok(json!({})))).await,
                (Err(reason), id) => send(socket, &StationMessage::response(id, Err(reason))).await,
            }
        }
        Request::Call { id, service, payload } => {
            let result = if SERVICES.contains(&service.as_str()) {
                let s = shared.clone();
                tokio::task::spawn_blocking(move || services::call(&s, &service, payload))
                    .await
                    .unwrap_or_else(|e| Err(format!("service failed: {e}")))
            } else {
                Err("unknown service".to_string())
            };
            send(socket, &StationMessage::response(Some(id), result)).await
        }
    }
}
