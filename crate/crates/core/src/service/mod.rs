//! Local calibration service: WebSocket at `/ws`, panel assets at `/`.
//!
//! The pipeline never waits on the service. It hands telemetry and preview
//! images to a [`Publisher`], which pushes them into a bounded broadcast
//! queue. Each connection drains that queue at its own pace; a client that
//! falls behind loses the oldest entries and sees the loss in its
//! `client_dropped` telemetry counter. Preview JPEGs are encoded lazily by
//! the first connection that gets to send them, so a stalled client costs
//! no encoding work.

mod preview;
mod protocol;

pub use preview::{encode_jpeg, encode_preview, PreviewImage, PreviewLimiter, PREVIEW_MAX_WIDTH};
pub use protocol::{handle_message, PreviewKind, Response, ServerMessage, StreamId};

use crate::config::SharedConfig;
use crate::gesture::DetectionSet;
use crate::imaging::MarkerColor;
use crate::sink::EventLogEntry;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::get;
use axum::Router;
use serde::Serialize;
use serde_json::{Map, Value};
use std::collections::BTreeSet;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Component, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::Instant;
use thiserror::Error;
use tokio::sync::{broadcast, oneshot};

const QUEUE_CAPACITY: usize = 16;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("cannot start control service on port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start service runtime: {0}")]
    Runtime(#[source] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub bind: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    pub panel_dir: Option<PathBuf>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: crate::config::DEFAULT_PORT,
            panel_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkerSummary {
    pub present: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<usize>,
}

/// One processed frame, as reported to subscribers.
#[derive(Debug, Clone, Serialize)]
pub struct TelemetryFrame {
    pub frame_index: u64,
    pub timestamp: u64,
    /// Frames processed during the last wall-clock second.
    pub fps: f64,
    pub detections: Map<String, Value>,
    pub actions: Vec<EventLogEntry>,
}

impl TelemetryFrame {
    pub fn new(d: &DetectionSet, fps: f64, actions: Vec<EventLogEntry>) -> Self {
        let mut detections = Map::new();
        for color in MarkerColor::ALL {
            let det = d.get(color);
            let summary = MarkerSummary {
                present: det.is_some(),
                x: det.map(|m| m.centroid.x),
                y: det.map(|m| m.centroid.y),
                area: det.map(|m| m.area),
            };
            detections.insert(
                color.name().into(),
                serde_json::to_value(summary).expect("summary serializes"),
            );
        }
        Self {
            frame_index: d.frame_index,
            timestamp: d.timestamp,
            fps,
            detections,
            actions,
        }
    }

    fn to_message(&self, preview_skipped: u64, client_dropped: u64) -> String {
        let mut m = Map::new();
        m.insert("type".into(), "telemetry".into());
        if let Value::Object(fields) = serde_json::to_value(self).expect("telemetry serializes") {
            m.extend(fields);
        }
        m.insert("preview_skipped".into(), preview_skipped.into());
        m.insert("client_dropped".into(), client_dropped.into());
        Value::Object(m).to_string()
    }
}

struct PreviewItem {
    stream: StreamId,
    frame_index: u64,
    image: PreviewImage,
    encoded: OnceLock<Option<Arc<str>>>,
}

impl PreviewItem {
    fn encoded(&self, skipped: &AtomicU64) -> Option<Arc<str>> {
        self.encoded
            .get_or_init(
                || match encode_preview(&self.image, self.stream, self.frame_index) {
                    Ok(text) => Some(text.into()),
                    Err(e) => {
                        log::warn!("preview encoding failed: {e}");
                        skipped.fetch_add(1, Ordering::Relaxed);
                        None
                    }
                },
            )
            .clone()
    }
}

#[derive(Clone)]
enum Outbound {
    Telemetry(Arc<TelemetryFrame>),
    Preview(Arc<PreviewItem>),
}

struct Hub {
    config: SharedConfig,
    out: broadcast::Sender<Outbound>,
    subscribers: [AtomicUsize; StreamId::ALL.len()],
    preview_skipped: AtomicU64,
    panel_dir: Option<PathBuf>,
}

impl Hub {
    fn wants(&self, stream: StreamId) -> bool {
        self.subscribers[stream.slot()].load(Ordering::Relaxed) > 0
    }

    fn resubscribe(&self, old: &BTreeSet<StreamId>, new: &BTreeSet<StreamId>) {
        for s in old.difference(new) {
            self.subscribers[s.slot()].fetch_sub(1, Ordering::Relaxed);
        }
        for s in new.difference(old) {
            self.subscribers[s.slot()].fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// Pipeline-side handle for publishing telemetry and previews.
pub struct Publisher {
    hub: Arc<Hub>,
    limiter: PreviewLimiter,
}

impl Publisher {
    pub fn wants(&self, stream: StreamId) -> bool {
        self.hub.wants(stream)
    }

    /// True when someone subscribes to `stream` and its rate allows a frame at
    /// `timestamp` now. A true result consumes the slot.
    pub fn preview_due(&mut self, stream: StreamId, timestamp: u64, fps: f64) -> bool {
        self.wants(stream) && self.limiter.due(stream, timestamp, Instant::now(), fps)
    }

    pub fn publish_preview(&self, stream: StreamId, frame_index: u64, image: PreviewImage) {
        let item = PreviewItem {
            stream,
            frame_index,
            image,
            encoded: OnceLock::new(),
        };
        let _ = self.hub.out.send(Outbound::Preview(Arc::new(item)));
    }

    pub fn publish_telemetry(&self, frame: TelemetryFrame) {
        if self.wants(StreamId::Telemetry) {
            let _ = self.hub.out.send(Outbound::Telemetry(Arc::new(frame)));
        }
    }

    pub fn preview_skipped(&self) -> u64 {
        self.hub.preview_skipped.load(Ordering::Relaxed)
    }
}

pub struct ControlService {
    runtime: Option<tokio::runtime::Runtime>,
    addr: SocketAddr,
    hub: Arc<Hub>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl ControlService {
    /// Binds synchronously, so a busy port is reported before returning.
    pub fn start(opts: ServiceOptions, config: SharedConfig) -> Result<Self, ServiceError> {
        let listener = std::net::TcpListener::bind((opts.bind, opts.port)).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                ServiceError::PortInUse(opts.port)
            } else {
                ServiceError::Bind {
                    port: opts.port,
                    source: e,
                }
            }
        })?;
        let addr = listener.local_addr().map_err(|source| ServiceError::Bind {
            port: opts.port,
            source,
        })?;
        listener
            .set_nonblocking(true)
            .map_err(|source| ServiceError::Bind {
                port: opts.port,
                source,
            })?;

        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .thread_name("control-service")
            .enable_all()
            .build()
            .map_err(ServiceError::Runtime)?;

        let (out, _) = broadcast::channel(QUEUE_CAPACITY);
        let hub = Arc::new(Hub {
            config,
            out,
            subscribers: Default::default(),
            preview_skipped: AtomicU64::new(0),
            panel_dir: opts.panel_dir,
        });

        let app = Router::new()
            .route("/ws", get(ws_handler))
            .fallback(get(static_handler))
            .with_state(hub.clone());
        let (tx, rx) = oneshot::channel::<()>();
        let listener = {
            let _guard = runtime.enter();
            tokio::net::TcpListener::from_std(listener).map_err(|source| ServiceError::Bind {
                port: opts.port,
                source,
            })?
        };
        runtime.spawn(async move {
            let server = axum::serve(listener, app).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = server.await {
                log::error!("control service stopped: {e}");
            }
        });
        log::info!("control service listening on ws://{addr}/ws");
        Ok(Self {
            runtime: Some(runtime),
            addr,
            hub,
            shutdown: Some(tx),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn config(&self) -> &SharedConfig {
        &self.hub.config
    }

    /// A publisher for one pipeline. Each has its own preview rate limiter.
    pub fn publisher(&self) -> Publisher {
        Publisher {
            hub: self.hub.clone(),
            limiter: PreviewLimiter::default(),
        }
    }
}

impl Drop for ControlService {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(hub): State<Arc<Hub>>) -> HttpResponse {
    ws.on_upgrade(move |socket| client_session(socket, hub))
}

async fn client_session(mut socket: WebSocket, hub: Arc<Hub>) {
    let mut config_rx = hub.config.subscribe();
    config_rx.mark_unchanged();
    let mut out_rx = hub.out.subscribe();
    let mut subs = BTreeSet::new();
    let mut dropped = 0u64;

    let hello = protocol::config_message(&hub.config).to_json();
    if socket.send(Message::Text(hello)).await.is_err() {
        return;
    }

    loop {
        let outgoing: Option<String> = tokio::select! {
            inbound = socket.recv() => match inbound {
                Some(Ok(Message::Text(text))) => {
                    let resp = handle_message(&text, &hub.config);
                    if let Some(new) = resp.subscribe {
                        hub.resubscribe(&subs, &new);
                        subs = new;
                    }
                    let mut failed = false;
                    for reply in resp.replies {
                        if socket.send(Message::Text(reply.to_json())).await.is_err() {
                            failed = true;
                            break;
                        }
                    }
                    if failed {
                        break;
                    }
                    None
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => None,
            },
            changed = config_rx.changed() => match changed {
                Ok(()) => {
                    let snapshot = config_rx.borrow_and_update().to_json();
                    Some(ServerMessage::Config { config: snapshot }.to_json())
                }
                Err(_) => break,
            },
            item = out_rx.recv() => match item {
                Ok(Outbound::Telemetry(t)) if subs.contains(&StreamId::Telemetry) => {
                    let skipped = hub.preview_skipped.load(Ordering::Relaxed);
                    Some(t.to_message(skipped, dropped))
                }
                Ok(Outbound::Preview(p)) if subs.contains(&p.stream) => {
                    let hub = hub.clone();
                    tokio::task::spawn_blocking(move || p.encoded(&hub.preview_skipped))
                        .await
                        .ok()
                        .flatten()
                        .map(|s| s.to_string())
                }
                Ok(_) => None,
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    dropped += n;
                    None
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
        };
        if let Some(text) = outgoing {
            if socket.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
    }
    hub.resubscribe(&subs, &BTreeSet::new());
}

const PLACEHOLDER_PANEL: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>chroma-mouse</title></head>
<body><h1>chroma-mouse control service</h1>
<p>No panel assets installed. Set <code>service.panel_dir</code> to the built panel,
or connect a WebSocket client to <code>/ws</code>.</p></body></html>
";

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

async fn static_handler(State(hub): State<Arc<Hub>>, uri: Uri) -> HttpResponse {
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = std::path::Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::BAD_REQUEST.into_response();
    }
    let Some(root) = &hub.panel_dir else {
        return if rel == std::path::Path::new("index.html") {
            (
                [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
                PLACEHOLDER_PANEL,
            )
                .into_response()
        } else {
            StatusCode::NOT_FOUND.into_response()
        };
    };
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
