//! JSON text protocol spoken on `/ws`.
//!
//! Client to server:
//!
//! ```json
//! {"type":"get_config"}
//! {"type":"set_config","patch":{"detect.threshold_fraction":0.3}}
//! {"type":"subscribe","streams":["telemetry","preview:red"]}
//! ```
//!
//! Server to client: `config`, `error`, `subscribed`, `telemetry` and
//! `preview` messages. See the README for the full schema.

use crate::config::SharedConfig;
use crate::imaging::MarkerColor;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamId {
    Telemetry,
    Preview(PreviewKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PreviewKind {
    Mask(MarkerColor),
    Camera,
}

impl StreamId {
    pub const ALL: [StreamId; 5] = [
        StreamId::Telemetry,
        StreamId::Preview(PreviewKind::Mask(MarkerColor::Red)),
        StreamId::Preview(PreviewKind::Mask(MarkerColor::Green)),
        StreamId::Preview(PreviewKind::Mask(MarkerColor::Blue)),
        StreamId::Preview(PreviewKind::Camera),
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "telemetry" => StreamId::Telemetry,
            "preview:camera" => StreamId::Preview(PreviewKind::Camera),
            other => {
                let color = MarkerColor::parse(other.strip_prefix("preview:")?)?;
                StreamId::Preview(PreviewKind::Mask(color))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamId::Telemetry => "telemetry",
            StreamId::Preview(PreviewKind::Camera) => "preview:camera",
            StreamId::Preview(PreviewKind::Mask(MarkerColor::Red)) => "preview:red",
            StreamId::Preview(PreviewKind::Mask(MarkerColor::Green)) => "preview:green",
            StreamId::Preview(PreviewKind::Mask(MarkerColor::Blue)) => "preview:blue",
        }
    }

    /// Dense index into [`StreamId::ALL`].
    pub fn slot(self) -> usize {
        StreamId::ALL
            .iter()
            .position(|&s| s == self)
            .expect("listed")
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ClientMessage {
    GetConfig,
    SetConfig { patch: Map<String, Value> },
    Subscribe { streams: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Config {
        config: Map<String, Value>,
    },
    Error {
        field: Option<String>,
        reason: String,
    },
    Subscribed {
        streams: Vec<String>,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }

    fn error(field: Option<&str>, reason: impl Into<String>) -> Self {
        ServerMessage::Error {
            field: field.map(str::to_owned),
            reason: reason.into(),
        }
    }
}

pub fn config_message(config: &SharedConfig) -> ServerMessage {
    ServerMessage::Config {
        config: config.snapshot().to_json(),
    }
}

/// What a client connection should do after one inbound message.
#[derive(Debug, Default, PartialEq)]
pub struct Response {
    /// Sent to the requesting client only.
    pub replies: Vec<ServerMessage>,
    /// Replaces the client's subscription set.
    pub subscribe: Option<BTreeSet<StreamId>>,
    /// A patch was accepted; every client must receive the new config.
    pub config_changed: bool,
}

pub fn handle_message(text: &str, config: &SharedConfig) -> Response {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Response {
                replies: vec![ServerMessage::error(None, format!("malformed JSON: {e}"))],
                ..Default::default()
            }
        }
    };
    let msg: ClientMessage = match serde_json::from_value(value.clone()) {
        Ok(m) => m,
        Err(e) => {
            let field = match value.get("type").and_then(Value::as_str) {
                Some("set_config") => "patch",
                Some("subscribe") => "streams",
                _ => "type",
            };
            return Response {
                replies: vec![ServerMessage::error(Some(field), e.to_string())],
                ..Default::default()
            };
        }
    };
    match msg {
        ClientMessage::GetConfig => Response {
            replies: vec![config_message(config)],
            ..Default::default()
        },
        ClientMessage::SetConfig { patch } => match config.apply_patch(&patch) {
            Ok(_) => Response {
                config_changed: true,
                ..Default::default()
            },
            Err(e) => Response {
                replies: vec![ServerMessage::error(Some(&e.key), e.reason)],
                ..Default::default()
            },
        },
        ClientMessage::Subscribe { streams } => {
            let mut set = BTreeSet::new();
            for s in &streams {
                match StreamId::parse(s) {
                    Some(id) => {
                        set.insert(id);
                    }
                    None => {
                        return Response {
                            replies: vec![ServerMessage::error(
                                Some("streams"),
                                format!("unknown stream {s:?}"),
                            )],
                            ..Default::default()
                        }
                    }
                }
            }
            Response {
                replies: vec![ServerMessage::Subscribed {
                    streams: set.iter().map(|s| s.name().to_owned()).collect(),
                }],
                subscribe: Some(set),
                config_changed: false,
            }
        }
    }
}

/// `{"type":"preview", ...}` message text.
pub fn preview_message(stream: StreamId, frame_index: u64, data: &str) -> String {
    json!({
        "type": "preview",
        "stream": stream.name(),
        "frame_index": frame_index,
        "data": data,
    })
    .to_string()
}
