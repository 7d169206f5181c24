//! Pointer action delivery.
//!
//! The record backend writes one JSON object per line:
//!
//! ```text
//! {"timestamp":233,"kind":"move","x":100,"y":200,"frame_index":7}
//! {"timestamp":266,"kind":"left_click","frame_index":8}
//! ```

use crate::gesture::{ActionKind, Geometry, PointerAction, ScreenPoint};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("OS input injection unavailable: {0}")]
    PermissionDenied(String),
    #[error("OS input injection failed: {0}")]
    Injection(String),
    #[error("event log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkBackend {
    OsInjection,
    Record(PathBuf),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Move,
    LeftClick,
    RightClick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventLogEntry {
    pub timestamp: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<i32>,
    pub frame_index: u64,
}

impl EventLogEntry {
    pub fn new(action: &PointerAction, frame_index: u64) -> Self {
        let (kind, point) = match action.kind {
            ActionKind::MoveTo(p) => (EventKind::Move, Some(p)),
            ActionKind::LeftClick => (EventKind::LeftClick, None),
            ActionKind::RightClick => (EventKind::RightClick, None),
        };
        Self {
            timestamp: action.timestamp,
            kind,
            x: point.map(|p| p.x),
            y: point.map(|p| p.y),
            frame_index,
        }
    }

    /// Reconstructs the action, if the entry is well-formed.
    pub fn action(&self) -> Option<PointerAction> {
        let kind = match (self.kind, self.x, self.y) {
            (EventKind::Move, Some(x), Some(y)) => ActionKind::MoveTo(ScreenPoint { x, y }),
            (EventKind::LeftClick, None, None) => ActionKind::LeftClick,
            (EventKind::RightClick, None, None) => ActionKind::RightClick,
            _ => return None,
        };
        Some(PointerAction {
            kind,
            timestamp: self.timestamp,
        })
    }
}

pub trait EventSink {
    fn emit(&mut self, action: &PointerAction, frame_index: u64) -> Result<(), SinkError>;

    /// Screen size as seen by the backend, when it knows one.
    fn screen(&self) -> Option<Geometry> {
        None
    }
}

pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _: &PointerAction, _: u64) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Appends one JSON line per action, flushed per entry.
pub struct RecordSink {
    path: PathBuf,
    file: File,
    line: Vec<u8>,
}

impl RecordSink {
    /// Creates (or truncates) the log at `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, SinkError> {
        let path = path.as_ref().to_owned();
        let file = File::create(&path).map_err(|source| SinkError::Log {
            path: path.clone(),
            source,
        })?;
        Ok(Self {
            path,
            file,
            line: Vec::with_capacity(96),
        })
    }
}

impl EventSink for RecordSink {
    fn emit(&mut self, action: &PointerAction, frame_index: u64) -> Result<(), SinkError> {
        self.line.clear();
        serde_json::to_writer(&mut self.line, &EventLogEntry::new(action, frame_index))
            .expect("log entries always serialize");
        self.line.push(b'\n');
        // A single write per entry keeps lines whole.
        self.file
            .write_all(&self.line)
            .and_then(|_| self.file.flush())
            .map_err(|source| SinkError::Log {
                path: self.path.clone(),
                source,
            })
    }
}

pub fn read_event_log(path: impl AsRef<Path>) -> std::io::Result<Vec<EventLogEntry>> {
    let reader = BufReader::new(File::open(path)?);
    reader
        .lines()
        .map(|line| {
            serde_json::from_str(&line?)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })
        .collect()
}

#[cfg(feature = "os-input")]
mod os {
    use super::*;
    use enigo::{Button, Coordinate, Direction, Enigo, Mouse, Settings};

    pub struct OsSink {
        enigo: Enigo,
    }

    impl OsSink {
        pub fn new() -> Result<Self, SinkError> {
            let enigo = Enigo::new(&Settings::default())
                .map_err(|e| SinkError::PermissionDenied(e.to_string()))?;
            Ok(Self { enigo })
        }

        fn click(&mut self, button: Button) -> Result<(), SinkError> {
            let err = |e: enigo::InputError| SinkError::Injection(e.to_string());
            self.enigo.button(button, Direction::Press).map_err(err)?;
            self.enigo.button(button, Direction::Release).map_err(err)
        }
    }

    impl EventSink for OsSink {
        fn emit(&mut self, action: &PointerAction, _: u64) -> Result<(), SinkError> {
            match action.kind {
                ActionKind::MoveTo(p) => self
                    .enigo
                    .move_mouse(p.x, p.y, Coordinate::Abs)
                    .map_err(|e| SinkError::Injection(e.to_string())),
                ActionKind::LeftClick => self.click(Button::Left),
                ActionKind::RightClick => self.click(Button::Right),
            }
        }

        fn screen(&self) -> Option<Geometry> {
            let (w, h) = self.enigo.main_display().ok()?;
            (w > 1 && h > 1).then(|| Geometry::new(w as usize, h as usize))
        }
    }
}

impl SinkBackend {
    pub fn open(&self) -> Result<Box<dyn EventSink>, SinkError> {
        match self {
            SinkBackend::Null => Ok(Box::new(NullSink)),
            SinkBackend::Record(path) => Ok(Box::new(RecordSink::create(path)?)),
            #[cfg(feature = "os-input")]
            SinkBackend::OsInjection => Ok(Box::new(os::OsSink::new()?)),
            #[cfg(not(feature = "os-input"))]
            SinkBackend::OsInjection => Err(SinkError::PermissionDenied(
                "built without the `os-input` feature".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mv(x: i32, y: i32, t: u64) -> PointerAction {
        PointerAction {
            kind: ActionKind::MoveTo(ScreenPoint { x, y }),
            timestamp: t,
        }
    }

    #[test]
    fn null_sink_accepts_everything() {
        let mut sink = SinkBackend::Null.open().unwrap();
        sink.emit(&mv(1, 2, 3), 0).unwrap();
    }

    #[test]
    fn move_line_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut sink = RecordSink::create(&path).unwrap();
        sink.emit(&mv(100, 200, 233), 7).unwrap();
        sink.emit(
            &PointerAction {
                kind: ActionKind::RightClick,
                timestamp: 266,
            },
            8,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "{\"timestamp\":233,\"kind\":\"move\",\"x\":100,\"y\":200,\"frame_index\":7}\n\
             {\"timestamp\":266,\"kind\":\"right_click\",\"frame_index\":8}\n"
        );
    }

    #[test]
    fn order_is_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut sink = SinkBackend::Record(path.clone()).open().unwrap();
        let seq = [
            mv(1, 1, 0),
            PointerAction {
                kind: ActionKind::LeftClick,
                timestamp: 0,
            },
            mv(2, 2, 33),
        ];
        for (i, a) in seq.iter().enumerate() {
            sink.emit(a, i as u64).unwrap();
        }
        let kinds: Vec<_> = read_event_log(&path)
            .unwrap()
            .iter()
            .map(|e| e.kind)
            .collect();
        assert_eq!(
            kinds,
            vec![EventKind::Move, EventKind::LeftClick, EventKind::Move]
        );
    }

    #[test]
    fn unwritable_log_path() {
        let err = RecordSink::create("/nonexistent-dir/log.jsonl")
            .err()
            .unwrap();
        assert!(matches!(err, SinkError::Log { .. }));
    }

    fn arb_action() -> impl Strategy<Value = PointerAction> {
        (0u8..3, 0i32..4000, 0i32..3000, 0u64..1_000_000).prop_map(|(k, x, y, t)| PointerAction {
            kind: match k {
                0 => ActionKind::MoveTo(ScreenPoint { x, y }),
                1 => ActionKind::LeftClick,
                _ => ActionKind::RightClick,
            },
            timestamp: t,
        })
    }

    proptest! {
        #[test]
        fn record_is_lossless(actions in proptest::collection::vec(arb_action(), 0..40)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("log.jsonl");
            let mut sink = RecordSink::create(&path).unwrap();
            for (i, a) in actions.iter().enumerate() {
                sink.emit(a, i as u64).unwrap();
            }
            let back = read_event_log(&path).unwrap();
            let parsed: Vec<_> = back.iter().map(|e| e.action().unwrap()).collect();
            prop_assert_eq!(parsed, actions);
            prop_assert!(back.iter().enumerate().all(|(i, e)| e.frame_index == i as u64));
        }
    }
}
