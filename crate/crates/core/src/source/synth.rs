//! Deterministic synthetic scenes: saturated-primary disks on a flat
//! background, moving along piecewise-linear paths.
//!
//! JSON schema:
//!
//! ```json
//! {
//!   "width": 640, "height": 480, "fps": 30, "duration": 100,
//!   "background": [0, 0, 0],
//!   "tracks": [
//!     { "color": "red", "radius": 8,
//!       "path": [ {"frame": 0, "x": 40, "y": 40}, {"frame": 99, "x": 600, "y": 440} ],
//!       "visible": [[0, 99]] }
//!   ]
//! }
//! ```
//!
//! `x` is the column and `y` the row of the disk center. `visible` lists
//! inclusive frame intervals; omitted means always visible. Positions before
//! the first or after the last keyframe are held.

use super::{frame_timestamp, FrameSource, SourceError, StreamInfo, TimedFrame};
use crate::imaging::{Frame, MarkerColor, Rgb};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("frame {t} out of range for scene of {duration} frames")]
    FrameOutOfRange { t: u64, duration: u64 },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("scene JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading scene {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Track {
    pub color: MarkerColor,
    pub radius: f64,
    pub path: Vec<Keyframe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible: Option<Vec<[u64; 2]>>,
}

impl Track {
    /// Disk center `(x, y)` at frame `t`.
    pub fn center_at(&self, t: u64) -> (f64, f64) {
        let path = &self.path;
        let first = path[0];
        if t <= first.frame {
            return (first.x, first.y);
        }
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if t <= b.frame {
                let s = (t - a.frame) as f64 / (b.frame - a.frame) as f64;
                return (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
            }
        }
        let last = path[path.len() - 1];
        (last.x, last.y)
    }

    pub fn visible_at(&self, t: u64) -> bool {
        match &self.visible {
            None => true,
            Some(spans) => spans.iter().any(|&[a, b]| a <= t && t <= b),
        }
    }
}

fn default_fps() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneScript {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub duration: u64,
    #[serde(default)]
    pub background: Rgb,
    #[serde(default)]
    pub tracks: Vec<Track>,
}

impl SceneScript {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let script: SceneScript = serde_json::from_str(text)?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let invalid = |msg: String| Err(SceneError::Invalid(msg));
        if self.width == 0 || self.height == 0 {
            return invalid(format!("dimensions {}x{}", self.width, self.height));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return invalid(format!("fps must be positive, got {}", self.fps));
        }
        for (i, track) in self.tracks.iter().enumerate() {
            if !(track.radius > 0.0 && track.radius.is_finite()) {
                return invalid(format!("track {i}: radius must be positive"));
            }
            if track.path.is_empty() {
                return invalid(format!("track {i}: empty path"));
            }
            if track.path.windows(2).any(|w| w[0].frame >= w[1].frame) {
                return invalid(format!("track {i}: keyframes must have increasing frames"));
            }
            if let Some(spans) = &track.visible {
                if spans.iter().any(|&[a, b]| a > b) {
                    return invalid(format!("track {i}: visibility interval with start > end"));
                }
            }
            let (maxx, maxy) = ((self.width - 1) as f64, (self.height - 1) as f64);
            for t in (0..self.duration).filter(|&t| track.visible_at(t)) {
                let (x, y) = track.center_at(t);
                let r = track.radius;
                if x - r < 0.0 || y - r < 0.0 || x + r > maxx || y + r > maxy {
                    return invalid(format!(
                        "track {i}: disk at ({x:.2}, {y:.2}) radius {r} leaves the frame at t={t}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Paints frame `t` of the scene. Later tracks paint over earlier ones.
pub fn render_scene(script: &SceneScript, t: u64) -> Result<Frame, SceneError> {
    if t >= script.duration {
        return Err(SceneError::FrameOutOfRange {
            t,
            duration: script.duration,
        });
    }
    let (w, h) = (script.width, script.height);
    let mut frame =
        Frame::filled(w, h, script.background).map_err(|e| SceneError::Invalid(e.to_string()))?;
    for track in script.tracks.iter().filter(|tr| tr.visible_at(t)) {
        let (cx, cy) = track.center_at(t);
        let r = track.radius;
        let r2 = r * r;
        let color = track.color.primary();
        let row0 = (cy - r).floor().max(0.0) as usize;
        let row1 = ((cy + r).ceil() as usize).min(h - 1);
        let col0 = (cx - r).floor().max(0.0) as usize;
        let col1 = ((cx + r).ceil() as usize).min(w - 1);
        for row in row0..=row1 {
            let dy = row as f64 - cy;
            for col in col0..=col1 {
                let dx = col as f64 - cx;
                if dx * dx + dy * dy <= r2 {
                    frame.set(row, col, color);
                }
            }
        }
    }
    Ok(frame)
}

/// Streams a scene frame by frame.
pub struct SceneSource {
    script: SceneScript,
    next: u64,
}

impl SceneSource {
    pub fn new(script: SceneScript) -> Result<Self, SourceError> {
        script.validate()?;
        Ok(Self { script, next: 0 })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, SourceError> {
        Self::new(SceneScript::load(path)?)
    }

    pub fn script(&self) -> &SceneScript {
        &self.script
    }
}

impl FrameSource for SceneSource {
    fn info(&self) -> StreamInfo {
        StreamInfo {
            width: self.script.width,
            height: self.script.height,
            fps: self.script.fps,
            frames: Some(self.script.duration),
        }
    }

    fn next_frame(&mut self) -> Option<Result<TimedFrame, SourceError>> {
        if self.next >= self.script.duration {
            return None;
        }
        let index = self.next;
        self.next += 1;
        Some(
            render_scene(&self.script, index)
                .map(|frame| TimedFrame {
                    frame,
                    index,
                    timestamp: frame_timestamp(index, self.script.fps),
                })
                .map_err(SourceError::from),
        )
    }
}
