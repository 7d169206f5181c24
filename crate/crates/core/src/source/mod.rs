//! Frame streams: live camera, on-disk replay and synthetic scenes.

pub mod camera;
pub mod ppm;
mod replay;
mod synth;

pub use camera::{open_camera, CaptureConfig};
pub use ppm::{encode_pgm, encode_ppm, parse_pgm, parse_ppm, PpmError};
pub use replay::{open_replay, write_replay_dir, ReplayManifest, ReplaySource};
pub use synth::{render_scene, Keyframe, SceneError, SceneScript, SceneSource, Track};

use crate::imaging::Frame;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct TimedFrame {
    pub frame: Frame,
    pub index: u64,
    /// Milliseconds since stream start.
    pub timestamp: u64,
}

/// Negotiated stream parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamInfo {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    /// Known frame count for finite sources.
    pub frames: Option<u64>,
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("no such device: camera {0}")]
    NoSuchDevice(u32),
    #[error("device busy: camera {0}")]
    DeviceBusy(u32),
    #[error("unsupported capture mode: {0}")]
    ModeUnsupported(String),
    #[error("camera error: {0}")]
    Camera(String),
    #[error("replay manifest missing: {0}")]
    MissingManifest(PathBuf),
    #[error("invalid replay manifest {path}: {reason}")]
    BadManifest { path: PathBuf, reason: String },
    #[error("gap in numbering: frame {index:06}.ppm is missing")]
    NumberingGap { index: u64 },
    #[error("invalid frame {path}: {source}")]
    InvalidFrame {
        path: PathBuf,
        #[source]
        source: PpmError,
    },
    #[error("frame {path} has size {actual:?}, stream is {expected:?}")]
    FrameSize {
        path: PathBuf,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A stream of frames owned by one consumer.
pub trait FrameSource: Send {
    fn info(&self) -> StreamInfo;

    /// `None` at end of stream.
    fn next_frame(&mut self) -> Option<Result<TimedFrame, SourceError>>;

    /// Frames discarded under backpressure so far.
    fn dropped(&self) -> u64 {
        0
    }
}

impl<S: FrameSource + ?Sized> FrameSource for Box<S> {
    fn info(&self) -> StreamInfo {
        (**self).info()
    }

    fn next_frame(&mut self) -> Option<Result<TimedFrame, SourceError>> {
        (**self).next_frame()
    }

    fn dropped(&self) -> u64 {
        (**self).dropped()
    }
}

/// Timestamp of frame `index` in a stream running at `fps`.
pub fn frame_timestamp(index: u64, fps: f64) -> u64 {
    (index as f64 * 1000.0 / fps).round() as u64
}
