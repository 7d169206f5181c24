//! The per-frame loop: mirror, luma, detect each marker, gesture step, emit,
//! publish.

use crate::config::{load_config, LoadError, RuntimeConfig, Settings, SharedConfig};
use crate::gesture::{
    self, DetectionSet, Geometry, GestureError, GestureParams, GestureState, PointerAction,
};
use crate::imaging::{
    binarize, detect_marker, extract_channel_excess, mirror_horizontal, to_grayscale, Frame,
    GrayImage, ImagingError, MarkerColor,
};
use crate::service::{
    ControlService, PreviewImage, PreviewKind, Publisher, ServiceError, ServiceOptions, StreamId,
    TelemetryFrame,
};
use crate::sink::{EventLogEntry, EventSink, SinkBackend, SinkError};
use crate::source::{
    encode_pgm, encode_ppm, open_camera, open_replay, FrameSource, SceneSource, SourceError,
    TimedFrame,
};
use std::collections::VecDeque;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Gesture(#[from] GestureError),
    #[error(transparent)]
    Sink(#[from] SinkError),
}

/// Intermediate results for one frame.
pub struct FrameAnalysis {
    pub mirrored: Frame,
    pub gray: GrayImage,
    pub detections: DetectionSet,
}

/// Detection half of the loop, under one config snapshot.
pub fn analyze_frame(tf: &TimedFrame, cfg: &RuntimeConfig) -> Result<FrameAnalysis, ImagingError> {
    let mirrored = mirror_horizontal(&tf.frame);
    let gray = to_grayscale(&mirrored);
    let params = cfg
        .detect_params()
        .scaled_for(mirrored.width(), mirrored.height());
    let mut detections = DetectionSet {
        frame_index: tf.index,
        timestamp: tf.timestamp,
        ..Default::default()
    };
    for color in MarkerColor::ALL {
        detections.set(color, detect_marker(&mirrored, &gray, color, &params)?);
    }
    Ok(FrameAnalysis {
        mirrored,
        gray,
        detections,
    })
}

#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub detections: DetectionSet,
    pub actions: Vec<PointerAction>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    pub frames: u64,
    pub actions: u64,
    pub elapsed: Duration,
    pub dropped: u64,
}

impl RunStats {
    pub fn fps(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.frames as f64 / secs
        } else {
            0.0
        }
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frames={} fps={:.1} actions={} dropped={}",
            self.frames,
            self.fps(),
            self.actions,
            self.dropped
        )
    }
}

pub struct Pipeline {
    config: SharedConfig,
    screen: Geometry,
    state: GestureState,
    sink: Box<dyn EventSink>,
    publisher: Option<Publisher>,
    source_fps: f64,
    recent: VecDeque<Instant>,
    frames: u64,
    actions: u64,
}

impl Pipeline {
    pub fn new(
        config: SharedConfig,
        screen: Geometry,
        sink: Box<dyn EventSink>,
        source_fps: f64,
    ) -> Self {
        Self {
            config,
            screen,
            state: GestureState::default(),
            sink,
            publisher: None,
            source_fps,
            recent: VecDeque::new(),
            frames: 0,
            actions: 0,
        }
    }

    pub fn with_publisher(mut self, publisher: Publisher) -> Self {
        self.publisher = Some(publisher);
        self
    }

    pub fn gesture_state(&self) -> &GestureState {
        &self.state
    }

    fn rolling_fps(&mut self) -> f64 {
        let now = Instant::now();
        self.recent.push_back(now);
        while let Some(&t) = self.recent.front() {
            if now.duration_since(t) > Duration::from_secs(1) {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        self.recent.len() as f64
    }

    pub fn process(&mut self, tf: &TimedFrame) -> Result<FrameOutcome, PipelineError> {
        let cfg = self.config.snapshot();
        let analysis = analyze_frame(tf, &cfg)?;
        let (fw, fh) = analysis.mirrored.dims();
        let params = GestureParams {
            confirm_frames: cfg.confirm_frames,
            refractory_ms: cfg.refractory_ms,
            smoothing_alpha: cfg.smoothing_alpha,
            bindings: cfg.bindings,
            frame: Geometry::new(fw, fh),
            screen: self.screen,
        };
        let (state, actions) = gesture::step(self.state, &analysis.detections, &params)?;
        self.state = state;
        for action in &actions {
            self.sink.emit(action, tf.index)?;
        }
        self.frames += 1;
        self.actions += actions.len() as u64;
        let fps = self.rolling_fps();
        if self.publisher.is_some() {
            self.publish(tf, &cfg, &analysis, &actions, fps)?;
        }
        Ok(FrameOutcome {
            detections: analysis.detections,
            actions,
        })
    }

    fn publish(
        &mut self,
        tf: &TimedFrame,
        cfg: &RuntimeConfig,
        analysis: &FrameAnalysis,
        actions: &[PointerAction],
        fps: f64,
    ) -> Result<(), ImagingError> {
        let Some(publisher) = self.publisher.as_mut() else {
            return Ok(());
        };
        if publisher.wants(StreamId::Telemetry) {
            let entries = actions
                .iter()
                .map(|a| EventLogEntry::new(a, tf.index))
                .collect();
            publisher.publish_telemetry(TelemetryFrame::new(&analysis.detections, fps, entries));
        }
        let rate = cfg.preview_fps.min(self.source_fps);
        for stream in StreamId::ALL {
            let StreamId::Preview(kind) = stream else {
                continue;
            };
            if !publisher.preview_due(stream, tf.timestamp, rate) {
                continue;
            }
            let image = match kind {
                PreviewKind::Camera => PreviewImage::Camera(analysis.mirrored.clone()),
                PreviewKind::Mask(color) => {
                    let excess = extract_channel_excess(&analysis.mirrored, &analysis.gray, color)?;
                    PreviewImage::Mask(binarize(&excess, cfg.threshold_fraction)?)
                }
            };
            publisher.publish_preview(stream, tf.index, image);
        }
        Ok(())
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.frames, self.actions)
    }
}

/// Writes every stage of one frame as images into `dir`:
/// `00_input.ppm`, `01_mirrored.ppm`, `02_gray.pgm`, then per color
/// `03_excess_<c>.pgm` and `04_mask_<c>.pgm` (0/255), and
/// `05_detections.json`.
pub fn dump_stages(
    tf: &TimedFrame,
    cfg: &RuntimeConfig,
    dir: &Path,
) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let analysis = analyze_frame(tf, cfg).map_err(std::io::Error::other)?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> std::io::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    put("00_input.ppm".into(), encode_ppm(&tf.frame))?;
    put("01_mirrored.ppm".into(), encode_ppm(&analysis.mirrored))?;
    put("02_gray.pgm".into(), encode_pgm(&analysis.gray))?;
    for color in MarkerColor::ALL {
        let excess = extract_channel_excess(&analysis.mirrored, &analysis.gray, color)
            .map_err(std::io::Error::other)?;
        let mask = binarize(&excess, cfg.threshold_fraction).map_err(std::io::Error::other)?;
        put(format!("03_excess_{color}.pgm"), encode_pgm(&excess))?;
        put(format!("04_mask_{color}.pgm"), encode_pgm(&mask.to_gray()))?;
    }
    let detections =
        serde_json::to_vec_pretty(&analysis.detections).map_err(std::io::Error::other)?;
    put("05_detections.json".into(), detections)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    Live,
    Replay(PathBuf),
    Simulate(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: RunMode,
    pub config: Option<PathBuf>,
    pub sink: SinkBackend,
    pub serve: bool,
    /// Overrides `service.port`.
    pub port: Option<u16>,
    pub dump_frame: Option<u64>,
    pub dump_dir: PathBuf,
}

impl RunOptions {
    pub fn new(mode: RunMode, sink: SinkBackend) -> Self {
        Self {
            mode,
            config: None,
            sink,
            serve: false,
            port: None,
            dump_frame: None,
            dump_dir: PathBuf::from("dump"),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] LoadError),
    #[error("cannot open source: {0}")]
    SourceOpen(#[source] SourceError),
    #[error("source failed: {0}")]
    Source(#[source] SourceError),
    #[error(transparent)]
    Sink(#[from] SinkError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("processing failed: {0}")]
    Processing(#[source] PipelineError),
    #[error("cannot dump stages: {0}")]
    Dump(#[source] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::SourceOpen(_) | RunError::Source(_) => 3,
            RunError::Sink(_) | RunError::Processing(PipelineError::Sink(_)) => 4,
            RunError::Service(_) => 5,
            RunError::Processing(_) | RunError::Dump(_) => 1,
        }
    }
}

/// Runs until the source ends or `stop` is raised.
pub fn run(opts: &RunOptions, stop: Option<Arc<AtomicBool>>) -> Result<RunStats, RunError> {
    let settings = match &opts.config {
        Some(path) => load_config(path)?,
        None => Settings::default(),
    };
    let shared = SharedConfig::new(settings.runtime.clone());

    let mut source: Box<dyn FrameSource> = match &opts.mode {
        RunMode::Live => Box::new(open_camera(&settings.capture).map_err(RunError::SourceOpen)?),
        RunMode::Replay(dir) => Box::new(open_replay(dir).map_err(RunError::SourceOpen)?),
        RunMode::Simulate(scene) => {
            Box::new(SceneSource::open(scene).map_err(RunError::SourceOpen)?)
        }
    };
    let sink = opts.sink.open()?;
    // Replay and simulation map onto the configured screen so logs do not
    // depend on the machine they were produced on.
    let screen = match opts.mode {
        RunMode::Live => sink.screen().unwrap_or(settings.screen),
        _ => settings.screen,
    };

    let service = if opts.serve {
        let service_opts = ServiceOptions {
            port: opts.port.unwrap_or(settings.service_port),
            panel_dir: settings.panel_dir.clone(),
            ..Default::default()
        };
        Some(ControlService::start(service_opts, shared.clone())?)
    } else {
        None
    };

    let mut pipeline = Pipeline::new(shared.clone(), screen, sink, source.info().fps);
    if let Some(svc) = &service {
        pipeline = pipeline.with_publisher(svc.publisher());
    }

    let start = Instant::now();
    while let Some(next) = source.next_frame() {
        let tf = next.map_err(RunError::Source)?;
        if opts.dump_frame == Some(tf.index) {
            dump_stages(&tf, &shared.snapshot(), &opts.dump_dir).map_err(RunError::Dump)?;
        }
        pipeline.process(&tf).map_err(RunError::Processing)?;
        if stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
    }
    let (frames, actions) = pipeline.stats();
    Ok(RunStats {
        frames,
        actions,
        elapsed: start.elapsed(),
        dropped: source.dropped(),
    })
}
