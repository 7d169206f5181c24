//! Live capture through Video4Linux2.
//!
//! Frames are grabbed on a dedicated thread and handed over through a
//! two-slot queue. When the consumer falls behind, the oldest queued frame is
//! discarded and counted; frames are never reordered.

use super::{FrameSource, SourceError, StreamInfo, TimedFrame};
use crate::imaging::Frame;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureConfig {
    pub device: u32,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            device: 0,
            width: 640,
            height: 480,
            fps: 30.0,
        }
    }
}

pub struct CameraSource {
    info: StreamInfo,
    frames: crossbeam_channel::Receiver<Result<TimedFrame, String>>,
    dropped: Arc<AtomicU64>,
    stop: Arc<AtomicBool>,
    worker: Option<std::thread::JoinHandle<()>>,
}

impl FrameSource for CameraSource {
    fn info(&self) -> StreamInfo {
        self.info
    }

    fn next_frame(&mut self) -> Option<Result<TimedFrame, SourceError>> {
        match self.frames.recv() {
            Ok(Ok(f)) => Some(Ok(f)),
            Ok(Err(msg)) => Some(Err(SourceError::Camera(msg))),
            Err(_) => None,
        }
    }

    fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

impl Drop for CameraSource {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

/// Packed YUYV 4:2:2 to RGB using BT.601 coefficients.
pub fn yuyv_to_frame(buf: &[u8], width: usize, height: usize) -> Option<Frame> {
    if !width.is_multiple_of(2) || buf.len() < width * height * 2 {
        return None;
    }
    let mut pixels = Vec::with_capacity(width * height);
    let convert = |y: u8, u: i32, v: i32| -> [u8; 3] {
        let c = (y as i32 - 16).max(0) * 298;
        let r = (c + 409 * v + 128) >> 8;
        let g = (c - 100 * u - 208 * v + 128) >> 8;
        let b = (c + 516 * u + 128) >> 8;
        [
            r.clamp(0, 255) as u8,
            g.clamp(0, 255) as u8,
            b.clamp(0, 255) as u8,
        ]
    };
    for quad in buf[..width * height * 2].chunks_exact(4) {
        let (u, v) = (quad[1] as i32 - 128, quad[3] as i32 - 128);
        pixels.push(convert(quad[0], u, v));
        pixels.push(convert(quad[2], u, v));
    }
    Frame::new(width, height, pixels).ok()
}

/// Queue handoff that drops the oldest entry instead of blocking the grabber.
#[cfg_attr(not(all(target_os = "linux", feature = "camera")), allow(dead_code))]
fn push_latest<T>(
    tx: &crossbeam_channel::Sender<T>,
    rx: &crossbeam_channel::Receiver<T>,
    item: T,
    dropped: &AtomicU64,
) -> bool {
    let mut item = item;
    loop {
        match tx.try_send(item) {
            Ok(()) => return true,
            Err(crossbeam_channel::TrySendError::Full(back)) => {
                if rx.try_recv().is_ok() {
                    dropped.fetch_add(1, Ordering::Relaxed);
                }
                item = back;
            }
            Err(crossbeam_channel::TrySendError::Disconnected(_)) => return false,
        }
    }
}

pub fn open_camera(cfg: &CaptureConfig) -> Result<CameraSource, SourceError> {
    if cfg.width == 0 || cfg.height == 0 || cfg.fps.is_nan() || cfg.fps <= 0.0 {
        return Err(SourceError::ModeUnsupported(format!(
            "{}x{}@{}",
            cfg.width, cfg.height, cfg.fps
        )));
    }
    #[cfg(target_os = "linux")]
    if !std::path::Path::new(&format!("/dev/video{}", cfg.device)).exists() {
        return Err(SourceError::NoSuchDevice(cfg.device));
    }
    backend::open(cfg)
}

#[cfg(all(target_os = "linux", feature = "camera"))]
mod backend {
    use super::*;
    use std::io;
    use std::time::{Duration, Instant};
    use v4l::buffer::Type;
    use v4l::io::traits::CaptureStream;
    use v4l::prelude::*;
    use v4l::video::Capture;
    use v4l::FourCC;

    const PREFERRED: [&[u8; 4]; 3] = [b"RGB3", b"YUYV", b"MJPG"];

    fn map_io(device: u32, e: io::Error) -> SourceError {
        match e.raw_os_error() {
            // ENOENT, ENODEV
            Some(2 | 19) => SourceError::NoSuchDevice(device),
            // EBUSY
            Some(16) => SourceError::DeviceBusy(device),
            _ => SourceError::Camera(e.to_string()),
        }
    }

    fn decode(fourcc: FourCC, buf: &[u8], w: usize, h: usize) -> Option<Frame> {
        match &fourcc.repr {
            b"RGB3" => Frame::from_rgb_bytes(w, h, buf.get(..w * h * 3)?).ok(),
            b"YUYV" => yuyv_to_frame(buf, w, h),
            b"MJPG" => {
                let img =
                    image::load_from_memory_with_format(buf, image::ImageFormat::Jpeg).ok()?;
                let rgb = img.to_rgb8();
                Frame::from_rgb_bytes(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
                    .ok()
            }
            _ => None,
        }
    }

    struct Negotiated {
        dev: Device,
        fourcc: FourCC,
        info: StreamInfo,
    }

    fn negotiate(cfg: &CaptureConfig) -> Result<Negotiated, SourceError> {
        let id = cfg.device;
        let dev = Device::new(id as usize).map_err(|e| map_io(id, e))?;
        let caps = dev.query_caps().map_err(|e| map_io(id, e))?;
        if !caps
            .capabilities
            .contains(v4l::capability::Flags::VIDEO_CAPTURE)
        {
            return Err(SourceError::ModeUnsupported(format!(
                "{} is not a capture device",
                caps.card
            )));
        }
        let offered: Vec<FourCC> = dev
            .enum_formats()
            .map_err(|e| map_io(id, e))?
            .into_iter()
            .map(|d| d.fourcc)
            .collect();
        let fourcc = PREFERRED
            .iter()
            .map(|f| FourCC::new(f))
            .find(|f| offered.contains(f))
            .ok_or_else(|| {
                SourceError::ModeUnsupported(format!("no supported pixel format in {offered:?}"))
            })?;

        let mut fmt = dev.format().map_err(|e| map_io(id, e))?;
        fmt.width = cfg.width as u32;
        fmt.height = cfg.height as u32;
        fmt.fourcc = fourcc;
        let fmt = dev.set_format(&fmt).map_err(|e| map_io(id, e))?;
        if fmt.fourcc != fourcc {
            return Err(SourceError::ModeUnsupported(format!(
                "driver replaced {fourcc} with {}",
                fmt.fourcc
            )));
        }
        let fps = match dev.set_params(&v4l::video::capture::Parameters::with_fps(
            cfg.fps.round() as u32
        )) {
            Ok(p) if p.interval.numerator > 0 => {
                p.interval.denominator as f64 / p.interval.numerator as f64
            }
            _ => cfg.fps,
        };
        Ok(Negotiated {
            dev,
            fourcc,
            info: StreamInfo {
                width: fmt.width as usize,
                height: fmt.height as usize,
                fps,
                frames: None,
            },
        })
    }

    pub fn open(cfg: &CaptureConfig) -> Result<CameraSource, SourceError> {
        let cfg = *cfg;
        let (ready_tx, ready_rx) = std::sync::mpsc::channel();
        let (tx, rx) = crossbeam_channel::bounded(2);
        let dropped = Arc::new(AtomicU64::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let (worker_dropped, worker_stop, evict) = (dropped.clone(), stop.clone(), rx.clone());

        let worker = std::thread::Builder::new()
            .name("camera-capture".into())
            .spawn(move || {
                let neg = match negotiate(&cfg) {
                    Ok(n) => n,
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                        return;
                    }
                };
                let mut stream = match MmapStream::with_buffers(&neg.dev, Type::VideoCapture, 4) {
                    Ok(s) => s,
                    Err(e) => {
                        let _ = ready_tx.send(Err(map_io(cfg.device, e)));
                        return;
                    }
                };
                stream.set_timeout(Duration::from_millis(1000));
                let info = neg.info;
                let _ = ready_tx.send(Ok(info));
                let start = Instant::now();
                let mut index = 0u64;
                while !worker_stop.load(Ordering::Relaxed) {
                    let item = match stream.next() {
                        Ok((buf, _meta)) => {
                            match decode(neg.fourcc, buf, info.width, info.height) {
                                Some(frame) => Ok(TimedFrame {
                                    frame,
                                    index,
                                    timestamp: start.elapsed().as_millis() as u64,
                                }),
                                None => continue,
                            }
                        }
                        Err(e) if e.kind() == io::ErrorKind::TimedOut => continue,
                        Err(e) => Err(e.to_string()),
                    };
                    let failed = item.is_err();
                    index += 1;
                    if !push_latest(&tx, &evict, item, &worker_dropped) || failed {
                        break;
                    }
                }
            })
            .map_err(|e| SourceError::Camera(e.to_string()))?;

        match ready_rx.recv() {
            Ok(Ok(info)) => {
                log::info!(
                    "camera {} negotiated {}x{} @ {:.2} fps",
                    cfg.device,
                    info.width,
                    info.height,
                    info.fps
                );
                Ok(CameraSource {
                    info,
                    frames: rx,
                    dropped,
                    stop,
                    worker: Some(worker),
                })
            }
            Ok(Err(e)) => {
                let _ = worker.join();
                Err(e)
            }
            Err(_) => Err(SourceError::Camera("capture thread exited".into())),
        }
    }
}

#[cfg(not(all(target_os = "linux", feature = "camera")))]
mod backend {
    use super::*;

    pub fn open(_cfg: &CaptureConfig) -> Result<CameraSource, SourceError> {
        Err(SourceError::Camera(
            "built without camera support (enable the `camera` feature on Linux)".into(),
        ))
    }
}
