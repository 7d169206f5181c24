//! Hands-free pointer control from colored finger markers seen by a webcam.
//!
//! A red marker moves the pointer; green and blue markers click. Each frame
//! is mirrored, reduced to luma, and for every marker color the channel
//! excess over luma is thresholded and its largest 8-connected blob taken
//! as the marker. A small state machine turns the per-frame detections into
//! pointer moves and debounced clicks.
//!
//! Frames come from a camera, a directory of PPM files, or a scripted scene.
//! Actions go to the OS, to a JSONL log, or nowhere. An optional local
//! WebSocket service exposes live telemetry, mask previews, and runtime
//! tuning.

pub mod config;
pub mod gesture;
pub mod imaging;
pub mod pipeline;
pub mod service;
pub mod sink;
pub mod source;
