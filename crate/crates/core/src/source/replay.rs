use super::{
    encode_ppm, frame_timestamp, parse_ppm, FrameSource, SourceError, StreamInfo, TimedFrame,
};
use crate::imaging::Frame;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayManifest {
    pub fps: f64,
}

/// Recorded frames `000000.ppm`, `000001.ppm`, ... plus `manifest.json`.
pub struct ReplaySource {
    paths: Vec<PathBuf>,
    next: usize,
    fps: f64,
    dims: (usize, usize),
    first: Option<Frame>,
}

fn frame_index(name: &str) -> Option<u64> {
    let stem = name.strip_suffix(".ppm")?;
    if stem.len() == 6 && stem.bytes().all(|b| b.is_ascii_digit()) {
        stem.parse().ok()
    } else {
        None
    }
}

fn read_frame(path: &Path) -> Result<Frame, SourceError> {
    let bytes = fs::read(path).map_err(|source| SourceError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_ppm(&bytes).map_err(|source| SourceError::InvalidFrame {
        path: path.to_owned(),
        source,
    })
}

pub fn open_replay(dir: impl AsRef<Path>) -> Result<ReplaySource, SourceError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST);
    let manifest_text = match fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SourceError::MissingManifest(manifest_path))
        }
        Err(source) => {
            return Err(SourceError::Io {
                path: manifest_path,
                source,
            })
        }
    };
    let manifest: ReplayManifest =
        serde_json::from_str(&manifest_text).map_err(|e| SourceError::BadManifest {
            path: manifest_path.clone(),
            reason: e.to_string(),
        })?;
    if !(manifest.fps > 0.0 && manifest.fps.is_finite()) {
        return Err(SourceError::BadManifest {
            path: manifest_path,
            reason: format!("fps must be positive, got {}", manifest.fps),
        });
    }

    let entries = fs::read_dir(dir).map_err(|source| SourceError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut indexed = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| SourceError::Io {
            path: dir.to_owned(),
            source,
        })?;
        if let Some(idx) = entry.file_name().to_str().and_then(frame_index) {
            indexed.push((idx, entry.path()));
        }
    }
    indexed.sort();
    for (expected, (idx, _)) in indexed.iter().enumerate() {
        if *idx != expected as u64 {
            return Err(SourceError::NumberingGap {
                index: expected as u64,
            });
        }
    }
    let paths: Vec<PathBuf> = indexed.into_iter().map(|(_, p)| p).collect();

    let first = match paths.first() {
        Some(p) => Some(read_frame(p)?),
        None => None,
    };
    let dims = first.as_ref().map_or((0, 0), Frame::dims);
    Ok(ReplaySource {
        paths,
        next: 0,
        fps: manifest.fps,
        dims,
        first,
    })
}

impl FrameSource for ReplaySource {
    fn info(&self) -> StreamInfo {
        StreamInfo {
            width: self.dims.0,
            height: self.dims.1,
            fps: self.fps,
            frames: Some(self.paths.len() as u64),
        }
    }

    fn next_frame(&mut self) -> Option<Result<TimedFrame, SourceError>> {
        let path = self.paths.get(self.next)?;
        let index = self.next as u64;
        self.next += 1;
        let frame = match self.first.take() {
            Some(f) => f,
            None => match read_frame(path) {
                Ok(f) => f,
                Err(e) => return Some(Err(e)),
            },
        };
        if frame.dims() != self.dims {
            return Some(Err(SourceError::FrameSize {
                path: path.clone(),
                expected: self.dims,
                actual: frame.dims(),
            }));
        }
        Some(Ok(TimedFrame {
            frame,
            index,
            timestamp: frame_timestamp(index, self.fps),
        }))
    }
}

/// Writes frames in replay layout, returning the number written.
pub fn write_replay_dir<I>(dir: impl AsRef<Path>, fps: f64, frames: I) -> std::io::Result<usize>
where
    I: IntoIterator<Item = Frame>,
{
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let manifest = serde_json::to_string(&ReplayManifest { fps }).map_err(std::io::Error::other)?;
    fs::write(dir.join(MANIFEST), manifest)?;
    let mut n = 0;
    for (i, frame) in frames.into_iter().enumerate() {
        fs::write(dir.join(format!("{i:06}.ppm")), encode_ppm(&frame))?;
        n += 1;
    }
    Ok(n)
}
