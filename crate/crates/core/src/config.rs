//! Runtime configuration.
//!
//! Keys are flat dotted paths (`detect.threshold_fraction`, ...) both in the
//! TOML file and in live `set_config` patches. A TOML file may equally use
//! `[detect]` tables; they flatten to the same keys.

use crate::gesture::{Bindings, Geometry};
use crate::imaging::{DetectParams, MarkerColor};
use crate::source::CaptureConfig;
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;
use tokio::sync::watch;

/// An invalid or unknown key.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{key}: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    fn new(key: &str, reason: impl Into<String>) -> Self {
        Self {
            key: key.to_owned(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SettingsError {
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config {path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
}

/// Tunables that may change while the pipeline runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub threshold_fraction: f64,
    pub min_area: u32,
    pub confirm_frames: u32,
    pub refractory_ms: u64,
    pub smoothing_alpha: f64,
    pub bindings: Bindings,
    pub preview_fps: f64,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.20,
            min_area: 150,
            confirm_frames: 3,
            refractory_ms: 500,
            smoothing_alpha: 1.0,
            bindings: Bindings::default(),
            preview_fps: 10.0,
        }
    }
}

pub const RUNTIME_KEYS: [&str; 8] = [
    "detect.threshold_fraction",
    "detect.min_area",
    "gesture.confirm_frames",
    "gesture.refractory_ms",
    "mapping.smoothing_alpha",
    "bindings.left",
    "bindings.right",
    "preview.fps",
];

pub const STATIC_KEYS: [&str; 8] = [
    "mapping.screen_width",
    "mapping.screen_height",
    "capture.device",
    "capture.width",
    "capture.height",
    "capture.fps",
    "service.port",
    "service.panel_dir",
];

pub const MAX_PREVIEW_FPS: f64 = 120.0;

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64()
        .ok_or_else(|| ConfigError::new(key, format!("expected a number, got {v}")))
}

fn as_uint(key: &str, v: &Value, min: u64, max: u64) -> Result<u64, ConfigError> {
    let n = v.as_u64().ok_or_else(|| match v.as_i64() {
        Some(n) => ConfigError::new(key, format!("must be >= {min}, got {n}")),
        None => ConfigError::new(key, format!("expected an integer, got {v}")),
    })?;
    if n < min {
        return Err(ConfigError::new(key, format!("must be >= {min}, got {n}")));
    }
    if n > max {
        return Err(ConfigError::new(key, format!("must be <= {max}, got {n}")));
    }
    Ok(n)
}

fn click_color(key: &str, v: &Value) -> Result<MarkerColor, ConfigError> {
    match v.as_str().and_then(MarkerColor::parse) {
        Some(c @ (MarkerColor::Green | MarkerColor::Blue)) => Ok(c),
        Some(MarkerColor::Red) => Err(ConfigError::new(key, "red is reserved for the pointer")),
        None => Err(ConfigError::new(
            key,
            format!("expected \"green\" or \"blue\", got {v}"),
        )),
    }
}

impl RuntimeConfig {
    /// Sets one key; does not check cross-field constraints.
    fn set(&mut self, key: &str, v: &Value) -> Result<(), ConfigError> {
        match key {
            "detect.threshold_fraction" => {
                let f = as_f64(key, v)?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(ConfigError::new(key, format!("must be in (0, 1), got {f}")));
                }
                self.threshold_fraction = f;
            }
            "detect.min_area" => self.min_area = as_uint(key, v, 1, u32::MAX as u64)? as u32,
            "gesture.confirm_frames" => {
                self.confirm_frames = as_uint(key, v, 1, u32::MAX as u64)? as u32
            }
            "gesture.refractory_ms" => self.refractory_ms = as_uint(key, v, 0, u64::MAX)?,
            "mapping.smoothing_alpha" => {
                let a = as_f64(key, v)?;
                if !(a > 0.0 && a <= 1.0) {
                    return Err(ConfigError::new(key, format!("must be in (0, 1], got {a}")));
                }
                self.smoothing_alpha = a;
            }
            "bindings.left" => self.bindings.left = click_color(key, v)?,
            "bindings.right" => self.bindings.right = click_color(key, v)?,
            "preview.fps" => {
                let f = as_f64(key, v)?;
                if !(f > 0.0 && f <= MAX_PREVIEW_FPS) {
                    return Err(ConfigError::new(
                        key,
                        format!("must be in (0, {MAX_PREVIEW_FPS}], got {f}"),
                    ));
                }
                self.preview_fps = f;
            }
            k if STATIC_KEYS.contains(&k) => {
                return Err(ConfigError::new(key, "not changeable at runtime"))
            }
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies every entry of `patch` or none of them. The error names the
    /// first offending key in patch order.
    pub fn patched(&self, patch: &Map<String, Value>) -> Result<RuntimeConfig, ConfigError> {
        let mut next = self.clone();
        for (key, value) in patch {
            next.set(key, value)?;
        }
        if next.bindings.left == next.bindings.right {
            let key = patch
                .keys()
                .find(|k| k.starts_with("bindings."))
                .map_or("bindings.left", String::as_str);
            return Err(ConfigError::new(
                key,
                format!(
                    "left and right clicks cannot both use {}",
                    next.bindings.left
                ),
            ));
        }
        Ok(next)
    }

    /// Flat snapshot keyed like [`RUNTIME_KEYS`].
    pub fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert(
            "detect.threshold_fraction".into(),
            self.threshold_fraction.into(),
        );
        m.insert("detect.min_area".into(), self.min_area.into());
        m.insert("gesture.confirm_frames".into(), self.confirm_frames.into());
        m.insert("gesture.refractory_ms".into(), self.refractory_ms.into());
        m.insert(
            "mapping.smoothing_alpha".into(),
            self.smoothing_alpha.into(),
        );
        m.insert("bindings.left".into(), self.bindings.left.name().into());
        m.insert("bindings.right".into(), self.bindings.right.name().into());
        m.insert("preview.fps".into(), self.preview_fps.into());
        m
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            threshold_fraction: self.threshold_fraction,
            min_area: self.min_area as usize,
        }
    }
}

/// Everything a config file can hold.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub runtime: RuntimeConfig,
    /// Screen used for mapping when no OS display is attached.
    pub screen: Geometry,
    pub capture: CaptureConfig,
    pub service_port: u16,
    pub panel_dir: Option<PathBuf>,
}

pub const DEFAULT_PORT: u16 = 7411;

impl Default for Settings {
    fn default() -> Self {
        Self {
            runtime: RuntimeConfig::default(),
            screen: Geometry::new(1920, 1080),
            capture: CaptureConfig::default(),
            service_port: DEFAULT_PORT,
            panel_dir: None,
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

impl Settings {
    fn set_static(&mut self, key: &str, v: &Value) -> Result<(), ConfigError> {
        let dim = |v| as_uint(key, v, 2, 1 << 16).map(|n| n as usize);
        match key {
            "mapping.screen_width" => self.screen.width = dim(v)?,
            "mapping.screen_height" => self.screen.height = dim(v)?,
            "capture.device" => self.capture.device = as_uint(key, v, 0, u32::MAX as u64)? as u32,
            "capture.width" => self.capture.width = as_uint(key, v, 1, 1 << 16)? as usize,
            "capture.height" => self.capture.height = as_uint(key, v, 1, 1 << 16)? as usize,
            "capture.fps" => {
                let f = as_f64(key, v)?;
                if !(f > 0.0 && f <= 1000.0) {
                    return Err(ConfigError::new(
                        key,
                        format!("must be in (0, 1000], got {f}"),
                    ));
                }
                self.capture.fps = f;
            }
            "service.port" => self.service_port = as_uint(key, v, 1, 65535)? as u16,
            "service.panel_dir" => {
                let s = v.as_str().ok_or_else(|| {
                    ConfigError::new(key, format!("expected a path string, got {v}"))
                })?;
                self.panel_dir = Some(PathBuf::from(s));
            }
            _ => return self.runtime.set(key, v),
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SettingsError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| SettingsError::Syntax(e.to_string()))?;
        let mut entries = Vec::new();
        flatten("", &table, &mut entries);
        let mut settings = Settings::default();
        for (key, value) in &entries {
            let json =
                serde_json::to_value(value).map_err(|e| ConfigError::new(key, e.to_string()))?;
            settings.set_static(key, &json)?;
        }
        if settings.runtime.bindings.left == settings.runtime.bindings.right {
            let key = entries
                .iter()
                .map(|(k, _)| k.as_str())
                .find(|k| k.starts_with("bindings."))
                .unwrap_or("bindings.left");
            return Err(
                ConfigError::new(key, "left and right clicks need different colors").into(),
            );
        }
        Ok(settings)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Settings, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    Settings::from_toml(&text).map_err(|e| match e {
        SettingsError::Invalid(source) => LoadError::Invalid {
            path: path.to_owned(),
            source,
        },
        SettingsError::Syntax(message) => LoadError::Parse {
            path: path.to_owned(),
            message,
        },
    })
}

/// Snapshot-on-read, replace-on-write configuration cell.
#[derive(Clone)]
pub struct SharedConfig {
    tx: Arc<watch::Sender<Arc<RuntimeConfig>>>,
}

impl SharedConfig {
    pub fn new(cfg: RuntimeConfig) -> Self {
        let (tx, _) = watch::channel(Arc::new(cfg));
        Self { tx: Arc::new(tx) }
    }

    pub fn snapshot(&self) -> Arc<RuntimeConfig> {
        self.tx.borrow().clone()
    }

    /// Validates and installs a patch atomically with respect to other writers.
    pub fn apply_patch(
        &self,
        patch: &Map<String, Value>,
    ) -> Result<Arc<RuntimeConfig>, ConfigError> {
        let mut outcome = Err(ConfigError::new("", "unreachable"));
        self.tx
            .send_if_modified(|current| match current.patched(patch) {
                Ok(next) => {
                    *current = Arc::new(next);
                    outcome = Ok(current.clone());
                    true
                }
                Err(e) => {
                    outcome = Err(e);
                    false
                }
            });
        outcome
    }

    pub fn subscribe(&self) -> watch::Receiver<Arc<RuntimeConfig>> {
        self.tx.subscribe()
    }
}

impl Default for SharedConfig {
    fn default() -> Self {
        Self::new(RuntimeConfig::default())
    }
}
