//! From per-frame detections to pointer actions.
//!
//! Red is always the pointer. The two click colors are configurable through
//! [`Bindings`]; a click fires once the pointer and its click color have been
//! seen together for `confirm_frames` consecutive frames, and re-arms only
//! after the click color disappears.

use crate::imaging::{Centroid, Detection, MarkerColor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GestureError {
    #[error("geometry {width}x{height} is too small for mapping (need at least 2x2)")]
    Geometry { width: usize, height: usize },
    #[error("smoothing alpha must lie in (0, 1], got {0}")]
    Alpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
}

impl Geometry {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    fn check_mappable(self) -> Result<Self, GestureError> {
        if self.width < 2 || self.height < 2 {
            return Err(GestureError::Geometry {
                width: self.width,
                height: self.height,
            });
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    MoveTo(ScreenPoint),
    LeftClick,
    RightClick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerAction {
    pub kind: ActionKind,
    pub timestamp: u64,
}

/// Which markers were found in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionSet {
    pub red: Option<Detection>,
    pub green: Option<Detection>,
    pub blue: Option<Detection>,
    pub frame_index: u64,
    pub timestamp: u64,
}

impl DetectionSet {
    pub fn get(&self, color: MarkerColor) -> Option<&Detection> {
        match color {
            MarkerColor::Red => self.red.as_ref(),
            MarkerColor::Green => self.green.as_ref(),
            MarkerColor::Blue => self.blue.as_ref(),
        }
    }

    pub fn set(&mut self, color: MarkerColor, detection: Option<Detection>) {
        match color {
            MarkerColor::Red => self.red = detection,
            MarkerColor::Green => self.green = detection,
            MarkerColor::Blue => self.blue = detection,
        }
    }

    pub fn has(&self, color: MarkerColor) -> bool {
        self.get(color).is_some()
    }
}

/// Marker colors that trigger each click. Red is reserved for the pointer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bindings {
    pub left: MarkerColor,
    pub right: MarkerColor,
}

impl Default for Bindings {
    fn default() -> Self {
        Self {
            left: MarkerColor::Green,
            right: MarkerColor::Blue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureParams {
    pub confirm_frames: u32,
    pub refractory_ms: u64,
    pub smoothing_alpha: f64,
    pub bindings: Bindings,
    pub frame: Geometry,
    pub screen: Geometry,
}

impl GestureParams {
    pub fn new(frame: Geometry, screen: Geometry) -> Self {
        Self {
            confirm_frames: 3,
            refractory_ms: 500,
            smoothing_alpha: 1.0,
            bindings: Bindings::default(),
            frame,
            screen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GestureState {
    pub left_streak: u32,
    pub right_streak: u32,
    pub left_armed: bool,
    pub right_armed: bool,
    pub last_click_at: Option<u64>,
    pub last_point: Option<ScreenPoint>,
}

/// Proportional corner-to-corner mapping, rounded half away from zero.
pub fn map_to_screen(
    c: Centroid,
    frame: Geometry,
    screen: Geometry,
) -> Result<ScreenPoint, GestureError> {
    let frame = frame.check_mappable()?;
    let screen = screen.check_mappable()?;
    let scale = |v: f64, fsize: usize, ssize: usize| -> i32 {
        // Multiply before dividing so exact midpoints stay exact.
        let mapped = (v * (ssize - 1) as f64 / (fsize - 1) as f64).round();
        mapped.clamp(0.0, (ssize - 1) as f64) as i32
    };
    Ok(ScreenPoint {
        x: scale(c.x, frame.width, screen.width),
        y: scale(c.y, frame.height, screen.height),
    })
}

/// Exponential smoothing toward `new`; `alpha = 1` disables it.
pub fn smooth(
    prev: Option<ScreenPoint>,
    new: ScreenPoint,
    alpha: f64,
) -> Result<ScreenPoint, GestureError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GestureError::Alpha(alpha));
    }
    let Some(prev) = prev else {
        return Ok(new);
    };
    let blend = |n: i32, p: i32| (alpha * n as f64 + (1.0 - alpha) * p as f64).round() as i32;
    Ok(ScreenPoint {
        x: blend(new.x, prev.x),
        y: blend(new.y, prev.y),
    })
}

struct Latch<'a> {
    streak: &'a mut u32,
    armed: &'a mut bool,
}

impl Latch<'_> {
    fn release(&mut self) {
        *self.streak = 0;
        *self.armed = false;
    }
}

/// Advances the gesture machine by one frame.
pub fn step(
    mut state: GestureState,
    d: &DetectionSet,
    params: &GestureParams,
) -> Result<(GestureState, Vec<PointerAction>), GestureError> {
    let now = d.timestamp;
    let mut actions = Vec::new();
    let left_seen = d.has(params.bindings.left);
    let right_seen = d.has(params.bindings.right);

    let Some(red) = d.red else {
        // Pointer lost: hold position, restart confirmation. A click color seen
        // without the pointer latches, so it must vanish before it can click.
        state.left_streak = 0;
        state.right_streak = 0;
        state.left_armed = left_seen;
        state.right_armed = right_seen;
        return Ok((state, actions));
    };

    let mapped = map_to_screen(red.centroid, params.frame, params.screen)?;
    let point = smooth(state.last_point, mapped, params.smoothing_alpha)?;
    state.last_point = Some(point);
    actions.push(PointerAction {
        kind: ActionKind::MoveTo(point),
        timestamp: now,
    });

    let refractory_ok =
        |last: Option<u64>| last.is_none_or(|t| now.saturating_sub(t) >= params.refractory_ms);

    let GestureState {
        left_streak,
        right_streak,
        left_armed,
        right_armed,
        last_click_at,
        ..
    } = &mut state;

    let mut fire = |latch: &mut Latch, kind: ActionKind, last: &mut Option<u64>| {
        *latch.streak = latch.streak.saturating_add(1);
        if *latch.streak >= params.confirm_frames && !*latch.armed && refractory_ok(*last) {
            *latch.armed = true;
            *last = Some(now);
            actions.push(PointerAction {
                kind,
                timestamp: now,
            });
        }
    };

    let mut left = Latch {
        streak: left_streak,
        armed: left_armed,
    };
    if left_seen {
        fire(&mut left, ActionKind::LeftClick, last_click_at);
    } else {
        left.release();
    }

    let mut right = Latch {
        streak: right_streak,
        armed: right_armed,
    };
    if !right_seen {
        right.release();
    } else if !left_seen {
        fire(&mut right, ActionKind::RightClick, last_click_at);
    }
    // Both click colors visible: left wins and the right streak holds.

    Ok((state, actions))
}
