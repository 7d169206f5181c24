#![allow(dead_code)]

use chroma_mouse::imaging::MarkerColor;
use chroma_mouse::source::{Keyframe, SceneScript, Track};
use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use std::net::SocketAddr;
use std::time::Duration;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub const W: usize = 640;
pub const H: usize = 480;
pub const RADIUS: f64 = 8.0;

fn track(color: MarkerColor, path: &[(u64, f64, f64)], visible: Option<Vec<[u64; 2]>>) -> Track {
    Track {
        color,
        radius: RADIUS,
        path: path
            .iter()
            .map(|&(frame, x, y)| Keyframe { frame, x, y })
            .collect(),
        visible,
    }
}

/// Red disk crossing the frame diagonally for 100 frames, green shown on
/// frames 40..=50, blue on 70..=80, both well away from the red path.
pub fn click_scene() -> SceneScript {
    SceneScript {
        width: W,
        height: H,
        fps: 30.0,
        duration: 100,
        background: [0, 0, 0],
        tracks: vec![
            track(
                MarkerColor::Red,
                &[(0, 40.0, 40.0), (99, 600.0, 440.0)],
                None,
            ),
            track(
                MarkerColor::Green,
                &[(0, 560.0, 60.0)],
                Some(vec![[40, 50]]),
            ),
            track(MarkerColor::Blue, &[(0, 80.0, 420.0)], Some(vec![[70, 80]])),
        ],
    }
}

/// Only the red diagonal of [`click_scene`].
pub fn red_only_scene() -> SceneScript {
    let mut s = click_scene();
    s.tracks.truncate(1);
    s
}

/// Mean of the integer lattice points inside a closed disk, as (col, row).
pub fn disk_lattice_mean(cx: f64, cy: f64, r: f64) -> (f64, f64) {
    let (mut sx, mut sy, mut n) = (0i64, 0i64, 0i64);
    let reach = r.ceil() as i64 + 1;
    let (bx, by) = (cx.round() as i64, cy.round() as i64);
    for y in by - reach..=by + reach {
        for x in bx - reach..=bx + reach {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                sx += x;
                sy += y;
                n += 1;
            }
        }
    }
    (sx as f64 / n as f64, sy as f64 / n as f64)
}

/// Screen position of a frame-space point, scaled corner to corner.
pub fn oracle_screen(x: f64, y: f64, frame: (usize, usize), screen: (usize, usize)) -> (i64, i64) {
    let sx = x / (frame.0 - 1) as f64 * (screen.0 - 1) as f64;
    let sy = y / (frame.1 - 1) as f64 * (screen.1 - 1) as f64;
    (sx.round() as i64, sy.round() as i64)
}

pub type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub async fn connect(addr: SocketAddr) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws"))
        .await
        .expect("websocket connects");
    ws
}

pub async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.to_owned())).await.unwrap();
}

/// Next text message, or None after `wait` of silence.
pub async fn recv_text(ws: &mut Ws, wait: Duration) -> Option<String> {
    loop {
        match tokio::time::timeout(wait, ws.next()).await {
            Ok(Some(Ok(Message::Text(t)))) => return Some(t),
            Ok(Some(Ok(_))) => continue,
            _ => return None,
        }
    }
}

pub async fn recv_json(ws: &mut Ws) -> Value {
    let text = recv_text(ws, Duration::from_secs(5))
        .await
        .expect("message arrives");
    serde_json::from_str(&text).unwrap()
}

/// Receives until a message of `kind` arrives, skipping others.
pub async fn recv_type(ws: &mut Ws, kind: &str) -> Value {
    loop {
        let v = recv_json(ws).await;
        if v["type"] == kind {
            return v;
        }
    }
}
