//! Opens a camera and reports the negotiated mode and the measured rate.
//!
//!     cargo run --example camera_probe -- 0

use chroma_mouse::source::{open_camera, CaptureConfig, FrameSource};
use std::time::Instant;

fn main() {
    let device = std::env::args()
        .nth(1)
        .map_or(0, |d| d.parse().expect("device index"));
    let cfg = CaptureConfig {
        device,
        ..Default::default()
    };
    let mut cam = match open_camera(&cfg) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    };
    println!("{:?}", cam.info());
    let start = Instant::now();
    let mut n = 0;
    while n < 90 {
        match cam.next_frame() {
            Some(Ok(_)) => n += 1,
            Some(Err(e)) => {
                eprintln!("{e}");
                break;
            }
            None => break,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{n} frames in {secs:.2} s ({:.1} fps), {} dropped",
        n as f64 / secs,
        cam.dropped()
    );
}
