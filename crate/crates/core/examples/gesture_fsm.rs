//! Drives the click state machine with a hand-written detection sequence.

use chroma_mouse::gesture::{step, DetectionSet, Geometry, GestureParams, GestureState};
use chroma_mouse::imaging::{Centroid, Detection};

fn det(x: f64, y: f64) -> Option<Detection> {
    Some(Detection {
        centroid: Centroid { x, y },
        area: 200,
    })
}

fn main() {
    let params = GestureParams::new(Geometry::new(640, 480), Geometry::new(1920, 1080));
    let mut state = GestureState::default();
    // Red throughout; green from frame 3 to 8; blue for one frame, too short
    // to confirm.
    for i in 0..16u64 {
        let d = DetectionSet {
            red: det(100.0 + 10.0 * i as f64, 240.0),
            green: if (3..=8).contains(&i) {
                det(500.0, 50.0)
            } else {
                None
            },
            blue: if i == 12 { det(50.0, 400.0) } else { None },
            frame_index: i,
            timestamp: i * 100,
        };
        let (next, actions) = step(state, &d, &params).unwrap();
        state = next;
        println!(
            "frame {i:2}: {:?}",
            actions.iter().map(|a| a.kind).collect::<Vec<_>>()
        );
    }
}
