//! Finds a red marker in a synthetic frame.

use chroma_mouse::imaging::{
    detect_marker, mirror_horizontal, to_grayscale, DetectParams, MarkerColor,
};
use chroma_mouse::source::SceneScript;

fn main() {
    let scene = SceneScript::from_json(
        r#"{"width":640,"height":480,"duration":1,
            "tracks":[{"color":"red","radius":10,"path":[{"frame":0,"x":200.5,"y":120}]}]}"#,
    )
    .unwrap();
    let frame = chroma_mouse::source::render_scene(&scene, 0).unwrap();

    // Detection runs on the mirrored view, like the live pipeline.
    let mirrored = mirror_horizontal(&frame);
    let gray = to_grayscale(&mirrored);
    let params = DetectParams::default().scaled_for(640, 480);
    for color in MarkerColor::ALL {
        match detect_marker(&mirrored, &gray, color, &params).unwrap() {
            Some(d) => println!(
                "{color}: centroid ({:.2}, {:.2}), {} px",
                d.centroid.x, d.centroid.y, d.area
            ),
            None => println!("{color}: not found"),
        }
    }
}
