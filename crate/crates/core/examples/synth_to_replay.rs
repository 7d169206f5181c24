//! Renders a scene script into a replay directory.
//!
//!     cargo run --example synth_to_replay -- scenes/click_demo.json /tmp/click_demo

use chroma_mouse::source::{render_scene, write_replay_dir, SceneScript};

fn main() {
    let mut args = std::env::args().skip(1);
    let (Some(scene), Some(out)) = (args.next(), args.next()) else {
        eprintln!("usage: synth_to_replay SCENE.json OUT_DIR");
        std::process::exit(2);
    };
    let script = SceneScript::load(&scene).unwrap();
    let frames = (0..script.duration).map(|t| render_scene(&script, t).unwrap());
    let n = write_replay_dir(&out, script.fps, frames).unwrap();
    println!("wrote {n} frames to {out}");
}
