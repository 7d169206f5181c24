//! Writes every intermediate image of one scene frame to a directory.
//!
//!     cargo run --example dump_stages -- scenes/click_demo.json 45 /tmp/stages

use chroma_mouse::config::RuntimeConfig;
use chroma_mouse::pipeline::dump_stages;
use chroma_mouse::source::{frame_timestamp, render_scene, SceneScript, TimedFrame};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [scene, index, out] = &args[..] else {
        eprintln!("usage: dump_stages SCENE.json FRAME OUT_DIR");
        std::process::exit(2);
    };
    let script = SceneScript::load(scene).unwrap();
    let index: u64 = index.parse().unwrap();
    let tf = TimedFrame {
        frame: render_scene(&script, index).unwrap(),
        index,
        timestamp: frame_timestamp(index, script.fps),
    };
    for path in dump_stages(&tf, &RuntimeConfig::default(), out.as_ref()).unwrap() {
        println!("{}", path.display());
    }
}
