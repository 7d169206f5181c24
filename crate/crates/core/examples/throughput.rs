//! Times the three-color pipeline on synthetic 640x480 frames.

use chroma_mouse::config::SharedConfig;
use chroma_mouse::gesture::Geometry;
use chroma_mouse::pipeline::Pipeline;
use chroma_mouse::sink::NullSink;
use chroma_mouse::source::{FrameSource, SceneScript, SceneSource, TimedFrame};
use std::time::Instant;

const SCENE: &str = r#"{"width":640,"height":480,"fps":30,"duration":300,"tracks":[
  {"color":"red","radius":9,"path":[{"frame":0,"x":40,"y":40},{"frame":299,"x":600,"y":440}]},
  {"color":"green","radius":9,"path":[{"frame":0,"x":560,"y":60}],"visible":[[100,140]]},
  {"color":"blue","radius":9,"path":[{"frame":0,"x":80,"y":420}],"visible":[[200,240]]}]}"#;

fn main() {
    let scene = SceneScript::from_json(SCENE).unwrap();
    let mut source = SceneSource::new(scene).unwrap();
    let frames: Vec<TimedFrame> = std::iter::from_fn(|| source.next_frame())
        .map(Result::unwrap)
        .collect();

    let mut pipeline = Pipeline::new(
        SharedConfig::default(),
        Geometry::new(1920, 1080),
        Box::new(NullSink),
        30.0,
    );
    let start = Instant::now();
    let mut actions = 0;
    for tf in &frames {
        actions += pipeline.process(tf).unwrap().actions.len();
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{} frames in {secs:.3} s: {:.1} fps, {:.2} ms/frame, {actions} actions",
        frames.len(),
        frames.len() as f64 / secs,
        secs * 1000.0 / frames.len() as f64
    );
}
