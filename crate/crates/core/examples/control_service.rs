//! Serves the control protocol while a scene plays in a loop at its own
//! frame rate. Handy when working on a panel without a camera.
//!
//!     cargo run --example control_service -- scenes/click_demo.json 7411

use chroma_mouse::config::SharedConfig;
use chroma_mouse::gesture::{ActionKind, Geometry};
use chroma_mouse::pipeline::Pipeline;
use chroma_mouse::service::{ControlService, ServiceOptions};
use chroma_mouse::sink::NullSink;
use chroma_mouse::source::{FrameSource, SceneScript, SceneSource};
use std::time::{Duration, Instant};

fn main() {
    let mut args = std::env::args().skip(1);
    let scene = SceneScript::load(args.next().expect("scene script")).unwrap();
    let port = args
        .next()
        .map_or(7411, |p| p.parse().expect("port number"));

    let opts = ServiceOptions {
        port,
        ..Default::default()
    };
    let service = ControlService::start(opts, SharedConfig::default()).unwrap();
    println!("ws://{}/ws", service.local_addr());

    let config = service.config().clone();
    let mut pipeline = Pipeline::new(
        config,
        Geometry::new(1920, 1080),
        Box::new(NullSink),
        scene.fps,
    )
    .with_publisher(service.publisher());
    let period = Duration::from_secs_f64(1.0 / scene.fps);
    loop {
        let mut source = SceneSource::new(scene.clone()).unwrap();
        while let Some(tf) = source.next_frame() {
            let started = Instant::now();
            let out = pipeline.process(&tf.unwrap()).unwrap();
            for a in out
                .actions
                .iter()
                .filter(|a| !matches!(a.kind, ActionKind::MoveTo(_)))
            {
                println!("{:?}", a);
            }
            std::thread::sleep(period.saturating_sub(started.elapsed()));
        }
    }
}
