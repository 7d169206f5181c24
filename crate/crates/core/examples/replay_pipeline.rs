//! Runs the full pipeline over a replay directory and records the actions.
//!
//!     cargo run --example replay_pipeline -- /tmp/click_demo events.jsonl

use chroma_mouse::pipeline::{run, RunMode, RunOptions};
use chroma_mouse::sink::{read_event_log, SinkBackend};
use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().expect("replay directory"));
    let log = PathBuf::from(args.next().unwrap_or_else(|| "events.jsonl".into()));

    let opts = RunOptions::new(RunMode::Replay(dir), SinkBackend::Record(log.clone()));
    match run(&opts, None) {
        Ok(stats) => println!("{stats}"),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
    for entry in read_event_log(&log)
        .unwrap()
        .iter()
        .filter(|e| e.x.is_none())
    {
        println!("{:?} at frame {}", entry.kind, entry.frame_index);
    }
}
