mod common;

use chroma_mouse::config::{RuntimeConfig, SharedConfig};
use chroma_mouse::gesture::Geometry;
use chroma_mouse::imaging::{Frame, MarkerColor};
use chroma_mouse::pipeline::{dump_stages, run, Pipeline, RunMode, RunOptions};
use chroma_mouse::sink::{read_event_log, EventKind, NullSink, SinkBackend};
use chroma_mouse::source::{
    parse_pgm, parse_ppm, render_scene, write_replay_dir, FrameSource, SceneSource, TimedFrame,
};
use common::*;
use serde_json::json;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chroma-mouse"))
}

fn write_scene(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string(&click_scene()).unwrap()).unwrap();
    path
}

#[test]
fn replay_directory_runs_to_completion() {
    let tmp = tempfile::tempdir().unwrap();
    let frames_dir = tmp.path().join("diag");
    let script = red_only_scene();
    write_replay_dir(
        &frames_dir,
        30.0,
        (0..100).map(|t| render_scene(&script, t).unwrap()),
    )
    .unwrap();
    let log = tmp.path().join("out.jsonl");

    let out = bin()
        .args(["run", "--mode", "replay", "--dir"])
        .arg(&frames_dir)
        .args(["--sink", "record", "--log"])
        .arg(&log)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("frames=100 fps="), "{stdout}");
    assert!(stdout.contains("actions=100"), "{stdout}");
    let entries = read_event_log(&log).unwrap();
    assert_eq!(entries.len(), 100);
    assert!(entries.iter().all(|e| e.kind == EventKind::Move));
}

#[test]
fn black_replay_logs_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let black = Frame::filled(64, 48, [0, 0, 0]).unwrap();
    write_replay_dir(tmp.path().join("black"), 30.0, vec![black; 20]).unwrap();
    let log = tmp.path().join("out.jsonl");
    let opts = RunOptions::new(
        RunMode::Replay(tmp.path().join("black")),
        SinkBackend::Record(log.clone()),
    );
    let stats = run(&opts, None).unwrap();
    assert_eq!((stats.frames, stats.actions), (20, 0));
    assert_eq!(std::fs::read_to_string(&log).unwrap(), "");
}

#[test]
fn missing_config_exits_2_naming_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    let scene = write_scene(tmp.path());
    let out = bin()
        .args(["run", "--mode", "simulate", "--sink", "null", "--scene"])
        .arg(&scene)
        .arg("--config")
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&*missing.to_string_lossy()));
}

#[test]
fn invalid_config_exits_2_naming_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "gesture.confirm_frames = 0\n").unwrap();
    let scene = write_scene(tmp.path());
    let out = bin()
        .args(["run", "--mode", "simulate", "--sink", "null", "--scene"])
        .arg(&scene)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gesture.confirm_frames"));
}

#[test]
fn source_and_sink_failures_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--mode", "replay", "--sink", "null", "--dir"])
        .arg(tmp.path().join("absent"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let scene = write_scene(tmp.path());
    let out = bin()
        .args(["run", "--mode", "simulate", "--sink", "record", "--scene"])
        .arg(&scene)
        .arg("--log")
        .arg(tmp.path().join("no/such/dir/out.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn occupied_service_port_exits_5() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path());
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = held.local_addr().unwrap().port();
    let out = bin()
        .args([
            "run", "--mode", "simulate", "--sink", "null", "--serve", "--port",
        ])
        .arg(port.to_string())
        .arg("--scene")
        .arg(&scene)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&port.to_string()));
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path());
    let logs: Vec<_> = (0..2)
        .map(|k| {
            let log = tmp.path().join(format!("run{k}.jsonl"));
            let opts = RunOptions::new(
                RunMode::Simulate(scene.clone()),
                SinkBackend::Record(log.clone()),
            );
            run(&opts, None).unwrap();
            std::fs::read(log).unwrap()
        })
        .collect();
    assert!(!logs[0].is_empty());
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn dumped_stages_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path());
    let dump = tmp.path().join("dump");
    let out = bin()
        .args([
            "run",
            "--mode",
            "simulate",
            "--sink",
            "null",
            "--dump-frame",
            "45",
            "--dump-dir",
        ])
        .arg(&dump)
        .arg("--scene")
        .arg(&scene)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let read = |name: &str| std::fs::read(dump.join(name)).unwrap();
    let input = parse_ppm(&read("00_input.ppm")).unwrap();
    assert_eq!(input, render_scene(&click_scene(), 45).unwrap());

    // Each stage recomputed from the previous stage's file only.
    let mirrored = parse_ppm(&read("01_mirrored.ppm")).unwrap();
    for row in 0..H {
        for col in 0..W {
            assert_eq!(mirrored.get(row, col), input.get(row, W - 1 - col));
        }
    }
    let gray = parse_pgm(&read("02_gray.pgm")).unwrap();
    for (px, &g) in mirrored.pixels().iter().zip(gray.values()) {
        let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        assert_eq!(g, y.round() as u8);
    }
    for color in MarkerColor::ALL {
        let excess = parse_pgm(&read(&format!("03_excess_{color}.pgm"))).unwrap();
        let mask = parse_pgm(&read(&format!("04_mask_{color}.pgm"))).unwrap();
        let ch = color.channel_index();
        for ((px, &g), (&e, &m)) in mirrored
            .pixels()
            .iter()
            .zip(gray.values())
            .zip(excess.values().iter().zip(mask.values()))
        {
            assert_eq!(e as i32, (px[ch] as i32 - g as i32).max(0));
            assert_eq!(
                m,
                if e as f64 >= (0.2f64 * 255.0).round() {
                    255
                } else {
                    0
                }
            );
        }
    }
    let det: serde_json::Value = serde_json::from_slice(&read("05_detections.json")).unwrap();
    assert_eq!(det["frame_index"], 45);
    assert!(det["red"].is_object() && det["green"].is_object() && det["blue"].is_null());
}

#[test]
fn config_change_applies_from_next_frame() {
    let script = click_scene();
    let shared = SharedConfig::new(RuntimeConfig::default());
    let mut pipeline = Pipeline::new(
        shared.clone(),
        Geometry::new(1920, 1080),
        Box::new(NullSink),
        30.0,
    );
    let mut src = SceneSource::new(script).unwrap();
    let mut frames: Vec<TimedFrame> = std::iter::from_fn(|| src.next_frame())
        .map(Result::unwrap)
        .collect();

    let first = pipeline.process(&frames[0]).unwrap();
    assert!(first.detections.red.is_some());
    // Marker no longer passes once the cutoff exceeds its channel excess.
    let patch = json!({"detect.threshold_fraction": 0.9});
    shared.apply_patch(patch.as_object().unwrap()).unwrap();
    let second = pipeline.process(&frames.remove(1)).unwrap();
    assert!(second.detections.red.is_none());
    assert!(second.actions.is_empty());
}

#[test]
fn stats_line_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path());
    let out = bin()
        .args(["run", "--mode", "simulate", "--sink", "null", "--scene"])
        .arg(&scene)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let line = String::from_utf8(out.stdout).unwrap();
    // 100 moves plus one left and one right click.
    assert!(
        line.starts_with("frames=100 ") && line.contains(" actions=102"),
        "{line}"
    );
}

#[test]
fn dump_stages_lists_files() {
    let tmp = tempfile::tempdir().unwrap();
    let tf = TimedFrame {
        frame: render_scene(&click_scene(), 0).unwrap(),
        index: 0,
        timestamp: 0,
    };
    let files = dump_stages(&tf, &RuntimeConfig::default(), tmp.path()).unwrap();
    assert_eq!(files.len(), 3 + 2 * 3 + 1);
    assert!(files.iter().all(|f| f.exists()));
}
