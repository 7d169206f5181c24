use chroma_mouse::pipeline::{run, RunMode, RunOptions};
use chroma_mouse::sink::SinkBackend;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

#[derive(Parser)]
#[command(version, about = "Drive the pointer with colored finger markers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process frames until the source ends or Ctrl-C.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Live,
    Replay,
    Simulate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sink {
    Os,
    Record,
    Null,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "live")]
    mode: Mode,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame directory (replay mode).
    #[arg(long, required_if_eq("mode", "replay"))]
    dir: Option<PathBuf>,
    /// Scene script (simulate mode).
    #[arg(long, required_if_eq("mode", "simulate"))]
    scene: Option<PathBuf>,
    /// Defaults to `os` in live mode and `record` otherwise.
    #[arg(long, value_enum)]
    sink: Option<Sink>,
    /// Event log path for the record sink.
    #[arg(long, default_value = "events.jsonl")]
    log: PathBuf,
    /// Start the local control service.
    #[arg(long, overrides_with = "no_serve")]
    serve: bool,
    #[arg(long, overrides_with = "serve")]
    no_serve: bool,
    /// Service port, overriding the config file.
    #[arg(long)]
    port: Option<u16>,
    /// Write every processing stage of this frame index as images.
    #[arg(long)]
    dump_frame: Option<u64>,
    #[arg(long, default_value = "dump")]
    dump_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let Command::Run(args) = Cli::parse().command;

    let mode = match args.mode {
        Mode::Live => RunMode::Live,
        Mode::Replay => RunMode::Replay(args.dir.expect("required by clap")),
        Mode::Simulate => RunMode::Simulate(args.scene.expect("required by clap")),
    };
    let sink = match args.sink.unwrap_or(match args.mode {
        Mode::Live => Sink::Os,
        _ => Sink::Record,
    }) {
        Sink::Os => SinkBackend::OsInjection,
        Sink::Record => SinkBackend::Record(args.log),
        Sink::Null => SinkBackend::Null,
    };
    let mut opts = RunOptions::new(mode, sink);
    opts.config = args.config;
    opts.serve = args.serve && !args.no_serve;
    opts.port = args.port;
    opts.dump_frame = args.dump_frame;
    opts.dump_dir = args.dump_dir;

    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed)) {
        log::warn!("no Ctrl-C handler: {e}");
    }

    match run(&opts, Some(stop)) {
        Ok(stats) => {
            println!("{stats}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
