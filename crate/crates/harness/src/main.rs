use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use winds_core::terrain::pgm;
use winds_harness::config::{Engine, Overlays};
use winds_harness::layout::synthesize_depth;
use winds_harness::render::render;
use winds_harness::scenarios;
use winds_harness::{run_scenario, ScenarioConfig, ScenarioError, Session, Snapshot};

#[derive(Parser)]
#[command(
    name = "winds",
    version,
    about = "Wind exhibit simulator: batch runs, rendering and the UI server"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless.
    Run {
        /// Scenario file or bundled scenario name.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Metrics CSV path.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Directory for PNG frames and their checksums.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Steps between frames.
        #[arg(long)]
        every: Option<u64>,
        #[arg(long, value_enum)]
        engine: Option<Engine>,
        /// JSON-lines event log.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Final-frame snapshot for `render`.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Summary JSON path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Serve the scenario to UI clients over TCP.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Draw a snapshot as PNG.
    Render {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: u32,
        /// Trails only.
        #[arg(long)]
        no_overlays: bool,
    },
    /// Write depth frames of a scenario's table, as an overhead camera would
    /// see it.
    SynthDepth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 360)]
        height: usize,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

/// A scenario file, or the name of a bundled scenario.
fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    if !path.exists() {
        if let Some(cfg) = path.to_str().and_then(scenarios::bundled) {
            return cfg.map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(2)
            });
        }
    }
    ScenarioConfig::load(path).map_err(|e| {
        match e {
            ScenarioError::Invalid { .. } => eprintln!("error: {}: {e}", path.display()),
            _ => eprintln!("error: {e}"),
        }
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run {
            config,
            steps,
            seed,
            metrics,
            frames,
            every,
            engine,
            events,
            snapshot,
            summary,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            // Command-line paths are relative to the working directory.
            let cwd = |p: PathBuf| std::env::current_dir().map(|d| d.join(&p)).unwrap_or(p);
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.engine = engine.unwrap_or(cfg.engine);
            let out = &mut cfg.output;
            out.metrics = metrics.map(cwd).or(out.metrics.take());
            out.frames = frames.map(cwd).or(out.frames.take());
            out.frame_every = every.unwrap_or(out.frame_every);
            out.events = events.map(cwd).or(out.events.take());
            out.snapshot = snapshot.map(cwd).or(out.snapshot.take());
            out.summary = summary.map(cwd).or(out.summary.take());
            if let Err(e) = cfg.validate() {
                eprintln!("error: {}: {e}", config.display());
                return ExitCode::from(2);
            }
            match run_scenario(&cfg) {
                Ok(s) => {
                    println!("{}", serde_json::to_string(&s).expect("summary serializes"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Serve { config, port, host } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let listener = match std::net::TcpListener::bind((host.as_str(), port)) {
                Ok(l) => l,
                Err(e) => return fail(format!("{host}:{port}: {e}")),
            };
            if let Ok(addr) = listener.local_addr() {
                eprintln!("listening on {addr}");
            }
            match winds_harness::serve::serve(cfg, listener, Arc::new(AtomicBool::new(false))) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Cmd::Render {
            snapshot,
            out,
            scale,
            no_overlays,
        } => {
            let snap = match Snapshot::read(&snapshot) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let overlays = if no_overlays {
                Overlays::none()
            } else {
                Overlays::default()
            };
            match render(&snap, &overlays, scale.clamp(1, 16)).and_then(|img| img.write_png(&out)) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Cmd::SynthDepth {
            config,
            out,
            width,
            height,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let session = match Session::new(cfg.clone()) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let frame = synthesize_depth(session.heights(), &cfg.terrain.calibration, width, height);
            if let Err(e) = std::fs::create_dir_all(&out) {
                return fail(format!("{}: {e}", out.display()));
            }
            match pgm::write(&out.join(pgm::sequence_file_name(0)), &frame) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}
