//! Batch runs: step a session, writing metrics, frames, events and a
//! summary.

use crate::config::{LayoutConfig, OutputConfig, ScenarioConfig};
use crate::render::{render, RenderError};
use crate::session::{Session, SessionError};
use crate::snapshot::{sha256_hex, SnapshotError};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;
use winds_core::modes::{southward_diversion, Mode};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub seed: u64,
    pub storm_hits: u64,
    pub storm_exits: usize,
    pub mean_exit_lat: Option<f64>,
    pub lgm_coverage: f64,
    /// Ice Age only: coverage reached `lgm_success`.
    pub lgm_recreated: Option<bool>,
    /// Ice Age only: mean exit latitude of the same run on an empty table.
    pub baseline_mean_exit_lat: Option<f64>,
    /// Baseline minus this run, degrees; positive is southward.
    pub southward_diversion: Option<f64>,
    /// Why the diversion is missing, when it is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Steps `session` `steps` times, calling `each` after every step.
pub fn drive(
    session: &mut Session,
    steps: u64,
    mut each: impl FnMut(&mut Session) -> Result<(), RunError>,
) -> Result<(), RunError> {
    for _ in 0..steps {
        session.step()?;
        each(session)?;
    }
    Ok(())
}

struct Outputs {
    metrics: Option<(csv::Writer<BufWriter<File>>, PathBuf)>,
    events: Option<(BufWriter<File>, PathBuf)>,
    frames: Option<(PathBuf, BufWriter<File>)>,
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

impl Outputs {
    fn open(cfg: &ScenarioConfig, out: &OutputConfig) -> Result<Self, RunError> {
        let metrics = match &out.metrics {
            Some(p) => {
                let p = cfg.resolve(p);
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(&p)?);
                w.write_record([
                    "step",
                    "mean_speed",
                    "max_divergence",
                    "storm_hits",
                    "mean_storm_lat",
                    "lgm_coverage",
                ])
                .map_err(|source| RunError::Csv {
                    path: p.display().to_string(),
                    source,
                })?;
                Some((w, p))
            }
            None => None,
        };
        let events = match &out.events {
            Some(p) => {
                let p = cfg.resolve(p);
                Some((create(&p)?, p))
            }
            None => None,
        };
        let frames = match &out.frames {
            Some(dir) => {
                let dir = cfg.resolve(dir);
                std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                let sums = create(&dir.join("checksums.sha256"))?;
                Some((dir, sums))
            }
            None => None,
        };
        Ok(Self {
            metrics,
            events,
            frames,
        })
    }

    fn record(&mut self, s: &mut Session, out: &OutputConfig, last: u64) -> Result<(), RunError> {
        let step = s.step_count();
        if let Some((w, p)) = &mut self.metrics {
            if step.is_multiple_of(out.metrics_every) || step == last {
                w.serialize(s.metrics()).map_err(|source| RunError::Csv {
                    path: p.display().to_string(),
                    source,
                })?;
            }
        }
        self.write_events(s)?;
        if let Some((dir, sums)) = &mut self.frames {
            if step.is_multiple_of(out.frame_every) {
                let name = format!("frame_{step:06}.png");
                let img = render(&s.snapshot(), &out.overlays, out.pixels_per_cell)?;
                let bytes = img.write_png(&dir.join(&name))?;
                writeln!(sums, "{}  {name}", sha256_hex(&bytes)).map_err(io_err(dir))?;
            }
        }
        Ok(())
    }

    fn write_events(&mut self, s: &mut Session) -> Result<(), RunError> {
        let events = s.take_events();
        if let Some((w, p)) = &mut self.events {
            for e in events {
                let line = serde_json::to_string(&e).expect("events serialize");
                writeln!(w, "{line}").map_err(io_err(p))?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(), RunError> {
        if let Some((mut w, p)) = self.metrics {
            w.flush().map_err(io_err(&p))?;
        }
        if let Some((mut w, p)) = self.events {
            w.flush().map_err(io_err(&p))?;
        }
        if let Some((dir, mut sums)) = self.frames {
            sums.flush().map_err(io_err(&dir))?;
        }
        Ok(())
    }
}

/// Runs `cfg.steps` frames with the outputs in `cfg.output`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunSummary, RunError> {
    let mut session = Session::new(cfg.clone())?;
    let mut outputs = Outputs::open(cfg, &cfg.output)?;
    // Build-time events (clamped blocks and the like) go first.
    outputs.write_events(&mut session)?;
    let steps = cfg.steps;
    drive(&mut session, steps, |s| outputs.record(s, &cfg.output, steps))?;
    outputs.finish()?;
    if let Some(p) = &cfg.output.snapshot {
        session.snapshot().write(&cfg.resolve(p))?;
    }

    let mut summary = RunSummary {
        steps,
        seed: cfg.seed,
        storm_hits: session.storm_hits(),
        storm_exits: session.exit_latitudes().len(),
        mean_exit_lat: session.mean_exit_latitude(),
        lgm_coverage: session.lgm_coverage(),
        lgm_recreated: None,
        baseline_mean_exit_lat: None,
        southward_diversion: None,
        note: None,
    };
    if let Some(m) = cfg.mode.as_ref().filter(|m| m.mode == Mode::IceAge) {
        summary.lgm_recreated = Some(summary.lgm_coverage >= m.lgm_success);
        if steps > 0 {
            let baseline = empty_table_run(cfg)?;
            summary.baseline_mean_exit_lat = baseline.mean_exit_latitude();
            match southward_diversion(baseline.exit_latitudes(), session.exit_latitudes()) {
                Ok(d) => summary.southward_diversion = Some(d),
                Err(e) => summary.note = Some(e.to_string()),
            }
        }
    }
    if let Some(p) = &cfg.output.summary {
        let p = cfg.resolve(p);
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        std::fs::write(&p, text + "\n").map_err(io_err(&p))?;
    }
    Ok(summary)
}

/// The same run on an empty table, with no outputs.
pub fn empty_table_run(cfg: &ScenarioConfig) -> Result<Session, RunError> {
    let mut base = cfg.clone();
    base.depth = None;
    base.layout = Some(LayoutConfig {
        blocks: Vec::new(),
        random: None,
        ..cfg.layout.clone().unwrap_or_default()
    });
    base.output = OutputConfig::default();
    let mut s = Session::new(base)?;
    drive(&mut s, cfg.steps, |_| Ok(()))?;
    Ok(s)
}
