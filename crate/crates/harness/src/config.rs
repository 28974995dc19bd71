//! Scenario files. A scenario is a TOML document; see `scenarios/README.md`
//! for the schema.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;
use winds_core::modes::ModeConfig;
use winds_core::particles::SeedingPolicy;
use winds_core::repulse::RepulseParams;
use winds_core::terrain::{Calibration, ClassHeights, ReliefClass, Thresholds};
use winds_core::windsim::{ConfigError, GridSpec, SimParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    /// `field` is a dotted path such as `sim.dt`.
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn prefixed(section: &str, e: ConfigError) -> ScenarioError {
    let ConfigError::Invalid { field, reason } = e;
    invalid(format!("{section}.{field}"), reason)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Cfd,
    Repulse,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainConfig {
    pub thresholds: Thresholds,
    pub heights: ClassHeights,
    pub calibration: Calibration,
}

/// A block as written in scenario files and layout messages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    /// `ice`, `high` or `low`.
    pub class: BlockClass,
    /// Center, grid cells.
    pub x: f64,
    pub y: f64,
    /// Counter-clockwise rotation, radians.
    #[serde(default)]
    pub rot: f64,
    /// Footprint in cells; the layout's `block_size` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockClass {
    Low,
    High,
    Ice,
}

impl From<BlockClass> for ReliefClass {
    fn from(c: BlockClass) -> Self {
        match c {
            BlockClass::Low => ReliefClass::LowMountain,
            BlockClass::High => ReliefClass::HighMountain,
            BlockClass::Ice => ReliefClass::IceSheet,
        }
    }
}

/// Blocks scattered at random over the map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomLayout {
    pub count: usize,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub min_size: f64,
    pub max_size: f64,
}

impl Default for RandomLayout {
    fn default() -> Self {
        Self {
            count: 12,
            seed: None,
            min_size: 4.0,
            max_size: 16.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub blocks: Vec<BlockEntry>,
    pub random: Option<RandomLayout>,
    /// Default footprint `[w, h]` in cells.
    pub block_size: [f64; 2],
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            blocks: Vec::new(),
            random: None,
            block_size: [12.0, 8.0],
        }
    }
}

/// A directory of numbered PGM depth frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSource {
    /// Relative paths resolve against the scenario file's directory.
    pub dir: PathBuf,
    /// Simulation steps per depth frame.
    #[serde(default = "one")]
    pub steps_per_frame: u64,
    /// Start over after the last frame instead of holding it.
    #[serde(default = "yes")]
    pub repeat: bool,
}

fn one() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overlays {
    pub obstacles: bool,
    pub targets: bool,
    pub storms: bool,
    pub outline: bool,
}

impl Default for Overlays {
    fn default() -> Self {
        Self {
            obstacles: true,
            targets: true,
            storms: true,
            outline: true,
        }
    }
}

impl Overlays {
    pub fn none() -> Self {
        Self {
            obstacles: false,
            targets: false,
            storms: false,
            outline: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub metrics: Option<PathBuf>,
    pub metrics_every: u64,
    pub frames: Option<PathBuf>,
    pub frame_every: u64,
    pub events: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub pixels_per_cell: u32,
    pub overlays: Overlays,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            metrics: None,
            metrics_every: 10,
            frames: None,
            frame_every: 100,
            events: None,
            snapshot: None,
            summary: None,
            pixels_per_cell: 4,
            overlays: Overlays::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    /// Wall-clock budget per simulation step.
    pub frame_ms: u64,
    /// Publish a frame every this many steps.
    pub snapshot_every: u64,
    pub max_blocks: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            frame_ms: 16,
            snapshot_every: 2,
            max_blocks: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub steps: u64,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub repulse: RepulseParams,
    /// `seeding.seed` is replaced by the run seed.
    #[serde(default)]
    pub seeding: SeedingPolicy,
    #[serde(default)]
    pub terrain: TerrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthSource>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub serve: ServeConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    /// A valid config with an empty table.
    pub fn empty_table() -> Self {
        Self {
            seed: 0,
            steps: 0,
            engine: Engine::Cfd,
            grid: GridSpec::default(),
            sim: SimParams::default(),
            repulse: RepulseParams::default(),
            seeding: SeedingPolicy::default(),
            terrain: TerrainConfig::default(),
            mode: None,
            layout: Some(LayoutConfig::default()),
            depth: None,
            output: OutputConfig::default(),
            serve: ServeConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.grid.validate().map_err(|e| prefixed("grid", e))?;
        self.sim.validate().map_err(|e| prefixed("sim", e))?;
        self.repulse.validate().map_err(|e| prefixed("repulse", e))?;
        self.seeding.validate().map_err(|e| prefixed("seeding", e))?;
        self.terrain
            .calibration
            .validate()
            .map_err(|e| invalid("terrain.calibration", e.to_string()))?;
        match (&self.layout, &self.depth) {
            (Some(_), Some(_)) => return Err(invalid("layout", "give either [layout] or [depth], not both")),
            (None, None) => return Err(invalid("layout", "one of [layout] or [depth] is required")),
            _ => {}
        }
        if let Some(layout) = &self.layout {
            if layout.block_size.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(invalid("layout.block_size", "sizes must be positive"));
            }
            for (k, b) in layout.blocks.iter().enumerate() {
                let finite = [b.x, b.y, b.rot].iter().all(|v| v.is_finite());
                if !finite {
                    return Err(invalid(format!("layout.blocks[{k}]"), "coordinates must be finite"));
                }
                for (name, v) in [("w", b.w), ("h", b.h)] {
                    if v.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                        return Err(invalid(format!("layout.blocks[{k}].{name}"), "must be positive"));
                    }
                }
            }
            if let Some(r) = &layout.random {
                if !(r.min_size > 0.0 && r.min_size <= r.max_size) {
                    return Err(invalid("layout.random", "need 0 < min_size <= max_size"));
                }
            }
        }
        if let Some(d) = &self.depth {
            if d.steps_per_frame == 0 {
                return Err(invalid("depth.steps_per_frame", "must be >= 1"));
            }
        }
        if let Some(m) = &self.mode {
            if !(m.hit_radius >= 0.0) {
                return Err(invalid("mode.hit_radius", "must be >= 0"));
            }
            if !(0.0..=1.0).contains(&m.lgm_success) {
                return Err(invalid("mode.lgm_success", "must lie in [0, 1]"));
            }
            if let Some([x, y]) = m.x_target {
                let inside = x >= 0.0 && y >= 0.0 && x < self.grid.nx as f64 && y < self.grid.ny as f64;
                if !inside {
                    return Err(invalid("mode.x_target", "must lie inside the grid"));
                }
            }
        }
        let out = &self.output;
        if out.metrics_every == 0 {
            return Err(invalid("output.metrics_every", "must be >= 1"));
        }
        if out.frame_every == 0 {
            return Err(invalid("output.frame_every", "must be >= 1"));
        }
        if out.pixels_per_cell == 0 || out.pixels_per_cell > 16 {
            return Err(invalid("output.pixels_per_cell", "must lie in 1..=16"));
        }
        if self.serve.snapshot_every == 0 {
            return Err(invalid("serve.snapshot_every", "must be >= 1"));
        }
        Ok(())
    }

    /// Seed for mode generation: `[mode] seed`, else the run seed.
    pub fn mode_seed(&self) -> u64 {
        self.mode.as_ref().and_then(|m| m.seed).unwrap_or(self.seed)
    }
}
