//! One running scenario: terrain, engine, tracers, storms and trail, all
//! owned together and advanced one frame at a time.

use crate::config::{BlockEntry, Engine, LayoutConfig, ScenarioConfig};
use crate::layout::{layout_blocks, rasterize_entries, DepthFeed};
use crate::snapshot::{encode_bytes, obstacle_digest, FrameMetrics, Snapshot, Targets};
use serde::Serialize;
use thiserror::Error;
use winds_core::modes::{
    generate_nonameland, lgm_coverage, place_target, IceAgeAssets, Mode, ModeConfig, ModeError, Nonameland,
    ShapeLibrary,
};
use winds_core::particles::{FieldMover, ParticleSet, SeedingPolicy, StormSet, TrailField, DEFAULT_FADE};
use winds_core::repulse::RepulseEngine;
use winds_core::terrain::{obstacles_from_height, HeightField, ObstacleField, TerrainError};
use winds_core::windsim::{ConfigError, GridSpec, Simulator};
use winds_core::{Diagnostic, Polygon, Vec2};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Mode(#[from] ModeError),
}

#[allow(clippy::large_enum_variant)]
pub enum EngineState {
    Cfd(Simulator),
    Repulse(RepulseEngine),
}

/// A diagnostic tagged with the frame it happened in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoggedEvent {
    pub frame: u64,
    #[serde(flatten)]
    pub event: Diagnostic,
}

/// Fixed-order metrics row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub step: u64,
    pub mean_speed: f64,
    pub max_divergence: Option<f64>,
    pub storm_hits: u64,
    pub mean_storm_lat: Option<f64>,
    pub lgm_coverage: f64,
}

pub struct Session {
    pub cfg: ScenarioConfig,
    grid: GridSpec,
    block_size: [f64; 2],
    base: HeightField,
    land: Option<Nonameland>,
    heights: HeightField,
    obstacles: ObstacleField,
    solid: Vec<u8>,
    digest: String,
    coverage: f64,
    zone: Polygon,
    assets: IceAgeAssets,
    pub engine: EngineState,
    pub particles: ParticleSet,
    pub storms: StormSet,
    pub trail: TrailField,
    target: Option<Vec2>,
    o_marker: Option<Vec2>,
    depth: Option<DepthFeed>,
    step: u64,
    hits: u64,
    exit_lats: Vec<f64>,
    last_divergence: Option<f64>,
    events: Vec<LoggedEvent>,
}

impl Session {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, SessionError> {
        let grid = cfg.grid;
        let dims = grid.dims();
        let mut events = Vec::new();
        let (base, depth, block_size) = match (&cfg.layout, &cfg.depth) {
            (_, Some(src)) => {
                let feed = DepthFeed::open(&cfg, src)?;
                (feed.load(0)?, Some(feed), LayoutConfig::default().block_size)
            }
            (layout, None) => {
                let layout = layout.clone().unwrap_or_default();
                let blocks = layout_blocks(&layout, cfg.seed, dims);
                let (h, diags) = rasterize_entries(&blocks, layout.block_size, dims, &cfg.terrain.heights);
                events.extend(diags.into_iter().map(|event| LoggedEvent { frame: 0, event }));
                (h, None, layout.block_size)
            }
        };
        let obstacles = ObstacleField::empty(dims.0, dims.1);
        let engine = match cfg.engine {
            Engine::Cfd => EngineState::Cfd(Simulator::new(grid, cfg.sim, obstacles.clone())?),
            Engine::Repulse => {
                cfg.repulse.validate()?;
                EngineState::Repulse(RepulseEngine::new(
                    HeightField::zeros(dims.0, dims.1),
                    cfg.repulse,
                    cfg.sim.dt,
                ))
            }
        };
        let policy = SeedingPolicy {
            seed: cfg.seed,
            ..cfg.seeding
        };
        let assets = IceAgeAssets::builtin();
        let zone = assets.zone_on(&grid);
        let mut s = Self {
            grid,
            block_size,
            heights: base.clone(),
            base,
            land: None,
            solid: Vec::new(),
            digest: String::new(),
            coverage: 0.0,
            zone,
            assets,
            engine,
            particles: ParticleSet::seed(&policy, &obstacles).0,
            storms: StormSet::new(&policy, &obstacles),
            trail: TrailField::new(dims.0, dims.1),
            obstacles,
            target: None,
            o_marker: None,
            depth,
            step: 0,
            hits: 0,
            exit_lats: Vec::new(),
            last_divergence: None,
            events,
            cfg,
        };
        s.apply_mode()?;
        s.rebuild_terrain();
        // Seed tracers against the real obstacles so none start in a wall.
        let (particles, diags) = ParticleSet::seed(&policy, &s.obstacles);
        s.particles = particles;
        s.storms = StormSet::new(&policy, &s.obstacles);
        s.events
            .extend(diags.into_iter().map(|event| LoggedEvent { frame: 0, event }));
        Ok(s)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn obstacles(&self) -> &ObstacleField {
        &self.obstacles
    }

    pub fn heights(&self) -> &HeightField {
        &self.heights
    }

    pub fn target(&self) -> Option<Vec2> {
        self.target
    }

    pub fn nonameland(&self) -> Option<&Nonameland> {
        self.land.as_ref()
    }

    pub fn obstacle_digest(&self) -> &str {
        &self.digest
    }

    pub fn storm_hits(&self) -> u64 {
        self.hits
    }

    pub fn exit_latitudes(&self) -> &[f64] {
        &self.exit_lats
    }

    pub fn lgm_coverage(&self) -> f64 {
        self.coverage
    }

    pub fn take_events(&mut self) -> Vec<LoggedEvent> {
        std::mem::take(&mut self.events)
    }

    fn mode_config(&self) -> Option<&ModeConfig> {
        self.cfg.mode.as_ref()
    }

    /// Regenerates Nonameland and the markers for the current mode.
    fn apply_mode(&mut self) -> Result<(), ModeError> {
        let seed = self.cfg.mode_seed();
        let dims = self.grid.dims();
        self.land = None;
        self.o_marker = None;
        match self.mode_config().map(|m| m.mode) {
            Some(Mode::MovingMountains) => {
                let low = self.cfg.terrain.heights.low;
                let (land, diags) = generate_nonameland(seed, &ShapeLibrary::builtin(), dims, low)?;
                let frame = self.step;
                self.events
                    .extend(diags.into_iter().map(|event| LoggedEvent { frame, event }));
                self.land = Some(land);
            }
            Some(Mode::IceAge) => self.o_marker = Some(self.assets.o_marker_on(&self.grid)),
            None => {}
        }
        Ok(())
    }

    fn place_target(&mut self) {
        let Some(m) = self.mode_config() else {
            self.target = None;
            return;
        };
        self.target = Some(match (m.x_target, m.mode) {
            (Some([x, y]), _) => Vec2::new(x, y),
            (None, Mode::IceAge) => self.assets.x_target_on(&self.grid),
            (None, Mode::MovingMountains) => place_target(self.cfg.mode_seed(), &self.grid, Some(&self.obstacles)),
        });
    }

    /// Recomputes everything downstream of the table heights.
    fn rebuild_terrain(&mut self) {
        let mut heights = self.base.clone();
        if let Some(land) = &self.land {
            heights.max_with(&land.overlay);
        }
        let t = &self.cfg.terrain.thresholds;
        let obstacles = obstacles_from_height(&heights, t, self.cfg.sim.drag_low);
        self.coverage = lgm_coverage(&heights, &self.zone, t);
        let (nx, ny) = obstacles.dims();
        self.solid = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, j)| u8::from(obstacles.is_solid(i, j)))
            .collect();
        self.digest = obstacle_digest(&self.solid);
        match &mut self.engine {
            EngineState::Cfd(sim) => sim.set_obstacles(obstacles.clone()),
            EngineState::Repulse(r) => r.heights = heights.clone(),
        }
        self.particles.set_obstacles(&obstacles);
        self.storms.set_obstacles(&obstacles);
        self.heights = heights;
        self.obstacles = obstacles;
        self.place_target();
    }

    /// Replaces the table contents with `blocks`. Detaches any depth feed.
    pub fn set_layout(&mut self, blocks: &[BlockEntry]) {
        let (h, diags) = rasterize_entries(blocks, self.block_size, self.grid.dims(), &self.cfg.terrain.heights);
        let frame = self.step;
        self.events
            .extend(diags.into_iter().map(|event| LoggedEvent { frame, event }));
        self.depth = None;
        self.base = h;
        self.rebuild_terrain();
    }

    /// Switches mode, keeping the blocks on the table. Storm tallies restart.
    pub fn set_mode(&mut self, mode: Mode, seed: Option<u64>) -> Result<(), ModeError> {
        let mut m = self.cfg.mode.clone().unwrap_or_default();
        if m.mode != mode {
            m.x_target = None;
        }
        m.mode = mode;
        m.seed = seed.or(m.seed);
        self.cfg.mode = Some(m);
        self.apply_mode()?;
        self.rebuild_terrain();
        self.hits = 0;
        self.exit_lats.clear();
        Ok(())
    }

    /// Advances one frame: terrain, engine, tracers, storms, trail.
    pub fn step(&mut self) -> Result<(), SessionError> {
        let frame = self.step;
        if let Some(feed) = &mut self.depth {
            if let Some(h) = feed.advance(frame)? {
                self.base = h;
                self.rebuild_terrain();
            }
        }
        let dt = self.cfg.sim.dt;
        let radius = self.mode_config().map_or(0.0, |m| m.hit_radius);
        let (obs, grid, target) = (&self.obstacles, &self.grid, self.target);
        let storm_events = match &mut self.engine {
            EngineState::Cfd(sim) => {
                let report = sim.step();
                if report.reset {
                    self.events.push(LoggedEvent {
                        frame,
                        event: Diagnostic::FlowReset { step: report.step },
                    });
                }
                self.last_divergence = Some(report.max_divergence);
                let mover = FieldMover { sampler: &*sim, dt };
                self.particles.advect(&mover, obs, dt);
                self.storms.step(frame, &mover, obs, grid, dt, target, radius)
            }
            EngineState::Repulse(r) => {
                self.particles.advect(&*r, obs, dt);
                self.storms.step(frame, &*r, obs, grid, dt, target, radius)
            }
        };
        for e in storm_events {
            match e {
                Diagnostic::StormHit { .. } => self.hits += 1,
                Diagnostic::StormExit { lat, .. } => self.exit_lats.push(lat),
                _ => {}
            }
            self.events.push(LoggedEvent { frame, event: e });
        }
        self.trail.deposit_and_fade(self.particles.positions(), DEFAULT_FADE);
        self.step += 1;
        Ok(())
    }

    /// Mean wind speed in m/s: the flow field for the CFD engine, the
    /// tracers themselves for the repulse engine.
    pub fn mean_speed(&self) -> f64 {
        match &self.engine {
            EngineState::Cfd(sim) => sim.state.mean_speed(&self.obstacles),
            EngineState::Repulse(_) => {
                if self.particles.is_empty() {
                    return 0.0;
                }
                let scale = self.cfg.sim.velocity_scale;
                let sum: f64 = self.particles.particles.iter().map(|p| p.vel.length() / scale).sum();
                sum / self.particles.len() as f64
            }
        }
    }

    pub fn mean_exit_latitude(&self) -> Option<f64> {
        (!self.exit_lats.is_empty()).then(|| self.exit_lats.iter().sum::<f64>() / self.exit_lats.len() as f64)
    }

    pub fn metrics(&self) -> MetricsRow {
        MetricsRow {
            step: self.step,
            mean_speed: self.mean_speed(),
            max_divergence: self.last_divergence,
            storm_hits: self.hits,
            mean_storm_lat: self.mean_exit_latitude(),
            lgm_coverage: self.coverage,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let m = self.metrics();
        Snapshot {
            t: "frame".into(),
            step: self.step,
            nx: self.grid.nx,
            ny: self.grid.ny,
            particles: self.particles.positions().map(|p| [p.x as f32, p.y as f32]).collect(),
            storms: self
                .storms
                .storms
                .iter()
                .map(|s| (s.pos.x as f32, s.pos.y as f32, s.hit))
                .collect(),
            trail_b64: encode_bytes(&self.trail.to_bytes()),
            solid_b64: encode_bytes(&self.solid),
            targets: Targets {
                x: self.target.map(|p| [p.x, p.y]),
                o: self.o_marker.map(|p| [p.x, p.y]),
                hit_radius: self.mode_config().map_or(0.0, |m| m.hit_radius),
            },
            outline: self
                .land
                .as_ref()
                .map(|l| l.outline.vertices.iter().map(|v| [v.x, v.y]).collect()),
            metrics: FrameMetrics {
                mean_speed: m.mean_speed,
                max_divergence: m.max_divergence,
                storm_hits: m.storm_hits,
                mean_storm_lat: m.mean_storm_lat,
                lgm_coverage: m.lgm_coverage,
                obstacle_digest: self.digest.clone(),
            },
        }
    }
}
