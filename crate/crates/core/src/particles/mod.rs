//! Passive wind tracers, storm icons and the fading trail they leave.
//!
//! Positions are continuous map coordinates in cell units. Tracers never sit
//! inside a solid cell: moves that would end in one are pulled back along
//! the incoming segment, and tracers stranded by a layout change respawn.

mod storms;
mod trail;

pub use storms::{Storm, StormSet};
pub use trail::{TrailField, DEFAULT_DEPOSIT, DEFAULT_FADE};

use crate::events::Diagnostic;
use crate::geometry::Vec2;
use crate::terrain::ObstacleField;
use crate::windsim::{ConfigError, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Consecutive slow steps before a tracer is recycled.
pub const STAGNATION_STEPS: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedingPolicy {
    pub n_particles: usize,
    /// Share of (re)spawns placed on the west edge; the rest land anywhere.
    pub west_fraction: f64,
    pub n_storms: usize,
    pub storm_spawn_period: u64,
    /// Steps before a tracer is recycled regardless of position.
    pub max_age: u32,
    /// Below this speed (cells per model second) a step counts as stagnant.
    pub stagnation_speed: f64,
    pub seed: u64,
}

impl Default for SeedingPolicy {
    fn default() -> Self {
        Self {
            n_particles: 5000,
            west_fraction: 0.7,
            n_storms: 6,
            storm_spawn_period: 40,
            max_age: 1500,
            stagnation_speed: 0.02,
            seed: 0,
        }
    }
}

impl SeedingPolicy {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, reason: &str| {
            Err(ConfigError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if !(0.0..=1.0).contains(&self.west_fraction) {
            return bad("west_fraction", "must lie in [0, 1]");
        }
        if self.storm_spawn_period == 0 {
            return bad("storm_spawn_period", "must be >= 1");
        }
        if self.max_age == 0 {
            return bad("max_age", "must be >= 1");
        }
        if !(self.stagnation_speed >= 0.0) {
            return bad("stagnation_speed", "must be >= 0");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: u32,
    pub pos: Vec2,
    pub age: u32,
    /// Last velocity in cells per model second. The repulse engine carries
    /// its inertia here.
    pub vel: Vec2,
    pub slow_steps: u32,
}

impl Particle {
    fn spawn(id: u32, pos: Vec2) -> Self {
        Self {
            id,
            pos,
            age: 0,
            vel: Vec2::ZERO,
            slow_steps: 0,
        }
    }
}

/// Velocity in cells per model second at a map position.
pub trait FlowSampler {
    fn velocity(&self, p: Vec2) -> Vec2;
}

impl FlowSampler for Simulator {
    fn velocity(&self, p: Vec2) -> Vec2 {
        self.grid_velocity(p.x, p.y)
    }
}

impl<F: Fn(Vec2) -> Vec2> FlowSampler for F {
    fn velocity(&self, p: Vec2) -> Vec2 {
        self(p)
    }
}

/// Proposes where a tracer goes next. May update the tracer's velocity.
pub trait Mover {
    fn propose(&self, pos: Vec2, vel: &mut Vec2) -> Vec2;
}

/// Midpoint (RK2) integration through a velocity field.
pub struct FieldMover<'a, S: ?Sized> {
    pub sampler: &'a S,
    pub dt: f64,
}

impl<S: FlowSampler + ?Sized> Mover for FieldMover<'_, S> {
    fn propose(&self, pos: Vec2, vel: &mut Vec2) -> Vec2 {
        let v1 = self.sampler.velocity(pos);
        let mid = pos + v1 * (0.5 * self.dt);
        let v2 = self.sampler.velocity(mid);
        *vel = v2;
        pos + v2 * self.dt
    }
}

/// Cached spawn locations for one obstacle layout.
#[derive(Clone, Debug, Default)]
pub struct SpawnSites {
    nx: usize,
    ny: usize,
    fluid: Vec<(u32, u32)>,
    west_rows: Vec<u32>,
}

impl SpawnSites {
    pub fn new(obs: &ObstacleField) -> Self {
        let (nx, ny) = obs.dims();
        let mut fluid = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if !obs.is_solid(i, j) {
                    fluid.push((i as u32, j as u32));
                }
            }
        }
        let west_rows = (0..ny).filter(|&j| !obs.is_solid(0, j)).map(|j| j as u32).collect();
        Self {
            nx,
            ny,
            fluid,
            west_rows,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.fluid.is_empty()
    }

    pub fn fluid_cells(&self) -> &[(u32, u32)] {
        &self.fluid
    }

    /// Uniform point inside a uniformly chosen fluid cell.
    pub fn anywhere(&self, rng: &mut impl Rng) -> Option<Vec2> {
        if self.fluid.is_empty() {
            return None;
        }
        let (i, j) = self.fluid[rng.random_range(0..self.fluid.len())];
        Some(Vec2::new(
            i as f64 + rng.random::<f64>(),
            j as f64 + rng.random::<f64>(),
        ))
    }

    /// Uniform point in the west-edge column, restricted to rows in
    /// `[y0, y1)`. Falls back to any west row, then to anywhere.
    pub fn west(&self, rng: &mut impl Rng, y0: f64, y1: f64) -> Option<Vec2> {
        let band: Vec<u32> = self
            .west_rows
            .iter()
            .copied()
            .filter(|&j| (j as f64 + 0.5) >= y0 && (j as f64 + 0.5) < y1)
            .collect();
        let rows = if band.is_empty() { &self.west_rows } else { &band };
        if rows.is_empty() {
            return self.anywhere(rng);
        }
        let j = rows[rng.random_range(0..rows.len())];
        Some(Vec2::new(rng.random::<f64>(), j as f64 + rng.random::<f64>()))
    }

    fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

/// Why a tracer left the field this step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    East,
    West,
    Aged,
    Stagnant,
    Stranded,
}

/// Moves one tracer, keeping it out of solid cells and inside the north
/// and south walls. Returns `Some(exit)` when it has to respawn.
pub(crate) fn move_tracer(
    t: &mut Particle,
    mover: &impl Mover,
    obs: &ObstacleField,
    dt: f64,
    max_age: u32,
    stagnation_speed: f64,
) -> Option<Exit> {
    if obs.is_solid_at(t.pos.x, t.pos.y) {
        return Some(Exit::Stranded);
    }
    let (nx, ny) = obs.dims();
    let from = t.pos;
    let mut to = mover.propose(from, &mut t.vel);
    if !to.is_finite() {
        to = from;
    }
    to.y = to.y.clamp(0.0, ny as f64 - 1e-9);
    if to.x >= nx as f64 {
        return Some(Exit::East);
    }
    if to.x < 0.0 {
        return Some(Exit::West);
    }
    t.pos = clip_to_fluid(obs, from, to);
    t.age += 1;
    let speed = (t.pos - from).length() / dt;
    t.slow_steps = if speed < stagnation_speed { t.slow_steps + 1 } else { 0 };
    if t.age > max_age {
        Some(Exit::Aged)
    } else if t.slow_steps >= STAGNATION_STEPS {
        Some(Exit::Stagnant)
    } else {
        None
    }
}

/// Last fluid point on the segment `from -> to`, where `from` is fluid.
/// The segment is scanned in quarter-cell steps so thin walls cannot be
/// tunnelled through; the crossing is then refined by bisection.
pub fn clip_to_fluid(obs: &ObstacleField, from: Vec2, to: Vec2) -> Vec2 {
    let len = (to - from).length();
    let n = ((len / 0.25).ceil() as usize).max(1);
    let mut prev = from;
    for k in 1..=n {
        let p = from + (to - from) * (k as f64 / n as f64);
        if obs.is_solid_at(p.x, p.y) {
            let (mut lo, mut hi) = (prev, p);
            for _ in 0..40 {
                let mid = (lo + hi) * 0.5;
                if obs.is_solid_at(mid.x, mid.y) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return lo;
        }
        prev = p;
    }
    to
}

/// Respawn and recycling tallies for one advection pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdvectStats {
    pub exited: usize,
    pub aged: usize,
    pub stagnant: usize,
    pub stranded: usize,
}

/// Fixed-size tracer population with its own deterministic random stream.
#[derive(Clone, Debug)]
pub struct ParticleSet {
    pub particles: Vec<Particle>,
    policy: SeedingPolicy,
    sites: SpawnSites,
    rng: ChaCha8Rng,
}

impl ParticleSet {
    /// Seeds `round(west_fraction * n)` tracers on the west edge and the
    /// rest uniformly over fluid cells.
    pub fn seed(policy: &SeedingPolicy, obs: &ObstacleField) -> (Self, Vec<Diagnostic>) {
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        rng.set_stream(1);
        let sites = SpawnSites::new(obs);
        let mut diagnostics = Vec::new();
        let mut particles = Vec::with_capacity(policy.n_particles);
        if sites.is_empty() {
            if policy.n_particles > 0 {
                diagnostics.push(Diagnostic::NoFluidCells);
            }
        } else {
            let n_west = (policy.west_fraction * policy.n_particles as f64).round() as usize;
            let ny = sites.dims().1 as f64;
            for id in 0..policy.n_particles {
                let pos = if id < n_west {
                    sites.west(&mut rng, 0.0, ny)
                } else {
                    sites.anywhere(&mut rng)
                };
                particles.push(Particle::spawn(id as u32, pos.expect("fluid cells exist")));
            }
        }
        (
            Self {
                particles,
                policy: *policy,
                sites,
                rng,
            },
            diagnostics,
        )
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.particles.iter().map(|p| p.pos)
    }

    /// Refreshes the spawn sites after a layout change. Tracers now inside
    /// solids respawn on the next advection.
    pub fn set_obstacles(&mut self, obs: &ObstacleField) {
        self.sites = SpawnSites::new(obs);
    }

    fn respawn_pos(&mut self) -> Option<Vec2> {
        let ny = self.sites.dims().1 as f64;
        if self.rng.random::<f64>() < self.policy.west_fraction {
            self.sites.west(&mut self.rng, 0.0, ny)
        } else {
            self.sites.anywhere(&mut self.rng)
        }
    }

    /// Advances every tracer one step of `dt` model seconds.
    pub fn advect(&mut self, mover: &impl Mover, obs: &ObstacleField, dt: f64) -> AdvectStats {
        let mut stats = AdvectStats::default();
        let (max_age, slow) = (self.policy.max_age, self.policy.stagnation_speed);
        for k in 0..self.particles.len() {
            let exit = move_tracer(&mut self.particles[k], mover, obs, dt, max_age, slow);
            let Some(exit) = exit else { continue };
            match exit {
                Exit::East | Exit::West => stats.exited += 1,
                Exit::Aged => stats.aged += 1,
                Exit::Stagnant => stats.stagnant += 1,
                Exit::Stranded => stats.stranded += 1,
            }
            let id = self.particles[k].id;
            if let Some(pos) = self.respawn_pos() {
                self.particles[k] = Particle::spawn(id, pos);
            }
        }
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_flow_advances_exactly() {
        let obs = ObstacleField::empty(32, 16);
        let policy = SeedingPolicy {
            n_particles: 50,
            west_fraction: 1.0,
            ..SeedingPolicy::default()
        };
        let (mut set, _) = ParticleSet::seed(&policy, &obs);
        let before: Vec<Vec2> = set.positions().collect();
        let field = |_: Vec2| Vec2::new(1.5, 0.0);
        set.advect(
            &FieldMover {
                sampler: &field,
                dt: 0.25,
            },
            &obs,
            0.25,
        );
        for (a, b) in before.iter().zip(set.positions()) {
            assert_eq!(b.x, a.x + 1.5 * 0.25);
            assert_eq!(b.y, a.y);
        }
    }

    #[test]
    fn west_fraction_one_stays_in_west_band() {
        let obs = ObstacleField::empty(40, 20);
        let policy = SeedingPolicy {
            n_particles: 500,
            west_fraction: 1.0,
            ..SeedingPolicy::default()
        };
        let (set, _) = ParticleSet::seed(&policy, &obs);
        assert!(set.positions().all(|p| p.x >= 0.0 && p.x < 1.0));
    }

    #[test]
    fn all_solid_gives_empty_set() {
        let obs = ObstacleField::empty(8, 8).with_solid_rect(0, 0, 8, 8);
        let (set, diags) = ParticleSet::seed(&SeedingPolicy::default(), &obs);
        assert!(set.is_empty());
        assert_eq!(diags, vec![Diagnostic::NoFluidCells]);
    }

    #[test]
    fn clip_stops_short_of_a_thin_wall() {
        let obs = ObstacleField::empty(20, 10).with_solid_rect(10, 0, 11, 10);
        let p = clip_to_fluid(&obs, Vec2::new(9.5, 5.0), Vec2::new(11.5, 5.0));
        assert!(p.x < 10.0 && p.x > 9.99, "{p:?}");
    }

    #[test]
    fn stagnant_tracers_recycle() {
        let obs = ObstacleField::empty(16, 8);
        let policy = SeedingPolicy {
            n_particles: 10,
            west_fraction: 0.0,
            ..SeedingPolicy::default()
        };
        let (mut set, _) = ParticleSet::seed(&policy, &obs);
        let still = |_: Vec2| Vec2::ZERO;
        let mover = FieldMover {
            sampler: &still,
            dt: 0.25,
        };
        let mut recycled = 0;
        for _ in 0..STAGNATION_STEPS {
            recycled += set.advect(&mover, &obs, 0.25).stagnant;
        }
        assert_eq!(recycled, 10);
        assert_eq!(set.len(), 10);
    }
}
