//! The prototype steering model: raised cells push self-propelled tracers
//! away, with force proportional to height. No pressure, no memory beyond a
//! low-pass on each tracer's velocity, and so no eddies.

use crate::geometry::Vec2;
use crate::particles::Mover;
use crate::terrain::HeightField;
use crate::windsim::ConfigError;
use serde::{Deserialize, Serialize};

/// Weight on the previous velocity in the per-step blend.
pub const INERTIA: f64 = 0.9;
pub const MIN_SPEED_FACTOR: f64 = 0.5;
pub const MAX_SPEED_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepulseParams {
    /// Eastward drift speed, cells per step.
    pub base_speed: f64,
    /// Force per millimetre of relief at zero distance, cells per step.
    pub force_gain: f64,
    /// Cells beyond this distance exert no force.
    pub falloff_radius: f64,
    /// Cap on the force magnitude, cells per step.
    pub max_force: f64,
}

impl Default for RepulseParams {
    fn default() -> Self {
        Self {
            base_speed: 0.25,
            force_gain: 2.0e-3,
            falloff_radius: 6.0,
            max_force: 0.75,
        }
    }
}

impl RepulseParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, reason: &str| {
            Err(ConfigError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.base_speed > 0.0) {
            return bad("base_speed", "must be > 0");
        }
        if !(self.falloff_radius >= 1.0) {
            return bad("falloff_radius", "must be >= 1");
        }
        if !(self.force_gain >= 0.0) {
            return bad("force_gain", "must be >= 0");
        }
        if !(self.max_force >= 0.0) {
            return bad("max_force", "must be >= 0");
        }
        Ok(())
    }
}

/// `(1 - d/R)^2` inside the radius, 0 outside.
pub fn kernel(d: f64, radius: f64) -> f64 {
    if d >= radius {
        0.0
    } else {
        let t = 1.0 - d / radius;
        t * t
    }
}

/// Sum of pushes from every raised cell centre within the falloff radius,
/// each along the unit vector from the cell to `pos`, clamped to
/// `max_force`. A cell centred exactly on `pos` has no direction and is
/// skipped.
pub fn repulsive_force_at(pos: Vec2, h: &HeightField, p: &RepulseParams) -> Vec2 {
    let (nx, ny) = h.dims();
    let r = p.falloff_radius;
    let i0 = (pos.x - r).floor().max(0.0) as usize;
    let j0 = (pos.y - r).floor().max(0.0) as usize;
    let i1 = ((pos.x + r).ceil().max(0.0) as usize).min(nx);
    let j1 = ((pos.y + r).ceil().max(0.0) as usize).min(ny);
    let mut f = Vec2::ZERO;
    for j in j0..j1 {
        for i in i0..i1 {
            let height = h.get(i, j);
            if height <= 0.0 {
                continue;
            }
            let delta = pos - Vec2::new(i as f64 + 0.5, j as f64 + 0.5);
            let d = delta.length();
            if d == 0.0 || d >= r {
                continue;
            }
            f = f + delta * (p.force_gain * height * kernel(d, r) / d);
        }
    }
    let m = f.length();
    if m > p.max_force {
        f = f * (p.max_force / m);
    }
    f
}

/// Clamps the speed into `[0.5, 2] * base`; a zero vector takes the drift
/// direction.
pub fn clamp_speed(v: Vec2, base: f64) -> Vec2 {
    let s = v.length();
    let (lo, hi) = (MIN_SPEED_FACTOR * base, MAX_SPEED_FACTOR * base);
    if s < 1e-12 {
        return Vec2::new(lo, 0.0);
    }
    let target = s.clamp(lo, hi);
    v * (target / s)
}

/// Per-step velocity update: blend toward drift plus force, then clamp.
/// Velocities here are in cells per step.
pub fn next_velocity(vel: Vec2, pos: Vec2, h: &HeightField, p: &RepulseParams) -> Vec2 {
    let push = Vec2::new(p.base_speed, 0.0) + repulsive_force_at(pos, h, p);
    clamp_speed(vel * INERTIA + push * (1.0 - INERTIA), p.base_speed)
}

/// The repulse engine as a tracer mover. `dt` converts between the
/// per-step velocities used here and the cells per model second stored on
/// tracers.
#[derive(Clone, Debug)]
pub struct RepulseEngine {
    pub heights: HeightField,
    pub params: RepulseParams,
    pub dt: f64,
}

impl RepulseEngine {
    pub fn new(heights: HeightField, params: RepulseParams, dt: f64) -> Self {
        Self { heights, params, dt }
    }

    /// One step of a single tracer; `vel` in cells per step.
    pub fn step(&self, pos: Vec2, vel: Vec2) -> (Vec2, Vec2) {
        let v = next_velocity(vel, pos, &self.heights, &self.params);
        (pos + v, v)
    }

    /// The velocity a tracer held at `pos` settles to, in cells per step.
    pub fn steady_velocity(&self, pos: Vec2) -> Vec2 {
        let push = Vec2::new(self.params.base_speed, 0.0) + repulsive_force_at(pos, &self.heights, &self.params);
        clamp_speed(push, self.params.base_speed)
    }
}

impl Mover for RepulseEngine {
    fn propose(&self, pos: Vec2, vel: &mut Vec2) -> Vec2 {
        let (next, v) = self.step(pos, *vel * self.dt);
        *vel = v * (1.0 / self.dt);
        next
    }
}

/// Signed turns of a path around `center`, truncated toward zero.
pub fn winding_number(path: &[Vec2], center: Vec2) -> i32 {
    let mut total = 0.0;
    for w in path.windows(2) {
        let a = w[0] - center;
        let b = w[1] - center;
        total += a.cross(b).atan2(a.dot(b));
    }
    (total / std::f64::consts::TAU).trunc() as i32
}
