//! Incompressible 2D wind over the tabletop map.
//!
//! Operator-split stable-fluids scheme on a staggered grid: forces
//! (Coriolis, inflow, porous drag), implicit viscosity, semi-Lagrangian
//! self-advection, obstacle boundaries, pressure projection.
//!
//! Units: velocities are stored in m/s. Time advances in model seconds; one
//! model second moves a parcel `velocity_scale` cells per m/s of wind.

mod advect;
pub mod boundary;
pub mod coriolis;
mod multigrid;
pub mod projection;

pub use boundary::{apply_inflow, inflow_target, jet_profile, Topology};
pub use coriolis::{coriolis_accel, coriolis_parameter};
pub use projection::{max_divergence, PressureMethod, PressureSolver, ProjectionStats};

use crate::field::Field2;
use crate::geometry::Vec2;
use crate::terrain::ObstacleField;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Map grid: `nx` x `ny` square cells, latitude linear in `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub cell_km: f64,
    pub lat_south: f64,
    pub lat_north: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 192,
            ny: 108,
            cell_km: 35.0,
            lat_south: 28.0,
            lat_north: 62.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nx < 8 {
            return Err(invalid("nx", format!("must be >= 8 (got {})", self.nx)));
        }
        if self.ny < 8 {
            return Err(invalid("ny", format!("must be >= 8 (got {})", self.ny)));
        }
        if !(self.cell_km > 0.0) {
            return Err(invalid("cell_km", "must be > 0"));
        }
        if !(self.lat_south < self.lat_north) {
            return Err(invalid("lat_north", "must exceed lat_south"));
        }
        Ok(())
    }

    pub fn cell_m(&self) -> f64 {
        self.cell_km * 1000.0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn latitude_at(&self, y: f64) -> f64 {
        self.lat_south + (self.lat_north - self.lat_south) * y / self.ny as f64
    }

    pub fn y_at_latitude(&self, lat: f64) -> f64 {
        (lat - self.lat_south) / (self.lat_north - self.lat_south) * self.ny as f64
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.nx as f64 && p.y < self.ny as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Model seconds per frame.
    pub dt: f64,
    /// Base westerly speed at the west edge (m/s).
    pub inflow_speed: f64,
    /// Extra inflow fraction at the center of the northern jet.
    pub jet_boost: f64,
    /// Coriolis parameter at the domain mid-latitude (1/s).
    pub f0: f64,
    /// Meridional gradient of the Coriolis parameter (1/(s m)).
    pub beta: f64,
    /// Kinematic viscosity (m^2/s).
    pub viscosity: f64,
    /// Drag rate over low mountains (1/model-s).
    pub drag_low: f64,
    /// Upper bound on pressure iterations per step.
    pub projection_iters: usize,
    pub pressure_method: PressureMethod,
    /// Multiplier on `f0` and `beta`.
    pub coriolis_strength: f64,
    /// Cells per model second per m/s.
    pub velocity_scale: f64,
    /// West-edge relaxation rate toward the inflow profile (1/model-s).
    pub inflow_relax: f64,
    /// Projection stops once max |div| falls below this fraction of
    /// `inflow_speed` per cell.
    pub projection_tol: f64,
    /// Over-relaxation factor for the SOR pressure method.
    pub sor_omega: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.25,
            inflow_speed: 10.0,
            jet_boost: 0.6,
            f0: coriolis::coriolis_at_latitude(45.0),
            beta: coriolis::beta_at_latitude(45.0),
            viscosity: 6.0e4,
            drag_low: 0.8,
            projection_iters: 600,
            pressure_method: PressureMethod::Pcg,
            coriolis_strength: 1.0,
            velocity_scale: 0.1,
            inflow_relax: 2.0,
            projection_tol: 2.5e-4,
            sor_omega: 1.9,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be > 0"));
        }
        if self.projection_iters < 1 {
            return Err(invalid("projection_iters", "must be >= 1"));
        }
        if !(self.viscosity >= 0.0) {
            return Err(invalid("viscosity", "must be >= 0"));
        }
        if !(self.inflow_speed > 0.0) {
            return Err(invalid("inflow_speed", "must be > 0"));
        }
        if !(self.jet_boost >= 0.0) {
            return Err(invalid("jet_boost", "must be >= 0"));
        }
        if !(self.drag_low >= 0.0) {
            return Err(invalid("drag_low", "must be >= 0"));
        }
        if !(self.velocity_scale > 0.0) {
            return Err(invalid("velocity_scale", "must be > 0"));
        }
        if !(self.inflow_relax >= 0.0) {
            return Err(invalid("inflow_relax", "must be >= 0"));
        }
        if !(self.projection_tol > 0.0) {
            return Err(invalid("projection_tol", "must be > 0"));
        }
        if !(self.sor_omega > 0.0 && self.sor_omega < 2.0) {
            return Err(invalid("sor_omega", "must lie in (0, 2)"));
        }
        for (name, v) in [
            ("f0", self.f0),
            ("beta", self.beta),
            ("coriolis_strength", self.coriolis_strength),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Physical seconds per model second.
    pub fn time_scale_s(&self, grid: &GridSpec) -> f64 {
        grid.cell_m() * self.velocity_scale
    }

    /// Displacement in cells per m/s of wind over one step.
    pub fn cells_per_mps_step(&self) -> f64 {
        self.velocity_scale * self.dt
    }
}

/// Staggered velocity field: `u` on the `(nx+1) x ny` vertical faces, `v` on
/// the `nx x (ny+1)` horizontal faces, pressure at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub u: Field2,
    pub v: Field2,
    pub pressure: Field2,
    pub step: u64,
}

impl FlowState {
    pub fn at_rest(grid: &GridSpec) -> Self {
        Self {
            u: Field2::new(grid.nx + 1, grid.ny, 0.0),
            v: Field2::new(grid.nx, grid.ny + 1, 0.0),
            pressure: Field2::new(grid.nx, grid.ny, 0.0),
            step: 0,
        }
    }

    /// Every column carries the west-edge inflow profile; no meridional flow.
    pub fn inflow_equilibrium(grid: &GridSpec, p: &SimParams) -> Self {
        let mut s = Self::at_rest(grid);
        for j in 0..grid.ny {
            let target = inflow_target(j as f64 + 0.5, grid, p);
            for i in 0..=grid.nx {
                s.u.set(i, j, target);
            }
        }
        s
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.v.nx(), self.u.ny())
    }

    pub fn is_finite(&self) -> bool {
        self.u.all_finite() && self.v.all_finite() && self.pressure.all_finite()
    }

    /// Bilinear velocity (m/s) at a continuous map position, clamped to the
    /// domain. Ignores obstacles; see [`FlowState::probe_masked`].
    pub fn probe(&self, x: f64, y: f64) -> (f64, f64) {
        let (nx, ny) = self.dims();
        let x = x.clamp(0.0, nx as f64);
        let y = y.clamp(0.0, ny as f64);
        advect::velocity(&self.u, &self.v, x, y)
    }

    /// Like [`FlowState::probe`], but zero inside solid cells.
    pub fn probe_masked(&self, obs: &ObstacleField, x: f64, y: f64) -> (f64, f64) {
        let (nx, ny) = self.dims();
        let cx = x.clamp(0.0, nx as f64 - 1e-9);
        let cy = y.clamp(0.0, ny as f64 - 1e-9);
        if obs.is_solid(cx as usize, cy as usize) {
            return (0.0, 0.0);
        }
        self.probe(x, y)
    }

    /// Face-averaged velocity at the center of cell `(i, j)`.
    pub fn cell_velocity(&self, i: usize, j: usize) -> (f64, f64) {
        (
            0.5 * (self.u.get(i, j) + self.u.get(i + 1, j)),
            0.5 * (self.v.get(i, j) + self.v.get(i, j + 1)),
        )
    }

    pub fn max_speed(&self) -> f64 {
        let (nx, ny) = self.dims();
        let mut m: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let (u, v) = self.cell_velocity(i, j);
                m = m.max(u.hypot(v));
            }
        }
        m
    }

    /// Mean cell-center speed over fluid cells (m/s).
    pub fn mean_speed(&self, obs: &ObstacleField) -> f64 {
        let (nx, ny) = self.dims();
        let (mut sum, mut n) = (0.0, 0usize);
        for j in 0..ny {
            for i in 0..nx {
                if obs.is_solid(i, j) {
                    continue;
                }
                let (u, v) = self.cell_velocity(i, j);
                sum += u.hypot(v);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Step counter after this step.
    pub step: u64,
    /// Max |div u| over fluid cells after the step (m/s per cell).
    pub max_divergence: f64,
    pub projection: ProjectionStats,
    /// The state went non-finite and was reset to inflow equilibrium.
    pub reset: bool,
}

const DIFFUSION_ITERS: usize = 4;

/// Owns a flow state plus the scratch and topology caches needed to step it.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub grid: GridSpec,
    pub params: SimParams,
    pub state: FlowState,
    obstacles: ObstacleField,
    topo: Topology,
    solver: PressureSolver,
    scratch: [Field2; 2],
    coriolis: [Field2; 2],
    coriolis_prev: [Field2; 2],
    coriolis_primed: bool,
    advect_scratch: advect::AdvectScratch,
}

impl Simulator {
    pub fn new(grid: GridSpec, params: SimParams, obstacles: ObstacleField) -> Result<Self, ConfigError> {
        grid.validate()?;
        params.validate()?;
        if obstacles.dims() != grid.dims() {
            return Err(invalid("obstacles", "dimensions differ from the grid"));
        }
        let topo = Topology::new(&obstacles);
        let solver = PressureSolver::new(&topo);
        let mut sim = Self {
            grid,
            params,
            state: FlowState::inflow_equilibrium(&grid, &params),
            obstacles,
            topo,
            solver,
            scratch: Default::default(),
            coriolis: Default::default(),
            coriolis_prev: Default::default(),
            coriolis_primed: false,
            advect_scratch: Default::default(),
        };
        sim.settle();
        Ok(sim)
    }

    /// Resets to inflow equilibrium, made consistent with the obstacles.
    pub fn settle(&mut self) {
        self.coriolis_primed = false;
        self.state = FlowState::inflow_equilibrium(&self.grid, &self.params);
        self.topo.enforce(&mut self.state);
        self.project();
    }

    pub fn obstacles(&self) -> &ObstacleField {
        &self.obstacles
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    /// Swaps in a new obstacle field. Velocities on newly blocked faces are
    /// zeroed and the field is re-projected.
    pub fn set_obstacles(&mut self, obstacles: ObstacleField) {
        assert_eq!(obstacles.dims(), self.grid.dims(), "obstacle dims must match grid");
        if obstacles == self.obstacles {
            return;
        }
        self.obstacles = obstacles;
        self.topo = Topology::new(&self.obstacles);
        self.solver = PressureSolver::new(&self.topo);
        self.coriolis_primed = false;
        self.topo.enforce(&mut self.state);
        self.project();
    }

    fn project(&mut self) -> ProjectionStats {
        let tol = self.params.projection_tol * self.params.inflow_speed;
        let p = &self.params;
        self.solver
            .project(&mut self.state, p.pressure_method, p.projection_iters, tol, p.sor_omega)
    }

    /// Advances one frame.
    pub fn step(&mut self) -> StepReport {
        let p = self.params;
        let grid = self.grid;

        // Second-order Adams-Bashforth on the Coriolis term: forward Euler
        // grows rotational energy by (f dt)^2 per step, AB2 by (f dt)^4 / 4.
        let rotating = p.coriolis_strength != 0.0 && (p.f0 != 0.0 || p.beta != 0.0);
        let ab2 = rotating && self.coriolis_primed;
        if rotating {
            std::mem::swap(&mut self.coriolis, &mut self.coriolis_prev);
            let [du, dv] = &mut self.coriolis;
            coriolis::increment(&self.state, &grid, &p, &self.topo.free_u, &self.topo.free_v, du, dv);
            self.coriolis_primed = true;
        }
        apply_inflow(&mut self.state, &grid, &p);
        self.topo.apply_drag(&mut self.state, p.dt);

        let nu_cells = p.viscosity * p.velocity_scale / grid.cell_m();
        let a = nu_cells * p.dt;
        advect::diffuse(
            &mut self.state.u,
            &self.topo.free_u,
            a,
            DIFFUSION_ITERS,
            &mut self.scratch,
        );
        advect::diffuse(
            &mut self.state.v,
            &self.topo.free_v,
            a,
            DIFFUSION_ITERS,
            &mut self.scratch,
        );

        advect::advect_velocity(
            &mut self.state,
            p.cells_per_mps_step(),
            &self.topo.free_u,
            &self.topo.free_v,
            &mut self.advect_scratch,
        );

        // The Coriolis increment is evaluated on the projected field and
        // added just before the next projection. Advecting it first would
        // turn its gradient part into spurious vorticity.
        if rotating {
            let targets = [self.state.u.as_mut_slice(), self.state.v.as_mut_slice()];
            for (k, target) in targets.into_iter().enumerate() {
                let now = self.coriolis[k].as_slice();
                if ab2 {
                    let prev = self.coriolis_prev[k].as_slice();
                    for ((a, c), c0) in target.iter_mut().zip(now).zip(prev) {
                        *a += 1.5 * c - 0.5 * c0;
                    }
                } else {
                    for (a, c) in target.iter_mut().zip(now) {
                        *a += c;
                    }
                }
            }
        }
        self.topo.extrapolate_outflow(&mut self.state);
        self.topo.enforce(&mut self.state);
        let projection = self.project();
        self.topo.enforce(&mut self.state);
        self.state.step += 1;

        let mut reset = false;
        if !self.state.is_finite() {
            let step = self.state.step;
            self.settle();
            self.state.step = step;
            reset = true;
        }
        StepReport {
            step: self.state.step,
            max_divergence: max_divergence(&self.state, &self.topo),
            projection,
            reset,
        }
    }

    /// Velocity in m/s at a map position; zero inside solid cells.
    pub fn probe(&self, x: f64, y: f64) -> (f64, f64) {
        self.state.probe_masked(&self.obstacles, x, y)
    }

    /// Velocity in cells per model second, for tracer integration.
    pub fn grid_velocity(&self, x: f64, y: f64) -> Vec2 {
        let (u, v) = self.probe(x, y);
        Vec2::new(u * self.params.velocity_scale, v * self.params.velocity_scale)
    }
}

/// One-shot step from a state, for callers that do not keep a
/// [`Simulator`]. Rebuilds the obstacle topology on every call.
pub fn step(
    state: &FlowState,
    obs: &ObstacleField,
    grid: &GridSpec,
    params: &SimParams,
) -> Result<(FlowState, StepReport), ConfigError> {
    let mut sim = Simulator::new(*grid, *params, obs.clone())?;
    sim.state = state.clone();
    let report = sim.step();
    Ok((sim.state, report))
}
