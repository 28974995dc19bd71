//! Domain and obstacle boundary conditions.
//!
//! West edge: relaxed inflow. East edge: zero-gradient outflow, shifted so
//! each connected fluid region passes exactly the flux it receives; the
//! pressure problem is then pure Neumann, which lets the pressure hold a
//! geostrophic gradient along the open edge. North and south: free-slip
//! walls. Faces touching a solid cell carry no normal flow.

use super::{FlowState, GridSpec, SimParams};
use crate::terrain::ObstacleField;

/// Smooth bump in `[0, 1]` centered in the northern third of the domain,
/// peaking at exactly 1 on its center line.
pub fn jet_profile(y: f64, grid: &GridSpec) -> f64 {
    let ny = grid.ny as f64;
    let center = ny * 5.0 / 6.0;
    let half_width = ny / 6.0;
    let t = (y - center) / half_width;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (0.5 * std::f64::consts::PI * t).cos().powi(2)
    }
}

/// West-edge target zonal speed (m/s) at row coordinate `y`.
pub fn inflow_target(y: f64, grid: &GridSpec, p: &SimParams) -> f64 {
    p.inflow_speed * (1.0 + p.jet_boost * jet_profile(y, grid))
}

/// Relaxes the west column toward the inflow profile and applies the east
/// and wall conditions. Obstacles are not consulted here.
pub fn apply_inflow(state: &mut FlowState, grid: &GridSpec, p: &SimParams) {
    let (nx, ny) = (grid.nx, grid.ny);
    let rate = (p.inflow_relax * p.dt).clamp(0.0, 1.0);
    for j in 0..ny {
        let target = inflow_target(j as f64 + 0.5, grid, p);
        let u = state.u.get(0, j);
        state.u.set(0, j, u + rate * (target - u));
        // Zero-gradient outflow.
        state.u.set(nx, j, state.u.get(nx - 1, j));
    }
    for j in 1..ny {
        let v = state.v.get(0, j);
        state.v.set(0, j, v - rate * v);
    }
    for i in 0..nx {
        state.v.set(i, 0, 0.0);
        state.v.set(i, ny, 0.0);
    }
}

/// Cell and face classification derived from an obstacle field.
#[derive(Clone, Debug)]
pub struct Topology {
    pub nx: usize,
    pub ny: usize,
    pub solid: Vec<bool>,
    /// Connected-component label of each fluid cell (`u32::MAX` for solids).
    pub component: Vec<u32>,
    /// Components that reach the east outflow edge.
    pub component_vented: Vec<bool>,
    /// u faces solved for by advection and projection. Domain-edge faces are
    /// never free: the west edge is prescribed inflow, the east edge a
    /// mass-balanced zero-gradient outflow.
    pub free_u: Vec<bool>,
    pub free_v: Vec<bool>,
    /// Per-cell drag (1/model-s) averaged onto faces.
    pub drag_u: Vec<f64>,
    pub drag_v: Vec<f64>,
    pub any_drag: bool,
}

impl Topology {
    pub fn new(obs: &ObstacleField) -> Self {
        let (nx, ny) = obs.dims();
        let solid: Vec<bool> = (0..nx * ny).map(|k| obs.is_solid(k % nx, k / nx)).collect();
        let is_solid = |i: usize, j: usize| solid[j * nx + i];

        let mut free_u = vec![false; (nx + 1) * ny];
        for j in 0..ny {
            for i in 1..nx {
                free_u[j * (nx + 1) + i] = !is_solid(i - 1, j) && !is_solid(i, j);
            }
        }
        let mut free_v = vec![false; nx * (ny + 1)];
        for j in 1..ny {
            for i in 0..nx {
                free_v[j * nx + i] = !is_solid(i, j - 1) && !is_solid(i, j);
            }
        }

        // Label connected fluid regions through open faces.
        let mut component = vec![u32::MAX; nx * ny];
        let mut component_vented = Vec::new();
        let mut stack = Vec::new();
        for seed in 0..nx * ny {
            if solid[seed] || component[seed] != u32::MAX {
                continue;
            }
            let label = component_vented.len() as u32;
            let mut vented = false;
            component[seed] = label;
            stack.push(seed);
            while let Some(c) = stack.pop() {
                let (i, j) = (c % nx, c / nx);
                vented |= i == nx - 1;
                let mut visit = |n: usize, open: bool| {
                    if open && component[n] == u32::MAX {
                        component[n] = label;
                        stack.push(n);
                    }
                };
                if i > 0 {
                    visit(c - 1, free_u[j * (nx + 1) + i]);
                }
                if i + 1 < nx {
                    visit(c + 1, free_u[j * (nx + 1) + i + 1]);
                }
                if j > 0 {
                    visit(c - nx, free_v[j * nx + i]);
                }
                if j + 1 < ny {
                    visit(c + nx, free_v[(j + 1) * nx + i]);
                }
            }
            component_vented.push(vented);
        }

        let drag = obs.drag.as_slice();
        let mut drag_u = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                let l = drag[j * nx + i.saturating_sub(1)];
                let r = drag[j * nx + i.min(nx - 1)];
                drag_u[j * (nx + 1) + i] = 0.5 * (l + r);
            }
        }
        let mut drag_v = vec![0.0; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                let b = drag[j.saturating_sub(1) * nx + i];
                let t = drag[j.min(ny - 1) * nx + i];
                drag_v[j * nx + i] = 0.5 * (b + t);
            }
        }
        let any_drag = drag.iter().any(|&d| d > 0.0);

        Self {
            nx,
            ny,
            solid,
            component,
            component_vented,
            free_u,
            free_v,
            drag_u,
            drag_v,
            any_drag,
        }
    }

    #[inline]
    pub fn is_solid(&self, i: usize, j: usize) -> bool {
        self.solid[j * self.nx + i]
    }

    /// Fluid cell with a fluid path to the east outflow.
    pub fn is_vented(&self, i: usize, j: usize) -> bool {
        let label = self.component[j * self.nx + i];
        label != u32::MAX && self.component_vented[label as usize]
    }

    /// Zeroes every blocked face and the inflow of sealed pockets, then
    /// rebalances the east outflow of each region against its inflow.
    pub fn enforce(&self, state: &mut FlowState) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 0..ny {
            for i in 0..=nx {
                let k = j * (nx + 1) + i;
                if self.free_u[k] {
                    continue;
                }
                let keep = match i {
                    0 => self.is_vented(0, j),
                    i if i == nx => !self.is_solid(nx - 1, j),
                    _ => false,
                };
                if !keep {
                    state.u.as_mut_slice()[k] = 0.0;
                }
            }
        }
        let v = state.v.as_mut_slice();
        for (k, free) in self.free_v.iter().enumerate() {
            if !free {
                v[k] = 0.0;
            }
        }
        self.balance_outflow(state);
    }

    /// Shifts the east-edge faces of each region uniformly so the region's
    /// net boundary flux is zero.
    pub fn balance_outflow(&self, state: &mut FlowState) {
        let (nx, ny) = (self.nx, self.ny);
        let n = self.component_vented.len();
        let mut net = vec![0.0; n];
        let mut east_faces = vec![0usize; n];
        for j in 0..ny {
            let west = self.component[j * nx];
            if west != u32::MAX {
                net[west as usize] += state.u.get(0, j);
            }
            let east = self.component[j * nx + nx - 1];
            if east != u32::MAX {
                net[east as usize] -= state.u.get(nx, j);
                east_faces[east as usize] += 1;
            }
        }
        for j in 0..ny {
            let east = self.component[j * nx + nx - 1];
            if east == u32::MAX {
                continue;
            }
            let c = east as usize;
            let u = state.u.get(nx, j);
            state.u.set(nx, j, u + net[c] / east_faces[c] as f64);
        }
    }

    /// Copies the last interior column onto the east edge (zero gradient).
    pub fn extrapolate_outflow(&self, state: &mut FlowState) {
        let nx = self.nx;
        for j in 0..self.ny {
            if !self.is_solid(nx - 1, j) {
                let u = state.u.get(nx - 1, j);
                state.u.set(nx, j, u);
            }
        }
    }

    /// `u <- u * max(0, 1 - drag dt)` on faces next to porous cells.
    pub fn apply_drag(&self, state: &mut FlowState, dt: f64) {
        if !self.any_drag {
            return;
        }
        for (u, d) in state.u.as_mut_slice().iter_mut().zip(&self.drag_u) {
            *u *= (1.0 - d * dt).max(0.0);
        }
        for (v, d) in state.v.as_mut_slice().iter_mut().zip(&self.drag_v) {
            *v *= (1.0 - d * dt).max(0.0);
        }
    }
}
