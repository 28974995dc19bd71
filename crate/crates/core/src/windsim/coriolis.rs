//! Beta-plane Coriolis forcing.

use super::{FlowState, GridSpec, SimParams};
use crate::field::Field2;

/// Earth's rotation rate (rad/s).
pub const EARTH_OMEGA: f64 = 7.2921e-5;
/// Mean Earth radius (m).
pub const EARTH_RADIUS_M: f64 = 6.371e6;

/// `f = 2 Omega sin(lat)` at a latitude in degrees.
pub fn coriolis_at_latitude(lat_deg: f64) -> f64 {
    2.0 * EARTH_OMEGA * lat_deg.to_radians().sin()
}

/// `beta = 2 Omega cos(lat) / R` at a latitude in degrees.
pub fn beta_at_latitude(lat_deg: f64) -> f64 {
    2.0 * EARTH_OMEGA * lat_deg.to_radians().cos() / EARTH_RADIUS_M
}

/// Coriolis parameter (1/s) at continuous row coordinate `y`.
pub fn coriolis_parameter(y: f64, grid: &GridSpec, p: &SimParams) -> f64 {
    let y_m = y * grid.cell_m();
    let y_mid_m = 0.5 * grid.ny as f64 * grid.cell_m();
    (p.f0 + p.beta * (y_m - y_mid_m)) * p.coriolis_strength
}

/// Coriolis acceleration `-f z x u` in m/s^2.
pub fn coriolis_accel(u: f64, v: f64, y: f64, grid: &GridSpec, p: &SimParams) -> (f64, f64) {
    let f = coriolis_parameter(y, grid, p);
    (f * v, -f * u)
}

/// Writes `-f z x u dt` for every free face into `du`, `dv` (zero on other
/// faces), with the cross component averaged from the four nearest faces.
/// For uniform `f` and a discretely solenoidal field this is exactly the
/// gradient of the cell-averaged streamfunction, so the projection removes
/// it and only the beta part turns the flow. Forward Euler on purpose: an
/// exact rotation would scale the vortical part by `cos(f dt)`.
pub(crate) fn increment(
    state: &FlowState,
    grid: &GridSpec,
    p: &SimParams,
    free_u: &[bool],
    free_v: &[bool],
    du: &mut Field2,
    dv: &mut Field2,
) {
    let (nx, ny) = (grid.nx, grid.ny);
    if du.dims() != state.u.dims() {
        *du = Field2::new(nx + 1, ny, 0.0);
    }
    if dv.dims() != state.v.dims() {
        *dv = Field2::new(nx, ny + 1, 0.0);
    }
    du.fill(0.0);
    dv.fill(0.0);
    if p.coriolis_strength == 0.0 || (p.f0 == 0.0 && p.beta == 0.0) {
        return;
    }
    let dt_s = p.dt * p.time_scale_s(grid);
    let (u0, v0) = (&state.u, &state.v);

    for j in 0..ny {
        let s = coriolis_parameter(j as f64 + 0.5, grid, p) * dt_s;
        for i in 0..=nx {
            if !free_u[j * (nx + 1) + i] {
                continue;
            }
            let il = i.saturating_sub(1);
            let ir = i.min(nx - 1);
            let vbar = 0.25 * (v0.get(il, j) + v0.get(ir, j) + v0.get(il, j + 1) + v0.get(ir, j + 1));
            du.set(i, j, vbar * s);
        }
    }
    for j in 0..=ny {
        let s = coriolis_parameter(j as f64, grid, p) * dt_s;
        for i in 0..nx {
            if !free_v[j * nx + i] {
                continue;
            }
            let jb = j.saturating_sub(1);
            let jt = j.min(ny - 1);
            let ubar = 0.25 * (u0.get(i, jb) + u0.get(i + 1, jb) + u0.get(i, jt) + u0.get(i + 1, jt));
            dv.set(i, j, -ubar * s);
        }
    }
}
