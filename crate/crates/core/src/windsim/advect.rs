//! Semi-Lagrangian self-advection of the face velocities, with a
//! MacCormack correction limited to the local extrema of the upwind
//! stencil.

use super::FlowState;
use crate::field::Field2;

pub(crate) const U_OFFSET: (f64, f64) = (0.0, 0.5);
pub(crate) const V_OFFSET: (f64, f64) = (0.5, 0.0);

/// Bilinear sample plus the min and max of the four contributing samples.
fn sample_with_range(f: &Field2, x: f64, y: f64, off: (f64, f64)) -> (f64, f64, f64) {
    let (nx, ny) = f.dims();
    let fx = (x - off.0).clamp(0.0, (nx - 1) as f64);
    let fy = (y - off.1).clamp(0.0, (ny - 1) as f64);
    let i0 = (fx as usize).min(nx.saturating_sub(2));
    let j0 = (fy as usize).min(ny.saturating_sub(2));
    let i1 = (i0 + 1).min(nx - 1);
    let j1 = (j0 + 1).min(ny - 1);
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let a = f.get(i0, j0);
    let b = f.get(i1, j0);
    let c = f.get(i0, j1);
    let d = f.get(i1, j1);
    let val = (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + d * tx) * ty;
    (val, a.min(b).min(c.min(d)), a.max(b).max(c.max(d)))
}

#[inline]
pub(crate) fn velocity(u: &Field2, v: &Field2, x: f64, y: f64) -> (f64, f64) {
    (u.sample_bilinear(x, y, U_OFFSET), v.sample_bilinear(x, y, V_OFFSET))
}

/// Midpoint trace over `h` (cells per unit velocity) from `(x, y)`, where
/// the velocity is `(u0, v0)`; negative `h` traces backward. The end point
/// is clamped to the domain.
#[inline]
#[allow(clippy::too_many_arguments)]
fn trace(u: &Field2, v: &Field2, x: f64, y: f64, u0: f64, v0: f64, h: f64, w: f64, hgt: f64) -> (f64, f64) {
    let (mx, my) = (x + 0.5 * h * u0, y + 0.5 * h * v0);
    let (u1, v1) = velocity(u, v, mx, my);
    ((x + h * u1).clamp(0.0, w), (y + h * v1).clamp(0.0, hgt))
}

/// MacCormack update of one face component. `points` keeps, per free face,
/// the limiter range at the backward trace and the velocity at the face, so
/// the corrector pass does not sample them again.
#[allow(clippy::too_many_arguments)]
fn advect_component(
    f: &Field2,
    u: &Field2,
    v: &Field2,
    off: (f64, f64),
    free: &[bool],
    h: f64,
    hat: &mut Field2,
    points: &mut Vec<[f64; 4]>,
    out: &mut Field2,
) {
    let (fnx, fny) = f.dims();
    let (w, hgt) = (v.nx() as f64, u.ny() as f64);
    hat.clone_from(f);
    points.clear();
    for j in 0..fny {
        for i in 0..fnx {
            if !free[j * fnx + i] {
                continue;
            }
            let (px, py) = (i as f64 + off.0, j as f64 + off.1);
            let (u0, v0) = velocity(u, v, px, py);
            let (bx, by) = trace(u, v, px, py, u0, v0, -h, w, hgt);
            let (val, lo, hi) = sample_with_range(f, bx, by, off);
            points.push([lo, hi, u0, v0]);
            hat.set(i, j, val);
        }
    }
    out.clone_from(f);
    let mut k = 0;
    for j in 0..fny {
        for i in 0..fnx {
            if !free[j * fnx + i] {
                continue;
            }
            let (px, py) = (i as f64 + off.0, j as f64 + off.1);
            let [lo, hi, u0, v0] = points[k];
            k += 1;
            let (fx, fy) = trace(u, v, px, py, u0, v0, h, w, hgt);
            let back = hat.sample_bilinear(fx, fy, off);
            let pred = hat.get(i, j);
            let corrected = pred + 0.5 * (f.get(i, j) - back);
            out.set(
                i,
                j,
                if corrected < lo || corrected > hi {
                    pred
                } else {
                    corrected
                },
            );
        }
    }
}

/// Advects `state.u` and `state.v` through themselves over one step.
/// `h` is the displacement in cells per m/s of velocity. Only faces flagged
/// free are updated.
pub(crate) fn advect_velocity(
    state: &mut FlowState,
    h: f64,
    free_u: &[bool],
    free_v: &[bool],
    scratch: &mut AdvectScratch,
) {
    let AdvectScratch {
        hat,
        u_new,
        v_new,
        points,
    } = scratch;
    advect_component(&state.u, &state.u, &state.v, U_OFFSET, free_u, h, hat, points, u_new);
    advect_component(&state.v, &state.u, &state.v, V_OFFSET, free_v, h, hat, points, v_new);
    std::mem::swap(&mut state.u, u_new);
    std::mem::swap(&mut state.v, v_new);
}

/// Reusable buffers for [`advect_velocity`].
#[derive(Clone, Debug, Default)]
pub(crate) struct AdvectScratch {
    hat: Field2,
    u_new: Field2,
    v_new: Field2,
    points: Vec<[f64; 4]>,
}

/// Implicit viscous diffusion by Jacobi iteration on the free faces, with
/// zero-gradient values across the domain edge. `a` is the viscosity times
/// the step, in cells^2.
pub(crate) fn diffuse(field: &mut Field2, free: &[bool], a: f64, iterations: usize, scratch: &mut [Field2; 2]) {
    if a <= 0.0 {
        return;
    }
    let (nx, ny) = field.dims();
    let [source, next] = scratch;
    source.clone_from(field);
    next.clone_from(field);
    let denom = 1.0 / (1.0 + 4.0 * a);
    for _ in 0..iterations {
        let cur = field.as_slice();
        let out = next.as_mut_slice();
        let src = source.as_slice();
        for j in 0..ny {
            let row = j * nx;
            let down = if j > 0 { row - nx } else { row };
            let up = if j + 1 < ny { row + nx } else { row };
            for i in 0..nx {
                let k = row + i;
                if !free[k] {
                    continue;
                }
                let l = if i > 0 { k - 1 } else { k };
                let r = if i + 1 < nx { k + 1 } else { k };
                let sum = cur[l] + cur[r] + cur[down + i] + cur[up + i];
                out[k] = (src[k] + a * sum) * denom;
            }
        }
        std::mem::swap(field, next);
    }
}
