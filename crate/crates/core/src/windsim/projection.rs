//! Pressure projection on the staggered grid.
//!
//! For each fluid cell the solver enforces
//! `sum over open faces (p_nbr - p) = div(u*)`. Every domain-edge face has a
//! prescribed velocity (walls, inflow, balanced outflow) and so does every
//! face touching a solid, which makes the problem pure Neumann: pressure is
//! defined up to a constant per connected region, and the right-hand side is
//! compatible because each region's boundary flux nets to zero. Subtracting
//! the face pressure differences leaves a cell divergence equal to the
//! Poisson residual, so the residual bound is a divergence bound.
//!
//! Internally cells live in a buffer padded by one row above and below, so
//! the four neighbours of every cell are addressable and closed faces are
//! handled by zero coefficients instead of branches.

use super::boundary::Topology;
use super::multigrid::{Level, Multigrid};
use super::FlowState;
use serde::{Deserialize, Serialize};

/// Iterative method used for the pressure solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureMethod {
    /// Conjugate gradients preconditioned with a multigrid V-cycle.
    #[default]
    Pcg,
    /// Red-black successive over-relaxation.
    Sor,
}

/// Outcome of one projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionStats {
    /// Sweeps (SOR) or conjugate-gradient iterations performed.
    pub iterations: usize,
    /// Max residual over fluid cells when the solve stopped (m/s per cell).
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct PressureSolver {
    nx: usize,
    ny: usize,
    /// 1.0 where the west face of the cell is open.
    aw: Vec<f64>,
    /// 1.0 where the south face of the cell is open.
    as_: Vec<f64>,
    diag: Vec<f64>,
    inv_diag: Vec<f64>,
    mg: Multigrid,
    /// Component label per padded cell, `u32::MAX` outside the fluid.
    component: Vec<u32>,
    components: usize,
    rhs: Vec<f64>,
    p: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    q: Vec<f64>,
}

impl PressureSolver {
    pub fn new(topo: &Topology) -> Self {
        let (nx, ny) = (topo.nx, topo.ny);
        let len = nx * (ny + 2);
        let mut aw = vec![0.0; len];
        let mut as_ = vec![0.0; len];
        let mut component = vec![u32::MAX; len];
        for j in 0..ny {
            for i in 0..nx {
                let c = (j + 1) * nx + i;
                if topo.solid[j * nx + i] {
                    continue;
                }
                component[c] = topo.component[j * nx + i];
                if topo.free_u[j * (nx + 1) + i] {
                    aw[c] = 1.0;
                }
                if topo.free_v[j * nx + i] {
                    as_[c] = 1.0;
                }
            }
        }
        let mut diag = vec![0.0; len];
        let mut inv_diag = vec![0.0; len];
        for c in nx..nx * (ny + 1) {
            diag[c] = aw[c] + aw[c + 1] + as_[c] + as_[c + nx];
            if diag[c] > 0.0 {
                inv_diag[c] = 1.0 / diag[c];
            }
        }

        let mg = Multigrid::new(Level::new(nx, ny, aw.clone(), as_.clone()));
        Self {
            nx,
            ny,
            mg,
            aw,
            as_,
            diag,
            inv_diag,
            component,
            components: topo.component_vented.len(),
            rhs: vec![0.0; len],
            p: vec![0.0; len],
            r: vec![0.0; len],
            z: vec![0.0; len],
            s: vec![0.0; len],
            q: vec![0.0; len],
        }
    }

    #[inline(always)]
    fn neighbor_sum(&self, x: &[f64], c: usize) -> f64 {
        let nx = self.nx;
        self.aw[c] * x[c - 1] + self.aw[c + 1] * x[c + 1] + self.as_[c] * x[c - nx] + self.as_[c + nx] * x[c + nx]
    }

    fn interior(&self) -> std::ops::Range<usize> {
        self.nx..self.nx * (self.ny + 1)
    }

    /// `out = rhs - lap(p)` on fluid cells; returns the max magnitude.
    fn residual(&self, p: &[f64], out: &mut [f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in self.interior() {
            let lap = self.neighbor_sum(p, c) - self.diag[c] * p[c];
            out[c] = self.rhs[c] - lap;
            worst = worst.max(out[c].abs());
        }
        worst
    }

    /// Projects the divergence of `state` out of its free faces. The solve is
    /// warm-started from `state.pressure` and stops once the max residual is
    /// at most `tol` or after `max_iters` iterations.
    pub fn project(
        &mut self,
        state: &mut FlowState,
        method: PressureMethod,
        max_iters: usize,
        tol: f64,
        omega: f64,
    ) -> ProjectionStats {
        self.load(state);
        let stats = match method {
            PressureMethod::Pcg => self.solve_pcg(max_iters, tol),
            PressureMethod::Sor => self.solve_sor(max_iters, tol, omega),
        };
        self.store(state);
        stats
    }

    fn load(&mut self, state: &FlowState) {
        let (nx, ny) = (self.nx, self.ny);
        let (u, v) = (state.u.as_slice(), state.v.as_slice());
        let pressure = state.pressure.as_slice();
        let mut sum = vec![0.0; self.components];
        let mut count = vec![0usize; self.components];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let c = k + nx;
                if self.diag[c] == 0.0 {
                    self.rhs[c] = 0.0;
                    self.p[c] = 0.0;
                    continue;
                }
                let ku = j * (nx + 1) + i;
                let d = u[ku + 1] - u[ku] + v[k + nx] - v[k];
                self.rhs[c] = d;
                self.p[c] = pressure[k];
                let label = self.component[c] as usize;
                sum[label] += d;
                count[label] += 1;
            }
        }
        // Strip the rounding-level incompatible part so the singular system
        // stays solvable.
        for c in self.interior() {
            if self.diag[c] != 0.0 {
                let l = self.component[c] as usize;
                self.rhs[c] -= sum[l] / count[l] as f64;
            }
        }
    }

    /// Writes the pressure back and subtracts its gradient from the faces.
    fn store(&self, state: &mut FlowState) {
        let (nx, ny) = (self.nx, self.ny);
        let p = &self.p;
        state.pressure.as_mut_slice().copy_from_slice(&p[nx..nx * (ny + 1)]);
        let u = state.u.as_mut_slice();
        let v = state.v.as_mut_slice();
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let c = k + nx;
                if self.aw[c] != 0.0 {
                    u[j * (nx + 1) + i] -= p[c] - p[c - 1];
                }
                if self.as_[c] != 0.0 {
                    v[k] -= p[c] - p[c - nx];
                }
            }
        }
    }

    fn solve_sor(&mut self, max_sweeps: usize, tol: f64, omega: f64) -> ProjectionStats {
        let nx = self.nx;
        const CHECK_EVERY: usize = 4;
        let mut p = std::mem::take(&mut self.p);
        let mut r = std::mem::take(&mut self.r);
        let mut sweeps = 0;
        let mut residual = self.residual(&p, &mut r);
        while residual > tol && sweeps < max_sweeps {
            for color in 0..2 {
                for j in 1..=self.ny {
                    let start = (j + 1 + color) % 2;
                    for i in (start..nx).step_by(2) {
                        let c = j * nx + i;
                        let gs = (self.neighbor_sum(&p, c) - self.rhs[c]) * self.inv_diag[c];
                        p[c] += omega * (gs - p[c]);
                    }
                }
            }
            sweeps += 1;
            if sweeps % CHECK_EVERY == 0 || sweeps == max_sweeps {
                residual = self.residual(&p, &mut r);
            }
        }
        self.p = p;
        self.r = r;
        ProjectionStats {
            iterations: sweeps,
            residual,
        }
    }

    fn solve_pcg(&mut self, max_iters: usize, tol: f64) -> ProjectionStats {
        let mut p = std::mem::take(&mut self.p);
        let mut r = std::mem::take(&mut self.r);
        let mut z = std::mem::take(&mut self.z);
        let mut s = std::mem::take(&mut self.s);
        let mut q = std::mem::take(&mut self.q);
        let range = self.interior();

        // Solving A p = -rhs with A = -lap, positive semi-definite. The
        // residual of that system is -(rhs - lap p).
        let mut residual = self.residual(&p, &mut r);
        r.iter_mut().for_each(|x| *x = -*x);
        let mut iterations = 0;
        if residual > tol {
            self.mg.apply(&r, &mut z);
            s.copy_from_slice(&z);
            let mut rho = dot(&r[range.clone()], &z[range.clone()]);
            while iterations < max_iters {
                let mut sq = 0.0;
                for c in range.clone() {
                    q[c] = self.diag[c] * s[c] - self.neighbor_sum(&s, c);
                    sq += s[c] * q[c];
                }
                if sq <= 0.0 || !sq.is_finite() {
                    break;
                }
                let alpha = rho / sq;
                let mut worst: f64 = 0.0;
                for c in range.clone() {
                    p[c] += alpha * s[c];
                    r[c] -= alpha * q[c];
                    worst = worst.max(r[c].abs());
                }
                iterations += 1;
                residual = worst;
                if residual <= tol {
                    break;
                }
                self.mg.apply(&r, &mut z);
                let rho_new = dot(&r[range.clone()], &z[range.clone()]);
                let beta = rho_new / rho;
                rho = rho_new;
                for c in range.clone() {
                    s[c] = z[c] + beta * s[c];
                }
            }
        }
        (self.p, self.r, self.z, self.s, self.q) = (p, r, z, s, q);
        ProjectionStats { iterations, residual }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest `|div u|` over fluid cells, in m/s per cell.
pub fn max_divergence(state: &FlowState, topo: &Topology) -> f64 {
    let (nx, ny) = (topo.nx, topo.ny);
    let mut worst: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if topo.is_solid(i, j) {
                continue;
            }
            let d = state.u.get(i + 1, j) - state.u.get(i, j) + state.v.get(i, j + 1) - state.v.get(i, j);
            worst = worst.max(d.abs());
        }
    }
    worst
}
