//! Geometric multigrid V-cycle used as a conjugate-gradient preconditioner.
//!
//! Cell-centred 2x2 coarsening. A coarse cell is active when any child is,
//! a coarse face is open when any fine face across it is open, and every
//! level uses the same unit five-point operator. Restriction sums the four
//! children and prolongation injects, so restriction is the transpose of
//! prolongation. Smoothing is red-black Gauss-Seidel, run red-first before
//! the coarse correction and black-first after it, which keeps the whole
//! cycle a symmetric operator.

/// `A x = b` with `A = diag - neighbours`, positive semi-definite, on a
/// buffer padded by one row above and below.
#[derive(Clone, Debug)]
pub(crate) struct Level {
    pub nx: usize,
    pub ny: usize,
    pub aw: Vec<f64>,
    pub as_: Vec<f64>,
    pub diag: Vec<f64>,
    inv_diag: Vec<f64>,
    x: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl Level {
    pub fn new(nx: usize, ny: usize, aw: Vec<f64>, as_: Vec<f64>) -> Self {
        let len = nx * (ny + 2);
        let mut diag = vec![0.0; len];
        let mut inv_diag = vec![0.0; len];
        for c in nx..nx * (ny + 1) {
            diag[c] = aw[c] + aw[c + 1] + as_[c] + as_[c + nx];
            if diag[c] > 0.0 {
                inv_diag[c] = 1.0 / diag[c];
            }
        }
        Self {
            nx,
            ny,
            aw,
            as_,
            diag,
            inv_diag,
            x: vec![0.0; len],
            b: vec![0.0; len],
            r: vec![0.0; len],
        }
    }

    fn coarsen(&self) -> Self {
        let (cnx, cny) = (self.nx.div_ceil(2), self.ny.div_ceil(2));
        let len = cnx * (cny + 2);
        let mut aw = vec![0.0; len];
        let mut as_ = vec![0.0; len];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = (j + 1) * self.nx + i;
                let p = (j / 2 + 1) * cnx + i / 2;
                // Fine faces on the west or south side of a coarse cell.
                if i % 2 == 0 && self.aw[c] != 0.0 {
                    aw[p] = 1.0;
                }
                if j % 2 == 0 && self.as_[c] != 0.0 {
                    as_[p] = 1.0;
                }
            }
        }
        Self::new(cnx, cny, aw, as_)
    }

    #[inline(always)]
    fn neighbor_sum(&self, x: &[f64], c: usize) -> f64 {
        let nx = self.nx;
        self.aw[c] * x[c - 1] + self.aw[c + 1] * x[c + 1] + self.as_[c] * x[c - nx] + self.as_[c + nx] * x[c + nx]
    }

    fn sweep(&mut self, color: usize) {
        let nx = self.nx;
        let mut x = std::mem::take(&mut self.x);
        for j in 1..=self.ny {
            let start = (j + 1 + color) % 2;
            for i in (start..nx).step_by(2) {
                let c = j * nx + i;
                x[c] = (self.b[c] + self.neighbor_sum(&x, c)) * self.inv_diag[c];
            }
        }
        self.x = x;
    }

    fn residual(&mut self) {
        for c in self.nx..self.nx * (self.ny + 1) {
            self.r[c] = self.b[c] - (self.diag[c] * self.x[c] - self.neighbor_sum(&self.x, c));
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Multigrid {
    levels: Vec<Level>,
}

const SMOOTH: usize = 2;
const COARSE_SWEEPS: usize = 40;

impl Multigrid {
    pub fn new(fine: Level) -> Self {
        let mut levels = vec![fine];
        loop {
            let last = levels.last().expect("at least one level");
            if last.nx.min(last.ny) <= 4 {
                break;
            }
            let next = last.coarsen();
            levels.push(next);
        }
        Self { levels }
    }

    /// `z = M^-1 r` for one V-cycle from a zero initial guess.
    pub fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        self.levels[0].b.copy_from_slice(r);
        self.cycle(0);
        z.copy_from_slice(&self.levels[0].x);
    }

    fn cycle(&mut self, l: usize) {
        let last = l + 1 == self.levels.len();
        let level = &mut self.levels[l];
        level.x.iter_mut().for_each(|v| *v = 0.0);
        let sweeps = if last { COARSE_SWEEPS } else { SMOOTH };
        for _ in 0..sweeps {
            level.sweep(0);
            level.sweep(1);
        }
        if last {
            for _ in 0..sweeps {
                level.sweep(1);
                level.sweep(0);
            }
            return;
        }
        level.residual();

        let (fine, rest) = self.levels[l..].split_at_mut(1);
        let (fine, coarse) = (&mut fine[0], &mut rest[0]);
        coarse.b.iter_mut().for_each(|v| *v = 0.0);
        let cnx = coarse.nx;
        for j in 0..fine.ny {
            for i in 0..fine.nx {
                let c = (j + 1) * fine.nx + i;
                if fine.diag[c] != 0.0 {
                    coarse.b[(j / 2 + 1) * cnx + i / 2] += fine.r[c];
                }
            }
        }
        self.cycle(l + 1);

        let (fine, rest) = self.levels[l..].split_at_mut(1);
        let (fine, coarse) = (&mut fine[0], &rest[0]);
        for j in 0..fine.ny {
            for i in 0..fine.nx {
                let c = (j + 1) * fine.nx + i;
                if fine.diag[c] != 0.0 {
                    fine.x[c] += coarse.x[(j / 2 + 1) * cnx + i / 2];
                }
            }
        }
        for _ in 0..SMOOTH {
            fine.sweep(1);
            fine.sweep(0);
        }
    }
}
