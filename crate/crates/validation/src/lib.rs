//! Acceptance checks for the simulator. Each check runs a scenario and
//! returns a [`Verdict`] carrying the measured figures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use winds_core::field::Field2;
use winds_core::modes::southward_diversion;
use winds_core::particles::{FieldMover, Mover, TrailField, DEFAULT_FADE};
use winds_core::repulse::{winding_number, RepulseEngine, RepulseParams};
use winds_core::terrain::{HeightField, ObstacleField};
use winds_core::windsim::{
    coriolis::coriolis_at_latitude, FlowState, GridSpec, PressureMethod, PressureSolver, SimParams, Simulator, Topology,
};
use winds_core::Vec2;
use winds_harness::config::{BlockClass, BlockEntry, Engine, LayoutConfig, ScenarioConfig};
use winds_harness::layout::mirror_blocks;
use winds_harness::run::run_scenario;
use winds_harness::scenarios;
use winds_harness::session::{EngineState, Session};

#[derive(Clone, Debug)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn bundled(name: &str) -> ScenarioConfig {
    scenarios::bundled(name)
        .unwrap_or_else(|| panic!("no bundled scenario {name}"))
        .expect("bundled scenarios are valid")
}

/// Sign changes in `series`, ignoring values within `eps` of zero.
pub fn sign_changes(series: &[f64], eps: f64) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for &v in series {
        let s = if v > eps {
            1
        } else if v < -eps {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                n += 1;
            }
            last = s;
        }
    }
    n
}

pub fn is_monotone(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] >= w[0]) || series.windows(2).all(|w| w[1] <= w[0])
}

fn steps_session(cfg: ScenarioConfig) -> Session {
    let steps = cfg.steps;
    let mut s = Session::new(cfg).expect("session builds");
    for _ in 0..steps {
        s.step().expect("step");
    }
    s
}

/// Figures from one pass over the reference scenario.
#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub steps: u64,
    pub worst_divergence: f64,
    pub divergence_bound: f64,
    pub tracers: usize,
    pub in_solid: usize,
    pub seconds: f64,
}

pub fn reference_run(steps: u64) -> ReferenceRun {
    let cfg = bundled("reference");
    let bound = 1e-3 * cfg.sim.inflow_speed;
    let mut s = Session::new(cfg).expect("session builds");
    let t0 = Instant::now();
    let (mut worst, mut in_solid): (f64, usize) = (0.0, 0);
    for _ in 0..steps {
        s.step().expect("step");
        worst = worst.max(s.metrics().max_divergence.expect("cfd engine"));
        let obs = s.obstacles();
        in_solid += s.particles.positions().filter(|p| obs.is_solid_at(p.x, p.y)).count();
        in_solid += s
            .storms
            .storms
            .iter()
            .filter(|st| obs.is_solid_at(st.pos.x, st.pos.y))
            .count();
    }
    ReferenceRun {
        steps,
        worst_divergence: worst,
        divergence_bound: bound,
        tracers: s.particles.len(),
        in_solid,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

pub fn divergence(r: &ReferenceRun) -> Verdict {
    let pass = r.worst_divergence <= r.divergence_bound && r.seconds <= 120.0;
    Verdict::new(
        pass,
        format!(
            "max |div u| {:.3e} (bound {:.1e} m/s per cell) over {} steps, {:.1} s",
            r.worst_divergence, r.divergence_bound, r.steps, r.seconds
        ),
    )
}

pub fn impermeability(r: &ReferenceRun) -> Verdict {
    Verdict::new(
        r.in_solid == 0,
        format!(
            "{} tracer-in-solid occurrences, {} tracers x {} steps",
            r.in_solid, r.tracers, r.steps
        ),
    )
}

/// Headings (radians) of a tracer's successive displacements through an
/// obstacle-free, friction-free flow with uniform Coriolis parameter `f`.
pub fn probe_headings(f: f64, steps: usize) -> Vec<f64> {
    let grid = GridSpec::default();
    let p = SimParams {
        f0: f,
        beta: 0.0,
        coriolis_strength: 1.0,
        viscosity: 0.0,
        drag_low: 0.0,
        jet_boost: 0.0,
        ..SimParams::default()
    };
    let mut sim = Simulator::new(grid, p, ObstacleField::empty(grid.nx, grid.ny)).expect("valid");
    let (mut pos, mut vel) = (Vec2::new(0.25 * grid.nx as f64, 0.5 * grid.ny as f64), Vec2::ZERO);
    let mut headings = Vec::with_capacity(steps);
    for _ in 0..steps {
        sim.step();
        let next = FieldMover {
            sampler: &sim,
            dt: p.dt,
        }
        .propose(pos, &mut vel);
        headings.push((next - pos).heading());
        pos = next;
    }
    headings
}

pub fn coriolis_direction() -> Verdict {
    let f = coriolis_at_latitude(45.0);
    let nh = probe_headings(f, 100);
    let sh = probe_headings(-f, 100);
    let falling = nh.windows(2).filter(|w| w[1] < w[0]).count();
    let rising = sh.windows(2).filter(|w| w[1] > w[0]).count();
    let pass = falling == nh.len() - 1 && rising == sh.len() - 1;
    Verdict::new(
        pass,
        format!(
            "NH heading {:+.2e} -> {:+.2e} rad, strictly falling on {falling}/99 steps; \
             SH {:+.2e} -> {:+.2e} rad, strictly rising on {rising}/99",
            nh[0],
            nh[nh.len() - 1],
            sh[0],
            sh[sh.len() - 1]
        ),
    )
}

fn with_blocks(cfg: &ScenarioConfig, blocks: Vec<BlockEntry>) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.layout = Some(LayoutConfig {
        blocks,
        random: None,
        ..cfg.layout.clone().unwrap_or_default()
    });
    c
}

pub fn southward() -> Verdict {
    let cfg = bundled("ice_age");
    let blocks = cfg.layout.as_ref().expect("layout").blocks.clone();
    let ny = cfg.grid.ny;
    let base = steps_session(with_blocks(&cfg, Vec::new()));
    let lgm = steps_session(cfg.clone());
    let mirrored = steps_session(with_blocks(&cfg, mirror_blocks(&blocks, ny)));
    let need = 0.05 * (cfg.grid.lat_north - cfg.grid.lat_south);
    let d = southward_diversion(base.exit_latitudes(), lgm.exit_latitudes());
    let m = southward_diversion(base.exit_latitudes(), mirrored.exit_latitudes());
    match (d, m) {
        (Ok(d), Ok(m)) => Verdict::new(
            d >= need && m < 0.0,
            format!("LGM diversion {d:+.2} deg (need >= {need:.2}), mirrored {m:+.2} deg (need < 0)"),
        ),
        (d, m) => Verdict::new(false, format!("diversion undefined: {d:?} / {m:?}")),
    }
}

pub fn trail_decay() -> Verdict {
    let mut t = TrailField::new(8, 8);
    t.intensity.fill(1.0);
    let mut worst: f64 = 0.0;
    let (mut at10, mut at44) = (1.0, 1.0);
    for k in 1..=44 {
        t.deposit_and_fade(std::iter::empty(), DEFAULT_FADE);
        let want = 0.9f64.powi(k);
        for &v in t.intensity.as_slice() {
            worst = worst.max(((v - want) / want).abs());
        }
        if k == 10 {
            at10 = t.intensity.get(3, 3);
        }
        if k == 44 {
            at44 = t.intensity.get(3, 3);
        }
    }
    Verdict::new(
        worst <= 1e-6 && at10 < 0.35 && at44 < 0.01,
        format!("max relative error {worst:.1e}, I(10) = {at10:.4}, I(44) = {at44:.4}"),
    )
}

const REPULSE_NX: usize = 120;
const REPULSE_NY: usize = 60;

fn repulse_path(e: &RepulseEngine, start: Vec2) -> Vec<Vec2> {
    let (mut pos, mut vel) = (start, Vec2::new(e.params.base_speed, 0.0));
    let mut path = vec![pos];
    for _ in 0..3000 {
        (pos, vel) = e.step(pos, vel);
        path.push(pos);
        if pos.x >= REPULSE_NX as f64 {
            break;
        }
    }
    path
}

fn wall_engine(height: f64) -> RepulseEngine {
    let mut h = Field2::new(REPULSE_NX, REPULSE_NY, 0.0);
    for j in 30..42 {
        for i in 50..54 {
            h.set(i, j, height);
        }
    }
    RepulseEngine::new(HeightField(h), RepulseParams::default(), SimParams::default().dt)
}

pub fn repulse_monotonicity() -> Verdict {
    let y0 = 27.5;
    let deflection: Vec<f64> = [15.0, 30.0, 45.0]
        .iter()
        .map(|&h| {
            repulse_path(&wall_engine(h), Vec2::new(10.0, y0))
                .iter()
                .map(|p| (p.y - y0).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let increasing = deflection[0] > 0.0 && deflection[0] < deflection[1] && deflection[1] < deflection[2];
    let e = wall_engine(45.0);
    let center = Vec2::new(52.0, 36.0);
    let windings: Vec<i32> = (0..30)
        .map(|k| winding_number(&repulse_path(&e, Vec2::new(10.0, 16.0 + k as f64 * 1.5)), center))
        .collect();
    let loops = windings.iter().filter(|&&w| w != 0).count();
    Verdict::new(
        increasing && loops == 0,
        format!(
            "deflection {:.3} < {:.3} < {:.3} cells for h, 2h, 3h; {loops}/30 paths wind around the wall",
            deflection[0], deflection[1], deflection[2]
        ),
    )
}

/// Block and probe of the meander check: a solid block at mid-domain in the
/// jet band and a probe 20 cells downstream of its east face.
pub fn meander_scenario(engine: Engine) -> (ScenarioConfig, Vec2) {
    let mut cfg = ScenarioConfig::empty_table();
    cfg.engine = engine;
    cfg.steps = 2000;
    cfg.seeding.n_particles = 0;
    cfg.seeding.n_storms = 0;
    let (x, y, size) = (0.5 * cfg.grid.nx as f64, 84.0, 12.0);
    cfg.layout = Some(LayoutConfig {
        blocks: vec![BlockEntry {
            class: BlockClass::Ice,
            x,
            y,
            rot: 0.0,
            w: Some(size),
            h: Some(size),
        }],
        ..LayoutConfig::default()
    });
    (cfg, Vec2::new(x + 0.5 * size + 20.0, y))
}

pub fn meander_contrast() -> Verdict {
    let (cfg, probe) = meander_scenario(Engine::Cfd);
    let eps = 1e-3 * cfg.sim.inflow_speed;
    let mut s = Session::new(cfg.clone()).expect("session builds");
    let mut cfd = Vec::with_capacity(cfg.steps as usize);
    for _ in 0..cfg.steps {
        s.step().expect("step");
        let EngineState::Cfd(sim) = &s.engine else {
            unreachable!()
        };
        cfd.push(sim.probe(probe.x, probe.y).1);
    }
    let cfd_changes = sign_changes(&cfd, eps);

    let (cfg, probe) = meander_scenario(Engine::Repulse);
    let s = Session::new(cfg.clone()).expect("session builds");
    let EngineState::Repulse(r) = &s.engine else {
        unreachable!()
    };
    let mut v = Vec2::ZERO;
    let mut rep = Vec::with_capacity(cfg.steps as usize);
    for _ in 0..cfg.steps {
        v = r.step(probe, v).1;
        rep.push(v.y);
    }
    let rep_changes = sign_changes(&rep, 0.0);
    let monotone = is_monotone(&rep);
    Verdict::new(
        cfd_changes >= 3 && rep_changes == 0 && monotone,
        format!(
            "CFD probe v: {cfd_changes} sign changes in {} steps (need >= 3); repulse probe v: \
             {rep_changes} sign changes, monotone {monotone}",
            cfg.steps
        ),
    )
}

fn run_outputs(cfg: &ScenarioConfig, dir: &std::path::Path) -> (Vec<u8>, Vec<u8>) {
    let mut c = cfg.clone();
    c.output.metrics = Some(dir.join("metrics.csv"));
    c.output.frames = Some(dir.join("frames"));
    run_scenario(&c).expect("run");
    let metrics = std::fs::read(dir.join("metrics.csv")).expect("metrics written");
    let sums = std::fs::read(dir.join("frames/checksums.sha256")).expect("checksums written");
    (metrics, sums)
}

pub fn determinism() -> Verdict {
    let mut detail = Vec::new();
    let mut pass = true;
    for name in scenarios::names() {
        let cfg = bundled(name);
        let (a, b) = (tempfile::tempdir().expect("tmp"), tempfile::tempdir().expect("tmp"));
        let (ma, sa) = run_outputs(&cfg, a.path());
        let (mb, sb) = run_outputs(&cfg, b.path());
        let same = ma == mb && sa == sb && !sa.is_empty() && ma.len() > 100;
        pass &= same;
        let frames = sa.iter().filter(|&&c| c == b'\n').count();
        detail.push(format!(
            "{name} {} ({frames} frames)",
            if same { "identical" } else { "DIFFERS" }
        ));
    }
    Verdict::new(pass, detail.join(", "))
}

pub fn frame_time() -> Verdict {
    let mut s = Session::new(bundled("reference")).expect("session builds");
    for _ in 0..20 {
        s.step().expect("step");
    }
    let n = 300;
    let t0 = Instant::now();
    for _ in 0..n {
        s.step().expect("step");
    }
    let ms = t0.elapsed().as_secs_f64() * 1e3 / n as f64;
    Verdict::new(
        ms <= 16.0,
        format!(
            "mean frame {ms:.2} ms (step + {} tracers + storms + trail), budget 16 ms",
            s.particles.len()
        ),
    )
}

/// Dense Gauss-Seidel on the fluid-cell graph to residual 1e-10; returns
/// the corrected face velocities.
pub fn dense_projection(u: &Field2, v: &Field2, obs: &ObstacleField) -> (Field2, Field2) {
    let (nx, ny) = obs.dims();
    let fluid = |i: usize, j: usize| !obs.is_solid(i, j);
    let n = nx * ny;
    let mut a = vec![vec![0.0; n]; n];
    let mut d = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if !fluid(i, j) {
                continue;
            }
            d[c] = u.get(i + 1, j) - u.get(i, j) + v.get(i, j + 1) - v.get(i, j);
            let nbrs = [
                (i > 0 && fluid(i.wrapping_sub(1), j), c.wrapping_sub(1)),
                (i + 1 < nx && fluid(i + 1, j), c + 1),
                (j > 0 && fluid(i, j.wrapping_sub(1)), c.wrapping_sub(nx)),
                (j + 1 < ny && fluid(i, j + 1), c + nx),
            ];
            for (open, m) in nbrs {
                if open {
                    a[c][c] += 1.0;
                    a[c][m] = -1.0;
                }
            }
        }
    }
    let mut p = vec![0.0; n];
    for sweep in 0.. {
        for c in 0..n {
            if a[c][c] == 0.0 {
                continue;
            }
            let s: f64 = -d[c] - (0..n).filter(|&m| m != c).map(|m| a[c][m] * p[m]).sum::<f64>();
            p[c] = s / a[c][c];
        }
        let res = (0..n)
            .map(|c| ((0..n).map(|m| a[c][m] * p[m]).sum::<f64>() + d[c]).abs())
            .fold(0.0, f64::max);
        if res <= 1e-10 {
            break;
        }
        assert!(sweep < 200_000, "dense solve stalled at {res}");
    }
    let (mut u2, mut v2) = (u.clone(), v.clone());
    for j in 0..ny {
        for i in 1..nx {
            if fluid(i - 1, j) && fluid(i, j) {
                u2.set(i, j, u.get(i, j) - (p[j * nx + i] - p[j * nx + i - 1]));
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if fluid(i, j - 1) && fluid(i, j) {
                v2.set(i, j, v.get(i, j) - (p[j * nx + i] - p[(j - 1) * nx + i]));
            }
        }
    }
    (u2, v2)
}

pub fn small_grid_projection() -> Verdict {
    let grid = GridSpec {
        nx: 16,
        ny: 9,
        ..GridSpec::default()
    };
    let (nx, ny) = grid.dims();
    let obs = ObstacleField::empty(nx, ny)
        .with_solid_rect(4, 2, 6, 6)
        .with_solid_rect(10, 0, 11, 4)
        .with_solid_rect(12, 6, 15, 8);
    let topo = Topology::new(&obs);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut s = FlowState::at_rest(&grid);
    for j in 0..ny {
        for i in 1..nx {
            if !obs.is_solid(i - 1, j) && !obs.is_solid(i, j) {
                s.u.set(i, j, rng.random_range(-10.0..10.0));
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if !obs.is_solid(i, j - 1) && !obs.is_solid(i, j) {
                s.v.set(i, j, rng.random_range(-10.0..10.0));
            }
        }
    }
    let (want_u, want_v) = dense_projection(&s.u, &s.v, &obs);
    let omega = SimParams::default().sor_omega;
    let mut parts = Vec::new();
    let mut pass = true;
    for method in [PressureMethod::Sor, PressureMethod::Pcg] {
        let mut got = s.clone();
        PressureSolver::new(&topo).project(&mut got, method, 500, 0.0, omega);
        let worst = got
            .u
            .as_slice()
            .iter()
            .zip(want_u.as_slice())
            .chain(got.v.as_slice().iter().zip(want_v.as_slice()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pass &= worst <= 1e-6;
        parts.push(format!("{method:?} {worst:.1e}"));
    }
    Verdict::new(
        pass,
        format!(
            "max face-velocity gap after 500 iterations: {} (bound 1e-6)",
            parts.join(", ")
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_changes_ignore_the_dead_band() {
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0], 0.0), 2);
        assert_eq!(sign_changes(&[1.0, -0.001, 0.002, -1.0], 0.01), 1);
        assert_eq!(sign_changes(&[0.0, 0.0], 0.0), 0);
    }

    #[test]
    fn monotone_series() {
        assert!(is_monotone(&[1.0, 1.0, 2.0]));
        assert!(is_monotone(&[3.0, 2.0, 2.0]));
        assert!(!is_monotone(&[1.0, 2.0, 1.5]));
    }
}
