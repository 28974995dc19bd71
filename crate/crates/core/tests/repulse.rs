use proptest::prelude::*;
use winds_core::field::Field2;
use winds_core::repulse::{clamp_speed, repulsive_force_at, winding_number, RepulseEngine, RepulseParams, INERTIA};
use winds_core::terrain::HeightField;
use winds_core::Vec2;

const NX: usize = 120;
const NY: usize = 60;

fn block(h: &mut Field2, i0: usize, j0: usize, i1: usize, j1: usize, mm: f64) {
    for j in j0..j1 {
        for i in i0..i1 {
            h.set(i, j, mm);
        }
    }
}

fn trajectory(engine: &RepulseEngine, start: Vec2, steps: usize) -> Vec<Vec2> {
    let (mut pos, mut vel) = (start, Vec2::new(engine.params.base_speed, 0.0));
    let mut path = vec![pos];
    for _ in 0..steps {
        (pos, vel) = engine.step(pos, vel);
        path.push(pos);
        if pos.x >= NX as f64 {
            break;
        }
    }
    path
}

fn engine(h: Field2) -> RepulseEngine {
    RepulseEngine::new(HeightField(h), RepulseParams::default(), 0.25)
}

#[test]
fn flat_table_gives_a_straight_line() {
    let e = engine(Field2::new(NX, NY, 0.0));
    let path = trajectory(&e, Vec2::new(2.0, 17.3), 300);
    for (k, p) in path.iter().enumerate() {
        assert_eq!(p.y, 17.3);
        assert!((p.x - (2.0 + 0.25 * k as f64)).abs() < 1e-9);
    }
}

fn max_deflection(height: f64) -> f64 {
    let mut h = Field2::new(NX, NY, 0.0);
    block(&mut h, 50, 30, 54, 42, height);
    let e = engine(h);
    let y0 = 27.5;
    trajectory(&e, Vec2::new(10.0, y0), 2000)
        .iter()
        .map(|p| (p.y - y0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn taller_walls_deflect_more() {
    let base = 15.0;
    let d: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|k| max_deflection(k * base)).collect();
    assert!(d[0] > 0.0);
    assert!(d[0] < d[1] && d[1] < d[2], "{d:?}");
}

#[test]
fn deflection_is_non_decreasing_in_height() {
    let mut last = 0.0;
    for k in 0..=20 {
        let d = max_deflection(k as f64 * 8.0);
        assert!(d >= last - 1e-12, "height {}: {d} < {last}", k * 8);
        last = d;
    }
}

/// The blend-and-clamp update run in ten sub-steps per step, with the blend
/// weight rescaled so ten sub-steps relax by the same factor as one step.
fn refined_path(e: &RepulseEngine, start: Vec2, steps: usize) -> Vec<Vec2> {
    let sub = 10;
    let keep = INERTIA.powf(1.0 / sub as f64);
    let base = e.params.base_speed;
    let (mut pos, mut vel) = (start, Vec2::new(base, 0.0));
    let mut path = vec![pos];
    for _ in 0..steps {
        for _ in 0..sub {
            let push = Vec2::new(base, 0.0) + repulsive_force_at(pos, &e.heights, &e.params);
            vel = clamp_speed(vel * keep + push * (1.0 - keep), base);
            pos = pos + vel * (1.0 / sub as f64);
        }
        path.push(pos);
        if pos.x >= NX as f64 {
            break;
        }
    }
    path
}

#[test]
fn gap_between_walls_steers_through() {
    let mut h = Field2::new(NX, NY, 0.0);
    block(&mut h, 60, 0, 64, 26, 120.0);
    block(&mut h, 60, 34, 64, 60, 120.0);
    let e = engine(h);
    for y0 in [24.0, 30.0, 36.0] {
        let start = Vec2::new(20.0, y0);
        for path in [trajectory(&e, start, 1500), refined_path(&e, start, 1500)] {
            assert!(path.last().unwrap().x >= NX as f64, "did not cross from y0={y0}");
            for p in &path {
                if (60.0..64.0).contains(&p.x) {
                    assert!(p.y > 26.0 && p.y < 34.0, "hit a wall at {p:?} from y0={y0}");
                }
            }
        }
        let coarse = trajectory(&e, start, 1500);
        let fine = refined_path(&e, start, 1500);
        let n = coarse.len().min(fine.len());
        let gap = (0..n).map(|k| coarse[k].distance(fine[k])).fold(0.0, f64::max);
        assert!(gap < 1.0, "coarse and refined paths differ by {gap} cells");
    }
}

#[test]
fn mirrored_relief_mirrors_paths() {
    let mut h = Field2::new(NX, NY, 0.0);
    block(&mut h, 40, 10, 46, 25, 90.0);
    block(&mut h, 70, 30, 72, 50, 150.0);
    block(&mut h, 85, 5, 95, 12, 30.0);
    let e = engine(h.clone());
    let m = RepulseEngine::new(HeightField(h).mirrored_y(), RepulseParams::default(), 0.25);
    for y0 in [8.3, 21.0, 33.7, 47.1] {
        let a = trajectory(&e, Vec2::new(3.0, y0), 1000);
        let b = trajectory(&m, Vec2::new(3.0, NY as f64 - y0), 1000);
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            assert!((p.x - q.x).abs() < 1e-9 && (p.y - (NY as f64 - q.y)).abs() < 1e-9);
        }
    }
}

#[test]
fn no_path_circles_an_obstacle() {
    let mut h = Field2::new(NX, NY, 0.0);
    block(&mut h, 40, 22, 50, 38, 150.0);
    block(&mut h, 80, 10, 84, 20, 90.0);
    let e = engine(h);
    for k in 0..30 {
        let path = trajectory(&e, Vec2::new(1.0, 1.0 + k as f64 * 2.0), 3000);
        for c in [Vec2::new(45.0, 30.0), Vec2::new(82.0, 15.0)] {
            assert_eq!(winding_number(&path, c), 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn speed_stays_clamped(
        blocks in prop::collection::vec((0usize..110, 0usize..50, 1usize..10, 1usize..10, 0.0..200.0f64), 0..6),
        y0 in 0.5..59.5f64,
        gain in 0.0..0.02f64,
    ) {
        let mut h = Field2::new(NX, NY, 0.0);
        for (i, j, w, hh, mm) in blocks {
            block(&mut h, i, j, (i + w).min(NX), (j + hh).min(NY), mm);
        }
        let params = RepulseParams { force_gain: gain, ..RepulseParams::default() };
        let e = RepulseEngine::new(HeightField(h), params, 0.25);
        let base = params.base_speed;
        let (mut pos, mut vel) = (Vec2::new(1.0, y0), Vec2::ZERO);
        for _ in 0..600 {
            (pos, vel) = e.step(pos, vel);
            let s = vel.length();
            prop_assert!(s >= 0.5 * base - 1e-12 && s <= 2.0 * base + 1e-12);
        }
    }
}
