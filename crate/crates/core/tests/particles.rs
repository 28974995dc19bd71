use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use winds_core::particles::{FieldMover, Mover, ParticleSet, SeedingPolicy, StormSet, TrailField};
use winds_core::terrain::ObstacleField;
use winds_core::windsim::GridSpec;
use winds_core::{Diagnostic, Vec2};

fn policy(n: usize, west: f64, seed: u64) -> SeedingPolicy {
    SeedingPolicy {
        n_particles: n,
        west_fraction: west,
        seed,
        ..SeedingPolicy::default()
    }
}

#[test]
fn interior_seeding_is_uniform_over_fluid_cells() {
    let obs = ObstacleField::empty(40, 25)
        .with_solid_rect(5, 5, 12, 9)
        .with_solid_rect(20, 14, 24, 25);
    let (set, diags) = ParticleSet::seed(&policy(10_000, 0.0, 17), &obs);
    assert!(diags.is_empty());
    let mut counts = vec![0u32; 40 * 25];
    for p in set.positions() {
        assert!(!obs.is_solid_at(p.x, p.y));
        counts[p.y as usize * 40 + p.x as usize] += 1;
    }
    let fluid: Vec<usize> = (0..40 * 25).filter(|&k| !obs.is_solid(k % 40, k / 40)).collect();
    let expected = 10_000.0 / fluid.len() as f64;
    let chi2: f64 = fluid
        .iter()
        .map(|&k| {
            let d = counts[k] as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((fluid.len() - 1) as f64).unwrap();
    let p_value = 1.0 - dist.cdf(chi2);
    assert!(p_value > 0.01, "chi2 {chi2}, p {p_value}");
}

#[test]
fn seeding_is_deterministic() {
    let obs = ObstacleField::empty(30, 20).with_solid_rect(0, 4, 3, 8);
    let (a, _) = ParticleSet::seed(&policy(800, 0.6, 5), &obs);
    let (b, _) = ParticleSet::seed(&policy(800, 0.6, 5), &obs);
    let (c, _) = ParticleSet::seed(&policy(800, 0.6, 6), &obs);
    let pa: Vec<Vec2> = a.positions().collect();
    assert_eq!(pa, b.positions().collect::<Vec<_>>());
    assert_ne!(pa, c.positions().collect::<Vec<_>>());
    // round(0.6 * 800) = 480 on the west edge, none in the blocked rows.
    let west = pa.iter().take(480).filter(|p| p.x < 1.0).count();
    assert_eq!(west, 480);
    assert!(pa.iter().take(480).all(|p| !(4.0..8.0).contains(&p.y)));
}

#[test]
fn rk2_tracks_a_refined_euler_orbit() {
    let w = 100usize;
    let c = Vec2::new(50.0, 50.0);
    let omega = 0.05;
    let field = move |p: Vec2| {
        let d = p - c;
        Vec2::new(-omega * d.y, omega * d.x)
    };
    let dt = 0.25;
    let mover = FieldMover { sampler: &field, dt };
    let starts = [Vec2::new(80.0, 50.0), Vec2::new(50.0, 70.0), Vec2::new(35.0, 40.0)];
    for start in starts {
        let (mut pos, mut vel) = (start, Vec2::ZERO);
        let mut fine = start;
        for _ in 0..100 {
            pos = mover.propose(pos, &mut vel);
            for _ in 0..10 {
                fine = fine + field(fine) * (dt / 10.0);
            }
        }
        assert!(pos.distance(fine) <= 1e-3 * w as f64, "{pos:?} vs {fine:?}");
    }
}

#[test]
fn tracers_never_enter_walls() {
    let (nx, ny) = (120usize, 60usize);
    let obs = ObstacleField::empty(nx, ny)
        .with_solid_rect(40, 10, 44, 50)
        .with_solid_rect(70, 0, 72, 35)
        .with_solid_rect(90, 30, 100, 31);
    // Blows straight into the walls with a little shear.
    let field = |p: Vec2| Vec2::new(6.0, 1.5 * (p.y * 0.3).sin());
    let mut set = ParticleSet::seed(&policy(5000, 0.7, 1), &obs).0;
    let mover = FieldMover {
        sampler: &field,
        dt: 0.25,
    };
    let mut violations = 0;
    for _ in 0..1000 {
        set.advect(&mover, &obs, 0.25);
        violations += set.positions().filter(|p| obs.is_solid_at(p.x, p.y)).count();
        assert_eq!(set.len(), 5000);
    }
    assert_eq!(violations, 0);
}

#[test]
fn motionless_tracers_are_recycled() {
    let obs = ObstacleField::empty(20, 10);
    let mut set = ParticleSet::seed(&policy(50, 0.0, 2), &obs).0;
    let still = |_: Vec2| Vec2::ZERO;
    let mover = FieldMover {
        sampler: &still,
        dt: 0.25,
    };
    let mut stagnant = 0;
    for step in 1..=60 {
        let s = set.advect(&mover, &obs, 0.25);
        stagnant += s.stagnant;
        if step < 60 {
            assert_eq!(s.stagnant, 0);
        }
    }
    assert_eq!(stagnant, 50);
}

#[test]
fn fade_follows_the_opacity_curve() {
    let mut t = TrailField::new(6, 4);
    t.intensity.fill(1.0);
    for k in 1..=44 {
        t.deposit_and_fade(std::iter::empty(), 0.1);
        let want = 0.9f64.powi(k);
        let got = t.intensity.get(2, 2);
        assert!(((got - want) / want).abs() <= 1e-6, "k={k}");
        if k == 10 {
            assert!(got < 0.35);
        }
    }
    assert!(t.intensity.get(0, 0) < 0.01);
}

fn uniform(c: f64) -> impl Fn(Vec2) -> Vec2 {
    move |_| Vec2::new(c, 0.0)
}

fn one_storm() -> SeedingPolicy {
    SeedingPolicy {
        n_storms: 1,
        storm_spawn_period: 10_000,
        ..SeedingPolicy::default()
    }
}

#[test]
fn storm_hits_target_on_schedule() {
    let grid = GridSpec::default();
    let obs = ObstacleField::empty(grid.nx, grid.ny);
    let (c, dt, radius) = (1.2, 0.25, 2.0);
    let field = uniform(c);
    let mover = FieldMover { sampler: &field, dt };
    let mut storms = StormSet::new(&one_storm(), &obs);
    assert!(storms.step(0, &mover, &obs, &grid, dt, None, radius).is_empty());
    let start = storms.storms[0].pos;
    assert!(start.y >= grid.ny as f64 * 2.0 / 3.0);
    let target = Vec2::new(start.x + 40.0, start.y);
    // Hit when start.x + k c dt >= target.x - radius.
    let expected = ((40.0 - radius) / (c * dt)).ceil() as u64;
    let mut hit_step = None;
    for step in 1..400 {
        let ev = storms.step(step, &mover, &obs, &grid, dt, Some(target), radius);
        if let Some(Diagnostic::StormHit { step, .. }) = ev.first() {
            assert!(storms.storms[0].hit);
            hit_step = Some(*step);
            break;
        }
    }
    let got = hit_step.expect("no hit");
    assert!(got.abs_diff(expected) <= 2, "hit at {got}, expected {expected}");
    // The storm respawns on the west edge at the next frame.
    storms.step(got + 1, &mover, &obs, &grid, dt, Some(target), radius);
    assert!(!storms.storms[0].hit);
    assert!(storms.storms[0].pos.x < 1.0 + c * dt);
}

#[test]
fn zero_radius_never_hits() {
    let grid = GridSpec::default();
    let obs = ObstacleField::empty(grid.nx, grid.ny);
    let field = uniform(1.0);
    let mover = FieldMover {
        sampler: &field,
        dt: 0.25,
    };
    let policy = SeedingPolicy {
        n_storms: 4,
        storm_spawn_period: 20,
        ..SeedingPolicy::default()
    };
    let mut storms = StormSet::new(&policy, &obs);
    let target = Vec2::new(96.0, 99.0);
    for step in 0..2000 {
        let ev = storms.step(step, &mover, &obs, &grid, 0.25, Some(target), 0.0);
        assert!(ev.iter().all(|e| !matches!(e, Diagnostic::StormHit { .. })));
    }
}

#[test]
fn storm_logs_repeat_for_the_same_seed() {
    let grid = GridSpec::default();
    let obs = ObstacleField::empty(grid.nx, grid.ny).with_solid_rect(60, 70, 70, 100);
    let field = |p: Vec2| Vec2::new(2.0, 0.4 * (p.x * 0.05).sin());
    let mover = FieldMover {
        sampler: &field,
        dt: 0.25,
    };
    let policy = SeedingPolicy {
        n_storms: 2,
        storm_spawn_period: 30,
        seed: 8,
        ..SeedingPolicy::default()
    };
    let run = || {
        let mut storms = StormSet::new(&policy, &obs);
        let mut log = Vec::new();
        for step in 0..1500 {
            log.extend(storms.step(step, &mover, &obs, &grid, 0.25, Some(Vec2::new(120.0, 80.0)), 6.0));
        }
        log
    };
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trail_stays_in_unit_range(
        pts in prop::collection::vec((-5.0..25.0f64, -5.0..15.0f64), 0..200),
        alpha in 0.01..=1.0f64,
        deposit in 0.0..2.0f64,
        frames in 1usize..20,
    ) {
        let mut t = TrailField::new(20, 10);
        t.deposit = deposit;
        for _ in 0..frames {
            t.deposit_and_fade(pts.iter().map(|&(x, y)| Vec2::new(x, y)), alpha);
            prop_assert!(t.intensity.min() >= 0.0 && t.intensity.max() <= 1.0);
        }
    }

    #[test]
    fn population_is_conserved(
        seed in any::<u64>(),
        west in 0.0..=1.0f64,
        (ux, uy) in (-3.0..6.0f64, -2.0..2.0f64),
        wall in 3usize..25,
    ) {
        let obs = ObstacleField::empty(30, 16).with_solid_rect(wall, 3, wall + 2, 12);
        let mut set = ParticleSet::seed(&policy(300, west, seed), &obs).0;
        let field = move |p: Vec2| Vec2::new(ux, uy * (p.x * 0.2).cos());
        let mover = FieldMover { sampler: &field, dt: 0.25 };
        for _ in 0..80 {
            set.advect(&mover, &obs, 0.25);
            prop_assert_eq!(set.len(), 300);
            prop_assert!(set.positions().all(|p| !obs.is_solid_at(p.x, p.y)));
            prop_assert!(set.positions().all(|p| p.x >= 0.0 && p.x < 30.0 && p.y >= 0.0 && p.y < 16.0));
        }
    }
}
