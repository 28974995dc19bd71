use proptest::prelude::*;
use std::collections::HashSet;
use winds_core::field::Field2;
use winds_core::modes::{
    generate_nonameland, lgm_coverage, place_target, southward_diversion, IceAgeAssets, ShapeLibrary,
};
use winds_core::terrain::{
    rasterize_blocks, BlockSpec, ClassHeights, HeightField, ObstacleField, ReliefClass, Thresholds,
};
use winds_core::windsim::GridSpec;
use winds_core::{Polygon, Vec2};

const DIMS: (usize, usize) = (192, 108);

#[test]
fn nonameland_is_reproducible() {
    let lib = ShapeLibrary::builtin();
    for seed in [0, 1, 77, u64::MAX] {
        let (a, _) = generate_nonameland(seed, &lib, DIMS, 30.0).unwrap();
        let (b, _) = generate_nonameland(seed, &lib, DIMS, 30.0).unwrap();
        assert_eq!(a.outline, b.outline);
        assert_eq!(a.overlay, b.overlay);
    }
}

#[test]
fn nonameland_stays_in_the_central_band() {
    let lib = ShapeLibrary::builtin();
    let (w, h) = (DIMS.0 as f64, DIMS.1 as f64);
    let mut violations = 0;
    let mut fallbacks = 0;
    for seed in 0..1000 {
        let (land, diags) = generate_nonameland(seed, &lib, DIMS, 30.0).unwrap();
        fallbacks += diags.len();
        let b = land.outline.bounds();
        let inside = b.min.x >= 0.1 * w - 1e-9
            && b.max.x <= 0.9 * w + 1e-9
            && b.min.y >= 0.1 * h - 1e-9
            && b.max.y <= 0.9 * h + 1e-9;
        if !inside {
            violations += 1;
        }
        if !land.fallback {
            let frac = b.width() / w;
            assert!((0.25 - 1e-9..=0.40 + 1e-9).contains(&frac), "seed {seed}: width {frac}");
        }
        assert!(land.outline.is_simple());
    }
    assert_eq!(violations, 0);
    assert_eq!(fallbacks, 0);
}

#[test]
fn seeds_give_different_shapes() {
    let lib = ShapeLibrary::builtin();
    let tuples: Vec<(usize, bool, bool, u64)> = (0..1000)
        .map(|seed| {
            let (land, _) = generate_nonameland(seed, &lib, DIMS, 30.0).unwrap();
            (land.shape_index, land.flip_h, land.flip_v, land.rotation.to_bits())
        })
        .collect();
    // Discrete part alone: adjacent seeds collide with probability 1/(4|lib|).
    let pairs = tuples.windows(2).count() as f64;
    let same = tuples
        .windows(2)
        .filter(|w| (w[0].0, w[0].1, w[0].2) == (w[1].0, w[1].1, w[1].2))
        .count() as f64;
    let bound = 1.0 / (4.0 * lib.len() as f64);
    assert!(
        same / pairs <= 2.0 * bound,
        "collision rate {} vs {bound}",
        same / pairs
    );
    let distinct: HashSet<_> = tuples.iter().collect();
    assert_eq!(distinct.len(), 1000);
    let used: HashSet<usize> = tuples.iter().map(|t| t.0).collect();
    assert_eq!(used.len(), lib.len());
}

#[test]
fn nonameland_interior_is_low_mountain() {
    let lib = ShapeLibrary::builtin();
    let (land, _) = generate_nonameland(12, &lib, DIMS, 30.0).unwrap();
    let mut n = 0;
    for j in 0..DIMS.1 {
        for i in 0..DIMS.0 {
            let inside = land.outline.contains(Vec2::new(i as f64 + 0.5, j as f64 + 0.5));
            assert_eq!(land.overlay.get(i, j), if inside { 30.0 } else { 0.0 });
            n += inside as usize;
        }
    }
    assert!(n > 100);
}

#[test]
fn targets_land_in_the_middle() {
    let g = GridSpec::default();
    for seed in 0..10_000 {
        let p = place_target(seed, &g, None);
        assert!(
            p.x >= 48.0 && p.x < 144.0 && p.y >= 27.0 && p.y < 81.0,
            "seed {seed}: {p:?}"
        );
    }
}

#[test]
fn targets_avoid_solid_cells() {
    let g = GridSpec::default();
    // Two thirds of the central rectangle walled off.
    let obs = ObstacleField::empty(g.nx, g.ny).with_solid_rect(48, 27, 112, 81);
    let mut rerolled = 0;
    for seed in 0..2000 {
        let free = place_target(seed, &g, None);
        let p = place_target(seed, &g, Some(&obs));
        assert!(!obs.is_solid_at(p.x, p.y));
        rerolled += (free != p) as usize;
    }
    assert!(rerolled > 1000);
}

fn zone() -> Polygon {
    Polygon::from_points(&[[20.0, 60.0], [100.0, 60.0], [100.0, 100.0], [20.0, 100.0]])
}

#[test]
fn coverage_counts_cells() {
    let t = Thresholds::default();
    let heights = ClassHeights::default();
    assert_eq!(lgm_coverage(&HeightField::zeros(192, 108), &zone(), &t), 0.0);

    let full = BlockSpec::new(ReliefClass::IceSheet, Vec2::new(60.0, 80.0), (80.0, 40.0), 0.0);
    let (h, _) = rasterize_blocks(&[full], DIMS, &heights);
    assert_eq!(lgm_coverage(&h, &zone(), &t), 1.0);

    let half = BlockSpec::new(ReliefClass::HighMountain, Vec2::new(40.0, 80.0), (40.0, 40.0), 0.0);
    let (h, _) = rasterize_blocks(&[half], DIMS, &heights);
    let cov = lgm_coverage(&h, &zone(), &t);
    // Cell-by-cell count.
    let (mut inside, mut hit) = (0, 0);
    for j in 60..100 {
        for i in 20..100 {
            inside += 1;
            hit += (h.get(i, j) >= t.high()) as usize;
        }
    }
    assert_eq!(cov, hit as f64 / inside as f64);
    assert!((cov - 0.5).abs() <= 40.0 / inside as f64);

    let low = BlockSpec::new(ReliefClass::LowMountain, Vec2::new(60.0, 80.0), (80.0, 40.0), 0.0);
    let (h, _) = rasterize_blocks(&[low], DIMS, &heights);
    assert_eq!(lgm_coverage(&h, &zone(), &t), 0.0);
}

#[test]
fn bundled_zone_is_valid() {
    let ice = IceAgeAssets::builtin();
    let g = GridSpec::default();
    let z = ice.zone_on(&g);
    assert!(z.is_simple() && !z.is_degenerate());
    assert!(g.contains(ice.x_target_on(&g)));
    assert!(!z.contains(ice.o_marker_on(&g)));
    let b = z.bounds();
    assert!(b.min.x >= 0.0 && b.max.x <= g.nx as f64 && b.min.y >= 0.0 && b.max.y <= g.ny as f64);
}

#[test]
fn identical_runs_give_zero_diversion() {
    let lats = [44.0, 47.5, 51.2];
    assert_eq!(southward_diversion(&lats, &lats).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn coverage_grows_with_blocks(
        blocks in prop::collection::vec((0.0..192.0f64, 0.0..108.0f64, 2.0..30.0f64, 2.0..30.0f64, -3.0..3.0f64, 0u8..3), 1..10),
    ) {
        let t = Thresholds::default();
        let heights = ClassHeights::default();
        let zone = IceAgeAssets::builtin().zone_on(&GridSpec::default());
        let mut h = HeightField(Field2::new(192, 108, 0.0));
        let mut last = lgm_coverage(&h, &zone, &t);
        for (x, y, w, d, r, c) in blocks {
            let class = [ReliefClass::LowMountain, ReliefClass::HighMountain, ReliefClass::IceSheet][c as usize];
            let (add, _) = rasterize_blocks(&[BlockSpec::new(class, Vec2::new(x, y), (w, d), r)], (192, 108), &heights);
            h.max_with(&add);
            let now = lgm_coverage(&h, &zone, &t);
            prop_assert!(now >= last);
            prop_assert!((0.0..=1.0).contains(&now));
            last = now;
        }
    }
}
