use proptest::prelude::*;
use winds_core::field::Field2;
use winds_core::terrain::{
    classify_relief, ingest_depth_frame, median_filter, obstacles_from_height, pgm, rasterize_blocks, BlockSpec,
    Calibration, ClassHeights, DepthFrame, HeightField, ReliefClass, Thresholds,
};
use winds_core::Vec2;

fn cal() -> Calibration {
    Calibration {
        near_mm: 900,
        far_mm: 1250,
        table_mm: 1200,
        denoise_radius: 1,
    }
}

#[test]
fn empty_table_reads_flat() {
    let c = cal();
    let frame = DepthFrame::uniform(40, 30, c.table_mm);
    let h = ingest_depth_frame(&frame, &c, (40, 30)).unwrap();
    assert_eq!(h.0.max(), 0.0);
    assert_eq!(h.0.min(), 0.0);
}

#[test]
fn hovering_hand_pixel_is_ignored() {
    let c = Calibration {
        denoise_radius: 0,
        ..cal()
    };
    let mut frame = DepthFrame::uniform(20, 20, c.table_mm);
    frame.set(7, 4, c.near_mm - 1);
    let h = ingest_depth_frame(&frame, &c, (20, 20)).unwrap();
    assert_eq!(h.0.max(), 0.0);
}

fn brute_median(data: &[f64], w: usize, h: usize, r: usize, x: usize, y: usize) -> f64 {
    let mut win = Vec::new();
    for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
        for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
            win.push(data[yy * w + xx]);
        }
    }
    win.sort_by(f64::total_cmp);
    win[win.len() / 2]
}

#[test]
fn salt_noise_is_removed_by_median() {
    let c = cal();
    let mut frame = DepthFrame::uniform(9, 9, c.table_mm);
    // A 3x3 block 100 mm tall with one outlier pixel beside it.
    for row in 3..6 {
        for col in 3..6 {
            frame.set(col, row, c.table_mm - 100);
        }
    }
    frame.set(7, 1, c.table_mm - 140);
    let h = ingest_depth_frame(&frame, &c, (9, 9)).unwrap();
    let raw: Vec<f64> = frame
        .values
        .iter()
        .map(|&d| f64::from(c.table_mm - d.min(c.table_mm)))
        .collect();
    for row in 0..9 {
        for col in 0..9 {
            let want = brute_median(&raw, 9, 9, 1, col, row);
            assert_eq!(h.get(col, 8 - row), want, "({col},{row})");
        }
    }
    assert_eq!(h.get(7, 7), 0.0);
    assert_eq!(h.get(4, 4), 100.0);
}

#[test]
fn mismatched_header_is_rejected() {
    let mut frame = DepthFrame::uniform(4, 4, 1200);
    frame.values.pop();
    assert!(ingest_depth_frame(&frame, &cal(), (4, 4)).is_err());
    assert!(DepthFrame::new(4, 4, vec![0; 15]).is_err());
}

#[test]
fn pgm_round_trip() {
    let mut frame = DepthFrame::uniform(5, 3, 1200);
    frame.set(2, 1, 1055);
    frame.set(4, 2, 65535);
    let bytes = pgm::encode(&frame);
    assert!(bytes.starts_with(b"P5"));
    assert_eq!(pgm::decode(&bytes).unwrap(), frame);
}

#[test]
fn boundary_height_takes_higher_class() {
    let t = Thresholds::default();
    assert_eq!(classify_relief(0.0, &t), ReliefClass::Empty);
    assert_eq!(classify_relief(t.high(), &t), ReliefClass::HighMountain);
    assert!(Thresholds::new(60.0, 20.0, 120.0).is_err());
}

#[test]
fn classification_sweep_matches_rule() {
    let t = Thresholds::new(20.0, 60.0, 120.0).unwrap();
    for k in 0..=2000 {
        let h = k as f64 * 0.1;
        let want = if h < 20.0 {
            0
        } else if h < 60.0 {
            1
        } else if h < 120.0 {
            2
        } else {
            3
        };
        assert_eq!(classify_relief(h, &t).index(), want, "h={h}");
    }
}

#[test]
fn overlapping_blocks_keep_the_max() {
    let heights = ClassHeights::default();
    let low = BlockSpec::new(ReliefClass::LowMountain, Vec2::new(12.0, 8.0), (10.0, 6.0), 0.3);
    let high = BlockSpec::new(ReliefClass::HighMountain, Vec2::new(15.0, 9.0), (6.0, 4.0), -0.7);
    let (h, _) = rasterize_blocks(&[low, high], (30, 20), &heights);
    for j in 0..20 {
        for i in 0..30 {
            let p = Vec2::new(i as f64 + 0.5, j as f64 + 0.5);
            // Direct point-in-rotated-rectangle test.
            let inside = |b: &BlockSpec| {
                let d = p - b.center;
                let (s, c) = b.rotation.sin_cos();
                let lx = d.x * c + d.y * s;
                let ly = -d.x * s + d.y * c;
                lx.abs() <= b.footprint.0 / 2.0 && ly.abs() <= b.footprint.1 / 2.0
            };
            let mut want: f64 = 0.0;
            if inside(&low) {
                want = want.max(heights.low);
            }
            if inside(&high) {
                want = want.max(heights.high);
            }
            assert_eq!(h.get(i, j), want, "({i},{j})");
        }
    }
}

#[test]
fn block_past_the_edge_is_clamped_and_reported() {
    let b = BlockSpec::new(ReliefClass::IceSheet, Vec2::new(1.0, 1.0), (6.0, 4.0), 0.0);
    let (h, ev) = rasterize_blocks(&[b], (20, 10), &ClassHeights::default());
    assert_eq!(ev.len(), 1);
    assert_eq!(h.get(0, 0), ClassHeights::default().ice);
    assert_eq!(h.get(5, 3), ClassHeights::default().ice);
}

#[test]
fn checkerboard_blockage_follows_cells() {
    let t = Thresholds::default();
    let h = HeightField(Field2::from_fn(
        16,
        12,
        |i, j| if (i + j) % 2 == 0 { 30.0 } else { 90.0 },
    ));
    let obs = obstacles_from_height(&h, &t, 0.8);
    for j in 0..12 {
        for i in 0..16 {
            let class = classify_relief(h.get(i, j), &t);
            assert_eq!(obs.is_solid(i, j), class.is_wall());
            assert_eq!(
                obs.drag.get(i, j),
                if class == ReliefClass::LowMountain { 0.8 } else { 0.0 }
            );
        }
    }
    let zero = obstacles_from_height(&HeightField::zeros(5, 5), &t, 0.8);
    assert_eq!(zero.blockage.max(), 0.0);
    assert_eq!(zero.drag.max(), 0.0);
}

fn arb_frame() -> impl Strategy<Value = DepthFrame> {
    (4usize..20, 4usize..20).prop_flat_map(|(w, h)| {
        prop::collection::vec(1000u16..1260, w * h).prop_map(move |v| DepthFrame::new(w, h, v).unwrap())
    })
}

fn arb_block() -> impl Strategy<Value = BlockSpec> {
    (
        prop_oneof![
            Just(ReliefClass::LowMountain),
            Just(ReliefClass::HighMountain),
            Just(ReliefClass::IceSheet)
        ],
        0.0..40.0f64,
        0.0..24.0f64,
        1.0..12.0f64,
        1.0..12.0f64,
        -3.2..3.2f64,
    )
        .prop_map(|(c, x, y, w, h, r)| BlockSpec::new(c, Vec2::new(x, y), (w, h), r))
}

proptest! {
    #[test]
    fn ingestion_is_repeatable(frame in arb_frame()) {
        let dims = (frame.width, frame.height);
        let a = ingest_depth_frame(&frame, &cal(), dims).unwrap();
        let b = ingest_depth_frame(&frame, &cal(), dims).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hands_change_nothing(frame in arb_frame(), picks in prop::collection::vec((0usize..400, 0u16..900), 1..30)) {
        let c = cal();
        let dims = (frame.width, frame.height);
        let base = ingest_depth_frame(&frame, &c, dims).unwrap();
        // Replacing table-depth pixels with near-field readings.
        let mut clean = frame.clone();
        for v in clean.values.iter_mut() {
            if *v > c.far_mm {
                *v = c.table_mm;
            }
        }
        let base_clean = ingest_depth_frame(&clean, &c, dims).unwrap();
        prop_assert_eq!(&base, &base_clean);
        let mut handed = clean.clone();
        for (k, d) in picks {
            let k = k % handed.values.len();
            if handed.values[k] == c.table_mm {
                handed.values[k] = d;
            }
        }
        prop_assert_eq!(ingest_depth_frame(&handed, &c, dims).unwrap(), base);
    }

    #[test]
    fn heights_are_non_negative(frame in arb_frame()) {
        let dims = (frame.width, frame.height);
        let h = ingest_depth_frame(&frame, &cal(), dims).unwrap();
        prop_assert!(h.0.min() >= 0.0);
    }

    #[test]
    fn class_is_monotone(a in 0.0..300.0f64, b in 0.0..300.0f64) {
        let t = Thresholds::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(classify_relief(lo, &t).index() <= classify_relief(hi, &t).index());
    }

    #[test]
    fn block_order_is_irrelevant(blocks in prop::collection::vec(arb_block(), 1..8), rot in 0usize..8) {
        let heights = ClassHeights::default();
        let (a, _) = rasterize_blocks(&blocks, (40, 24), &heights);
        let mut shuffled = blocks.clone();
        shuffled.reverse();
        shuffled.rotate_left(rot % blocks.len());
        let (b, _) = rasterize_blocks(&shuffled, (40, 24), &heights);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn blockage_is_binary_and_drag_only_on_low(blocks in prop::collection::vec(arb_block(), 0..8)) {
        let t = Thresholds::default();
        let (h, _) = rasterize_blocks(&blocks, (40, 24), &ClassHeights::default());
        let obs = obstacles_from_height(&h, &t, 0.8);
        for j in 0..24 {
            for i in 0..40 {
                let b = obs.blockage.get(i, j);
                prop_assert!(b == 0.0 || b == 1.0);
                let low = classify_relief(h.get(i, j), &t) == ReliefClass::LowMountain;
                prop_assert_eq!(obs.drag.get(i, j) > 0.0, low);
            }
        }
    }

    #[test]
    fn median_filter_matches_brute_force(data in prop::collection::vec(0.0..200.0f64, 49), r in 0usize..3) {
        let got = median_filter(&data, 7, 7, r);
        for y in 0..7 {
            for x in 0..7 {
                prop_assert_eq!(got[y * 7 + x], brute_median(&data, 7, 7, r, x, y));
            }
        }
    }
}
