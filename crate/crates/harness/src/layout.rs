use crate::config::{BlockClass, BlockEntry, DepthSource, LayoutConfig, RandomLayout, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use winds_core::terrain::{
    ingest_depth_frame, pgm, rasterize_blocks, BlockSpec, Calibration, ClassHeights, DepthFrame, HeightField,
    TerrainError,
};
use winds_core::{Diagnostic, Vec2};

const LAYOUT_STREAM: u64 = 5;

pub fn to_spec(b: &BlockEntry, default_size: [f64; 2]) -> BlockSpec {
    BlockSpec::new(
        b.class.into(),
        Vec2::new(b.x, b.y),
        (b.w.unwrap_or(default_size[0]), b.h.unwrap_or(default_size[1])),
        b.rot,
    )
}

/// Random blocks: uniform class, footprint sides in `[min_size, max_size]`,
/// rotation in `[0, pi)`, centers away from the west inflow edge.
pub fn random_blocks(r: &RandomLayout, seed: u64, dims: (usize, usize)) -> Vec<BlockEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed.unwrap_or(seed));
    rng.set_stream(LAYOUT_STREAM);
    let (nx, ny) = (dims.0 as f64, dims.1 as f64);
    (0..r.count)
        .map(|_| {
            let class = [BlockClass::Low, BlockClass::High, BlockClass::Ice][rng.random_range(0..3)];
            let w = rng.random_range(r.min_size..=r.max_size);
            let h = rng.random_range(r.min_size..=r.max_size);
            BlockEntry {
                class,
                x: rng.random_range(0.1 * nx..0.95 * nx),
                y: rng.random_range(0.0..ny),
                rot: rng.random_range(0.0..std::f64::consts::PI),
                w: Some(w),
                h: Some(h),
            }
        })
        .collect()
}

/// Every block of a layout section, listed blocks first.
pub fn layout_blocks(layout: &LayoutConfig, seed: u64, dims: (usize, usize)) -> Vec<BlockEntry> {
    let mut blocks = layout.blocks.clone();
    if let Some(r) = &layout.random {
        blocks.extend(random_blocks(r, seed, dims));
    }
    blocks
}

pub fn rasterize_entries(
    blocks: &[BlockEntry],
    block_size: [f64; 2],
    dims: (usize, usize),
    heights: &ClassHeights,
) -> (HeightField, Vec<Diagnostic>) {
    let specs: Vec<BlockSpec> = blocks.iter().map(|b| to_spec(b, block_size)).collect();
    rasterize_blocks(&specs, dims, heights)
}

/// Mirror image about the horizontal midline of the grid.
pub fn mirror_blocks(blocks: &[BlockEntry], ny: usize) -> Vec<BlockEntry> {
    blocks
        .iter()
        .map(|b| BlockEntry {
            y: ny as f64 - b.y,
            rot: -b.rot,
            ..*b
        })
        .collect()
}

/// Steps through a directory of depth frames.
#[derive(Clone, Debug)]
pub struct DepthFeed {
    paths: Vec<PathBuf>,
    source: DepthSource,
    calibration: Calibration,
    dims: (usize, usize),
    current: usize,
}

impl DepthFeed {
    pub fn open(cfg: &ScenarioConfig, source: &DepthSource) -> Result<Self, TerrainError> {
        let dir = cfg.resolve(&source.dir);
        let paths = pgm::sequence_paths(&dir)?;
        if paths.is_empty() {
            return Err(TerrainError::MalformedFrame(format!(
                "no depth frames in {}",
                dir.display()
            )));
        }
        Ok(Self {
            paths,
            source: source.clone(),
            calibration: cfg.terrain.calibration,
            dims: cfg.grid.dims(),
            current: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn load(&self, index: usize) -> Result<HeightField, TerrainError> {
        let frame = pgm::read(&self.paths[index])?;
        ingest_depth_frame(&frame, &self.calibration, self.dims)
    }

    /// The frame index in effect at `step`.
    pub fn index_at(&self, step: u64) -> usize {
        let k = (step / self.source.steps_per_frame) as usize;
        if self.source.repeat {
            k % self.paths.len()
        } else {
            k.min(self.paths.len() - 1)
        }
    }

    /// The new height field when `step` moves to another frame.
    pub fn advance(&mut self, step: u64) -> Result<Option<HeightField>, TerrainError> {
        let k = self.index_at(step);
        if k == self.current {
            return Ok(None);
        }
        self.current = k;
        self.load(k).map(Some)
    }
}

/// A camera frame of `width` x `height` pixels looking down at `h`.
/// Pixel rows run north to south, as a camera image would.
pub fn synthesize_depth(h: &HeightField, cal: &Calibration, width: usize, height: usize) -> DepthFrame {
    let (nx, ny) = h.dims();
    let mut values = Vec::with_capacity(width * height);
    for row in 0..height {
        let j = ny - 1 - (row * ny / height);
        for col in 0..width {
            let i = col * nx / width;
            let mm = h.get(i, j).round().clamp(0.0, f64::from(cal.table_mm)) as u16;
            values.push(cal.table_mm - mm);
        }
    }
    DepthFrame::new(width, height, values).expect("sizes agree")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_layout_is_seeded() {
        let r = RandomLayout::default();
        let a = random_blocks(&r, 42, (192, 108));
        assert_eq!(a.len(), 12);
        assert_eq!(a, random_blocks(&r, 42, (192, 108)));
        assert_ne!(a, random_blocks(&r, 43, (192, 108)));
        assert!(a.iter().all(|b| b.x >= 19.2 && b.x < 182.4));
    }

    #[test]
    fn mirroring_twice_is_identity() {
        let r = RandomLayout::default();
        let a = random_blocks(&r, 7, (192, 108));
        let back = mirror_blocks(&mirror_blocks(&a, 108), 108);
        for (x, y) in a.iter().zip(&back) {
            assert!((x.y - y.y).abs() < 1e-12 && x.rot == y.rot && x.x == y.x);
        }
    }

    #[test]
    fn synthetic_depth_reads_back() {
        let heights = ClassHeights::default();
        let blocks = [BlockEntry {
            class: BlockClass::High,
            x: 20.0,
            y: 10.0,
            rot: 0.0,
            w: Some(8.0),
            h: Some(6.0),
        }];
        let (h, _) = rasterize_entries(&blocks, [1.0, 1.0], (40, 24), &heights);
        let cal = Calibration {
            denoise_radius: 0,
            ..Calibration::default()
        };
        let frame = synthesize_depth(&h, &cal, 40, 24);
        let back = ingest_depth_frame(&frame, &cal, (40, 24)).unwrap();
        assert_eq!(back, h);
    }
}
