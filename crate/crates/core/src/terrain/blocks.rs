use super::{ClassHeights, HeightField, ReliefClass};
use crate::events::Diagnostic;
use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};

/// A virtual relief block: a rotated rectangle of one category.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub class: ReliefClass,
    /// Center in map cells.
    pub center: Vec2,
    /// Width and height in cells before rotation.
    pub footprint: (f64, f64),
    /// Counter-clockwise rotation in radians.
    pub rotation: f64,
}

impl BlockSpec {
    pub fn new(class: ReliefClass, center: Vec2, footprint: (f64, f64), rotation: f64) -> Self {
        Self {
            class,
            center,
            footprint,
            rotation,
        }
    }

    /// Half extents of the rotated rectangle's bounding box.
    pub fn half_extents(&self) -> Vec2 {
        let (s, c) = self.rotation.sin_cos();
        let (hw, hh) = (self.footprint.0 * 0.5, self.footprint.1 * 0.5);
        Vec2::new(hw * c.abs() + hh * s.abs(), hw * s.abs() + hh * c.abs())
    }

    pub fn covers(&self, p: Vec2) -> bool {
        let local = (p - self.center).rotated(-self.rotation);
        local.x.abs() <= self.footprint.0 * 0.5 && local.y.abs() <= self.footprint.1 * 0.5
    }

    /// Shifts the center so the rotated footprint lies inside the grid.
    /// Returns `None` when no shift was needed.
    fn clamped_into(&self, nx: usize, ny: usize) -> Option<BlockSpec> {
        let half = self.half_extents();
        let clamp_axis = |c: f64, h: f64, n: f64| if 2.0 * h >= n { n * 0.5 } else { c.clamp(h, n - h) };
        let center = Vec2::new(
            clamp_axis(self.center.x, half.x, nx as f64),
            clamp_axis(self.center.y, half.y, ny as f64),
        );
        (center != self.center).then_some(BlockSpec { center, ..*self })
    }
}

/// Rasterizes blocks by cell-center coverage. Overlaps keep the tallest
/// height, so the result does not depend on block order. Blocks reaching
/// past the grid are shifted inside and reported.
pub fn rasterize_blocks(
    blocks: &[BlockSpec],
    dims: (usize, usize),
    heights: &ClassHeights,
) -> (HeightField, Vec<Diagnostic>) {
    let (nx, ny) = dims;
    let mut field = HeightField::zeros(nx, ny);
    let mut events = Vec::new();
    for (index, original) in blocks.iter().enumerate() {
        let block = match original.clamped_into(nx, ny) {
            Some(moved) => {
                events.push(Diagnostic::BlockClamped {
                    index,
                    from: [original.center.x, original.center.y],
                    to: [moved.center.x, moved.center.y],
                });
                moved
            }
            None => *original,
        };
        let h = heights.height_of(block.class);
        let half = block.half_extents();
        let i0 = ((block.center.x - half.x).floor().max(0.0)) as usize;
        let j0 = ((block.center.y - half.y).floor().max(0.0)) as usize;
        let i1 = ((block.center.x + half.x).ceil() as usize).min(nx);
        let j1 = ((block.center.y + half.y).ceil() as usize).min(ny);
        for j in j0..j1 {
            for i in i0..i1 {
                if block.covers(Vec2::new(i as f64 + 0.5, j as f64 + 0.5)) && h > field.get(i, j) {
                    field.0.set(i, j, h);
                }
            }
        }
    }
    (field, events)
}
