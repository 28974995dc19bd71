//! Tabletop relief: depth frames and virtual block layouts become calibrated
//! height fields, which are classified into obstacle fields for the engines.

mod blocks;
mod classify;
mod depth;
pub mod pgm;

pub use blocks::{rasterize_blocks, BlockSpec};
pub use classify::{classify_relief, obstacles_from_height, ReliefClass, Thresholds};
pub use depth::{ingest_depth_frame, median_filter, resample_area, Calibration, DepthFrame};

use crate::field::Field2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TerrainError {
    #[error("invalid calibration: {0}")]
    Calibration(String),
    #[error("thresholds must satisfy 0 < low < high < ice (got {low}, {high}, {ice})")]
    Thresholds { low: f64, high: f64, ice: f64 },
    #[error("malformed depth frame: {0}")]
    MalformedFrame(String),
    #[error("depth frame i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Relief height above the empty table, in millimeters.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField(pub Field2);

impl HeightField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self(Field2::new(nx, ny, 0.0))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Cell-wise maximum with another field of the same size.
    pub fn max_with(&mut self, other: &HeightField) {
        assert_eq!(self.dims(), other.dims());
        for (a, b) in self.0.as_mut_slice().iter_mut().zip(other.0.as_slice()) {
            *a = a.max(*b);
        }
    }

    /// Mirror about the horizontal midline.
    pub fn mirrored_y(&self) -> HeightField {
        let (nx, ny) = self.dims();
        HeightField(Field2::from_fn(nx, ny, |i, j| self.0.get(i, ny - 1 - j)))
    }
}

/// Nominal heights of each block category.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassHeights {
    pub low: f64,
    pub high: f64,
    pub ice: f64,
}

impl Default for ClassHeights {
    fn default() -> Self {
        Self {
            low: 30.0,
            high: 90.0,
            ice: 150.0,
        }
    }
}

impl ClassHeights {
    pub fn height_of(&self, class: ReliefClass) -> f64 {
        match class {
            ReliefClass::Empty => 0.0,
            ReliefClass::LowMountain => self.low,
            ReliefClass::HighMountain => self.high,
            ReliefClass::IceSheet => self.ice,
        }
    }
}

/// Per-cell blockage (1 = solid) and porous drag (1/model-s).
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleField {
    pub blockage: Field2,
    pub drag: Field2,
}

impl ObstacleField {
    pub fn empty(nx: usize, ny: usize) -> Self {
        Self {
            blockage: Field2::new(nx, ny, 0.0),
            drag: Field2::new(nx, ny, 0.0),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.blockage.dims()
    }

    #[inline]
    pub fn is_solid(&self, i: usize, j: usize) -> bool {
        self.blockage.get(i, j) >= 0.5
    }

    /// Solid test for a continuous map position; outside the grid is not solid.
    pub fn is_solid_at(&self, x: f64, y: f64) -> bool {
        let (nx, ny) = self.dims();
        if !(x >= 0.0 && y >= 0.0 && x < nx as f64 && y < ny as f64) {
            return false;
        }
        self.is_solid(x as usize, y as usize)
    }

    pub fn solid_count(&self) -> usize {
        self.blockage.as_slice().iter().filter(|&&b| b >= 0.5).count()
    }

    /// Marks a rectangle of cells solid. Used by tests and scripted layouts.
    pub fn with_solid_rect(mut self, i0: usize, j0: usize, i1: usize, j1: usize) -> Self {
        for j in j0..j1 {
            for i in i0..i1 {
                self.blockage.set(i, j, 1.0);
                self.drag.set(i, j, 0.0);
            }
        }
        self
    }
}
