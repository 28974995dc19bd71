use super::{HeightField, TerrainError};
use crate::field::Field2;
use serde::{Deserialize, Serialize};

/// One depth image from the overhead camera. Values are millimeters from the
/// camera, rows stored top (north) to bottom (south) as in the image file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, values: Vec<u16>) -> Result<Self, TerrainError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(TerrainError::MalformedFrame(format!(
                "{}x{} frame carries {} samples",
                width,
                height,
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn uniform(width: usize, height: usize, depth_mm: u16) -> Self {
        Self {
            width,
            height,
            values: vec![depth_mm; width * height],
        }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, depth_mm: u16) {
        self.values[row * self.width + col] = depth_mm;
    }
}

/// Depth window and denoising setup for the overhead camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub near_mm: u16,
    pub far_mm: u16,
    pub table_mm: u16,
    pub denoise_radius: usize,
}

impl Default for Calibration {
    fn default() -> Self {
        // Camera about 1.2 m above the table; anything more than 300 mm
        // above the table (hands, heads) falls outside the window.
        Self {
            near_mm: 900,
            far_mm: 1250,
            table_mm: 1200,
            denoise_radius: 1,
        }
    }
}

impl Calibration {
    pub fn validate(&self) -> Result<(), TerrainError> {
        if !(self.near_mm < self.table_mm && self.table_mm <= self.far_mm) {
            return Err(TerrainError::Calibration(format!(
                "need near_mm < table_mm <= far_mm (got {} / {} / {})",
                self.near_mm, self.table_mm, self.far_mm
            )));
        }
        Ok(())
    }
}

/// Converts a raw depth frame into a height field on an `nx` x `ny` grid.
///
/// Depths outside `[near_mm, far_mm]` read as empty table, so hovering hands
/// never register as relief. A median filter removes sensor speckle before
/// the image is area-averaged onto the simulation grid.
pub fn ingest_depth_frame(
    frame: &DepthFrame,
    cal: &Calibration,
    dims: (usize, usize),
) -> Result<HeightField, TerrainError> {
    cal.validate()?;
    if frame.values.len() != frame.width * frame.height {
        return Err(TerrainError::MalformedFrame(format!(
            "header declares {}x{} but {} samples present",
            frame.width,
            frame.height,
            frame.values.len()
        )));
    }
    let table = f64::from(cal.table_mm);
    let heights: Vec<f64> = frame
        .values
        .iter()
        .map(|&d| {
            let d = if d < cal.near_mm || d > cal.far_mm {
                cal.table_mm
            } else {
                d
            };
            (table - f64::from(d)).max(0.0)
        })
        .collect();
    let filtered = median_filter(&heights, frame.width, frame.height, cal.denoise_radius);
    let (nx, ny) = dims;
    let resampled = if (frame.width, frame.height) == dims {
        filtered
    } else {
        resample_area(&filtered, frame.width, frame.height, nx, ny)
    };
    // Image rows run north to south; grid rows run south to north.
    Ok(HeightField(Field2::from_fn(nx, ny, |i, j| {
        resampled[(ny - 1 - j) * nx + i]
    })))
}

/// Median over a `(2r+1)^2` window, shrunk at the image border. Even-sized
/// windows take the upper median.
pub fn median_filter(data: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return data.to_vec();
    }
    let mut out = vec![0.0; data.len()];
    let mut window = Vec::with_capacity((2 * radius + 1).pow(2));
    for row in 0..height {
        let r0 = row.saturating_sub(radius);
        let r1 = (row + radius).min(height - 1);
        for col in 0..width {
            let c0 = col.saturating_sub(radius);
            let c1 = (col + radius).min(width - 1);
            window.clear();
            for r in r0..=r1 {
                window.extend_from_slice(&data[r * width + c0..=r * width + c1]);
            }
            let mid = window.len() / 2;
            let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            out[row * width + col] = *m;
        }
    }
    out
}

/// Per-axis overlap weights mapping `src` samples onto `dst` bins of equal
/// width.
fn overlap_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|k| {
            let lo = k as f64 * scale;
            let hi = (k + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted resampling of a row-major image to `dst_w` x `dst_h`.
pub fn resample_area(data: &[f64], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<f64> {
    let wx = overlap_weights(src_w, dst_w);
    let wy = overlap_weights(src_h, dst_h);
    let mut out = vec![0.0; dst_w * dst_h];
    for (r, row_w) in wy.iter().enumerate() {
        for (c, col_w) in wx.iter().enumerate() {
            let mut acc = 0.0;
            for &(sr, ay) in row_w {
                for &(sc, ax) in col_w {
                    acc += data[sr * src_w + sc] * ax * ay;
                }
            }
            out[r * dst_w + c] = acc;
        }
    }
    out
}
