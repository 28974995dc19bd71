//! Frame images: trails white on black, north up, with optional overlays.

use crate::config::Overlays;
use crate::snapshot::Snapshot;
use std::io::BufWriter;
use std::path::Path;
use thiserror::Error;

const OBSTACLE: [u8; 3] = [70, 140, 255];
const OUTLINE: [u8; 3] = [80, 200, 110];
const TARGET: [u8; 3] = [230, 40, 40];
const MARKER: [u8; 3] = [250, 210, 60];
const STORM: [u8; 3] = [255, 150, 40];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("bad snapshot: {0}")]
    Snapshot(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width * height * 3) as usize],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let k = ((y * self.width + x) * 3) as usize;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let k = ((y as u32 * self.width + x as u32) * 3) as usize;
        self.data[k..k + 3].copy_from_slice(&c);
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, RenderError> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header()?;
            w.write_image_data(&self.data)?;
        }
        Ok(buf)
    }

    pub fn write_png(&self, path: &Path) -> Result<Vec<u8>, RenderError> {
        let bytes = self.encode_png()?;
        let io = |source| RenderError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        std::io::Write::write_all(&mut BufWriter::new(file), &bytes).map_err(io)?;
        Ok(bytes)
    }
}

struct Canvas {
    img: RgbImage,
    scale: f64,
    ny: f64,
}

impl Canvas {
    fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale, (self.ny - y) * self.scale)
    }

    fn line(&mut self, a: [f64; 2], b: [f64; 2], c: [u8; 3]) {
        let (x0, y0) = self.to_px(a[0], a[1]);
        let (x1, y1) = self.to_px(b[0], b[1]);
        let n = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let (x, y) = (x0 + (x1 - x0) * t, y0 + (y1 - y0) * t);
            self.img.put(x.floor() as i64, y.floor() as i64, c);
        }
    }

    fn disc(&mut self, center: [f64; 2], r_cells: f64, c: [u8; 3], ring: bool) {
        let (cx, cy) = self.to_px(center[0], center[1]);
        let r = r_cells * self.scale;
        let inner = if ring { (r - self.scale.max(1.5)).max(0.0) } else { -1.0 };
        let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
        let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
        for py in y0..=y1 {
            for px in x0..=x1 {
                let d = ((px as f64 + 0.5 - cx).powi(2) + (py as f64 + 0.5 - cy).powi(2)).sqrt();
                if d <= r && d > inner {
                    self.img.put(px, py, c);
                }
            }
        }
    }
}

/// Draws `snap` at `scale` pixels per cell. Pixel values depend only on the
/// snapshot contents.
pub fn render(snap: &Snapshot, overlays: &Overlays, scale: u32) -> Result<RgbImage, RenderError> {
    let trail = snap.trail().map_err(RenderError::Snapshot)?;
    let solid = snap.solid().map_err(RenderError::Snapshot)?;
    let (nx, ny) = (snap.nx, snap.ny);
    let s = scale as usize;
    let mut canvas = Canvas {
        img: RgbImage::new((nx * s) as u32, (ny * s) as u32),
        scale: scale as f64,
        ny: ny as f64,
    };
    let is_solid = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && solid[j as usize * nx + i as usize] != 0
    };
    for j in 0..ny {
        let row0 = (ny - 1 - j) * s;
        for i in 0..nx {
            let g = trail[j * nx + i];
            for dy in 0..s {
                for dx in 0..s {
                    canvas.img.put((i * s + dx) as i64, (row0 + dy) as i64, [g, g, g]);
                }
            }
            if !overlays.obstacles || !is_solid(i as isize, j as isize) {
                continue;
            }
            // Outline the edges facing open cells.
            let (ii, jj) = (i as isize, j as isize);
            let in_grid = |a: isize, b: isize| a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny;
            let open = |a: isize, b: isize| in_grid(a, b) && !is_solid(a, b);
            for k in 0..s {
                let (x, y) = ((i * s) as i64, row0 as i64);
                let (k, e) = (k as i64, s as i64 - 1);
                if open(ii - 1, jj) {
                    canvas.img.put(x, y + k, OBSTACLE);
                }
                if open(ii + 1, jj) {
                    canvas.img.put(x + e, y + k, OBSTACLE);
                }
                if open(ii, jj + 1) {
                    canvas.img.put(x + k, y, OBSTACLE);
                }
                if open(ii, jj - 1) {
                    canvas.img.put(x + k, y + e, OBSTACLE);
                }
            }
        }
    }
    if overlays.outline {
        if let Some(outline) = &snap.outline {
            for k in 0..outline.len() {
                canvas.line(outline[k], outline[(k + 1) % outline.len()], OUTLINE);
            }
        }
    }
    if overlays.targets {
        if let Some([x, y]) = snap.targets.o {
            canvas.disc([x, y], 1.5, MARKER, true);
        }
        if let Some([x, y]) = snap.targets.x {
            let d = 2.0;
            canvas.line([x - d, y - d], [x + d, y + d], TARGET);
            canvas.line([x - d, y + d], [x + d, y - d], TARGET);
        }
    }
    if overlays.storms {
        for &(x, y, hit) in &snap.storms {
            canvas.disc([x as f64, y as f64], 1.2, if hit { TARGET } else { STORM }, false);
        }
    }
    Ok(canvas.img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{encode_bytes, FrameMetrics, Targets};

    fn snap(trail: Vec<u8>, solid: Vec<u8>, nx: usize, ny: usize) -> Snapshot {
        Snapshot {
            t: "frame".into(),
            step: 0,
            nx,
            ny,
            particles: vec![],
            storms: vec![],
            trail_b64: encode_bytes(&trail),
            solid_b64: encode_bytes(&solid),
            targets: Targets::default(),
            outline: None,
            metrics: FrameMetrics::default(),
        }
    }

    #[test]
    fn empty_frame_is_black() {
        let img = render(&snap(vec![0; 12], vec![0; 12], 4, 3), &Overlays::default(), 3).unwrap();
        assert_eq!((img.width, img.height), (12, 9));
        assert!(img.data.iter().all(|&b| b == 0));
    }

    #[test]
    fn full_intensity_cell_is_a_white_block() {
        let mut trail = vec![0; 12];
        trail[4 + 1] = 255; // cell (1, 1)
        let img = render(&snap(trail, vec![0; 12], 4, 3), &Overlays::none(), 3).unwrap();
        for y in 0..9 {
            for x in 0..12 {
                let white = (3..6).contains(&x) && (3..6).contains(&y);
                assert_eq!(img.pixel(x, y), if white { [255; 3] } else { [0; 3] }, "({x},{y})");
            }
        }
    }

    #[test]
    fn north_is_up_and_solids_are_outlined() {
        let mut solid = vec![0; 12];
        solid[2 * 4 + 3] = 1; // cell (3, 2): north-east corner
        let img = render(&snap(vec![0; 12], solid, 4, 3), &Overlays::default(), 2).unwrap();
        // West and south edges face open cells; the others face the border.
        assert_eq!(img.pixel(6, 0), OBSTACLE);
        assert_eq!(img.pixel(6, 1), OBSTACLE);
        assert_eq!(img.pixel(7, 1), OBSTACLE);
        assert_eq!(img.pixel(7, 0), [0; 3]);
    }

    #[test]
    fn short_trail_is_rejected() {
        let bad = snap(vec![0; 5], vec![0; 12], 4, 3);
        assert!(render(&bad, &Overlays::default(), 1).is_err());
    }
}
