use super::{ModeError, ShapeLibrary};
use crate::events::Diagnostic;
use crate::geometry::{Bounds, Polygon, Vec2};
use crate::terrain::HeightField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_PLACEMENT_ATTEMPTS: u32 = 100;
const MIN_WIDTH_FRACTION: f64 = 0.25;
const MAX_WIDTH_FRACTION: f64 = 0.40;
/// Outlines must fit inside this central share of each axis.
const CENTRAL_FRACTION: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct Nonameland {
    pub shape_index: usize,
    /// Radians, counter-clockwise.
    pub rotation: f64,
    pub flip_h: bool,
    pub flip_v: bool,
    /// Outline in grid cells.
    pub outline: Polygon,
    /// Cells whose centre lies inside the outline, at `height` mm.
    pub overlay: HeightField,
    pub fallback: bool,
}

impl Nonameland {
    pub fn tuple(&self) -> (usize, f64, bool, bool) {
        (self.shape_index, self.rotation, self.flip_h, self.flip_v)
    }
}

/// Flips and rotates a unit-box outline about its centre.
fn orient(shape: &Polygon, rotation: f64, flip_h: bool, flip_v: bool) -> Polygon {
    let c = shape.bounds().center();
    shape.map(|p| {
        let mut d = p - c;
        if flip_h {
            d.x = -d.x;
        }
        if flip_v {
            d.y = -d.y;
        }
        d.rotated(rotation)
    })
}

/// Scales `shape` so its bounding box is `width` cells wide and moves the
/// box's lower-left corner to `origin`.
fn fit(shape: &Polygon, width: f64, origin: Vec2) -> Polygon {
    let b = shape.bounds();
    let k = width / b.width();
    shape.map(|p| origin + (p - b.min) * k)
}

/// Builds the Moving Mountains landmass for `seed`. Each attempt draws a
/// shape, a uniform rotation, two fair flips and a width of 25 to 40% of
/// the grid, then a uniform position; it succeeds when the outline fits in
/// the central 80% of both axes. After 100 failures the first shape is
/// used unrotated, centred, at the largest width that fits.
pub fn generate_nonameland(
    seed: u64,
    lib: &ShapeLibrary,
    dims: (usize, usize),
    height_mm: f64,
) -> Result<(Nonameland, Vec<Diagnostic>), ModeError> {
    if lib.is_empty() {
        return Err(ModeError::EmptyLibrary);
    }
    let (w, h) = (dims.0 as f64, dims.1 as f64);
    let margin = Vec2::new(w, h) * ((1.0 - CENTRAL_FRACTION) / 2.0);
    let (room_w, room_h) = (w * CENTRAL_FRACTION, h * CENTRAL_FRACTION);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4);

    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let shape_index = rng.random_range(0..lib.len());
        let rotation = rng.random_range(0.0..std::f64::consts::TAU);
        let flip_h = rng.random_bool(0.5);
        let flip_v = rng.random_bool(0.5);
        let width = w * rng.random_range(MIN_WIDTH_FRACTION..=MAX_WIDTH_FRACTION);
        let oriented = orient(&lib.shapes[shape_index].outline, rotation, flip_h, flip_v);
        let b = oriented.bounds();
        let height = b.height() * width / b.width();
        if width > room_w || height > room_h {
            continue;
        }
        let origin = margin
            + Vec2::new(
                rng.random_range(0.0..=room_w - width),
                rng.random_range(0.0..=room_h - height),
            );
        let outline = fit(&oriented, width, origin);
        if !inside(&outline.bounds(), margin, room_w, room_h) {
            continue;
        }
        let overlay = rasterize(&outline, dims, height_mm);
        return Ok((
            Nonameland {
                shape_index,
                rotation,
                flip_h,
                flip_v,
                outline,
                overlay,
                fallback: false,
            },
            Vec::new(),
        ));
    }

    let shape = &lib.shapes[0].outline;
    let b = shape.bounds();
    let width = (w * MIN_WIDTH_FRACTION).min(room_h * b.width() / b.height());
    let height = b.height() * width / b.width();
    let origin = Vec2::new((w - width) / 2.0, (h - height) / 2.0);
    let outline = fit(shape, width, origin);
    let overlay = rasterize(&outline, dims, height_mm);
    Ok((
        Nonameland {
            shape_index: 0,
            rotation: 0.0,
            flip_h: false,
            flip_v: false,
            outline,
            overlay,
            fallback: true,
        },
        vec![Diagnostic::NonamelandFallback {
            seed,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        }],
    ))
}

/// Bounds check with a little slack for rounding in `fit`.
fn inside(b: &Bounds, margin: Vec2, room_w: f64, room_h: f64) -> bool {
    const EPS: f64 = 1e-9;
    b.min.x >= margin.x - EPS
        && b.min.y >= margin.y - EPS
        && b.max.x <= margin.x + room_w + EPS
        && b.max.y <= margin.y + room_h + EPS
}

fn rasterize(outline: &Polygon, dims: (usize, usize), height_mm: f64) -> HeightField {
    let mut f = HeightField::zeros(dims.0, dims.1);
    let b = outline.bounds();
    let i0 = b.min.x.floor().max(0.0) as usize;
    let j0 = b.min.y.floor().max(0.0) as usize;
    let i1 = (b.max.x.ceil().max(0.0) as usize).min(dims.0);
    let j1 = (b.max.y.ceil().max(0.0) as usize).min(dims.1);
    for j in j0..j1 {
        for i in i0..i1 {
            if outline.contains(Vec2::new(i as f64 + 0.5, j as f64 + 0.5)) {
                f.0.set(i, j, height_mm);
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_land() {
        let lib = ShapeLibrary::builtin();
        let (a, _) = generate_nonameland(5, &lib, (192, 108), 30.0).unwrap();
        let (b, _) = generate_nonameland(5, &lib, (192, 108), 30.0).unwrap();
        assert_eq!(a, b);
        assert!(!a.fallback);
        assert!(a.overlay.0.max() == 30.0);
    }

    #[test]
    fn impossible_fit_falls_back() {
        // A shape far taller than wide cannot reach 25% of a very wide grid
        // without overflowing the central band vertically.
        let text = "[[shape]]\nname = \"pole\"\npoints = [[0.45,0],[0.5,0],[0.55,0],[0.55,0.5],[0.55,1],[0.5,1],[0.45,1],[0.45,0.5]]\n";
        let lib = ShapeLibrary::from_toml(text).unwrap();
        let (land, diags) = generate_nonameland(1, &lib, (400, 10), 30.0).unwrap();
        assert!(land.fallback);
        assert_eq!(diags, vec![Diagnostic::NonamelandFallback { seed: 1, attempts: 100 }]);
        assert!(inside(&land.outline.bounds(), Vec2::new(40.0, 1.0), 320.0, 8.0));
    }
}
