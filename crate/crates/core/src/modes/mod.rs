//! The two interaction modes: Ice Age (rebuild the ice sheets inside the
//! shaded zone) and Moving Mountains (steer storms around a random
//! landmass toward a random target).

mod nonameland;

pub use nonameland::{generate_nonameland, Nonameland, MAX_PLACEMENT_ATTEMPTS};

use crate::geometry::{Polygon, Vec2};
use crate::terrain::{classify_relief, HeightField, ObstacleField, ReliefClass, Thresholds};
use crate::windsim::GridSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SHAPES_TOML: &str = include_str!("../../assets/shapes.toml");
const ICE_AGE_TOML: &str = include_str!("../../assets/ice_age.toml");

#[derive(Debug, Error)]
pub enum ModeError {
    #[error("asset parse error: {0}")]
    Asset(#[from] toml::de::Error),
    #[error("shape {name}: {reason}")]
    BadShape { name: String, reason: String },
    #[error("ice-age zone: {0}")]
    BadZone(String),
    #[error("shape library is empty")]
    EmptyLibrary,
    #[error("no storms exited the {0} run; diversion is undefined")]
    NoExits(&'static str),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    IceAge,
    MovingMountains,
}

/// Mode settings from a scenario file. Geometry not given here comes from
/// the bundled assets or, for Moving Mountains, from the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeConfig {
    pub mode: Mode,
    /// Seed for Nonameland and the random target. Defaults to the run seed.
    pub seed: Option<u64>,
    /// Storm hit radius, cells.
    pub hit_radius: f64,
    /// Overrides the target, in grid cells.
    pub x_target: Option<[f64; 2]>,
    /// Coverage at which the LGM counts as rebuilt.
    pub lgm_success: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self {
            mode: Mode::IceAge,
            seed: None,
            hit_radius: 4.0,
            x_target: None,
            lgm_success: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedShape {
    pub name: String,
    /// Outline in the unit box.
    pub outline: Polygon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeLibrary {
    pub shapes: Vec<NamedShape>,
}

#[derive(Deserialize)]
struct ShapesFile {
    shape: Vec<ShapeRecord>,
}

#[derive(Deserialize)]
struct ShapeRecord {
    name: String,
    points: Vec<[f64; 2]>,
}

impl ShapeLibrary {
    pub fn builtin() -> Self {
        Self::from_toml(SHAPES_TOML).expect("bundled shapes are valid")
    }

    /// Parses `[[shape]]` records and checks each outline is simple with at
    /// least eight vertices.
    pub fn from_toml(text: &str) -> Result<Self, ModeError> {
        let file: ShapesFile = toml::from_str(text)?;
        let mut shapes = Vec::new();
        for rec in file.shape {
            let outline = Polygon::from_points(&rec.points);
            let reason = if outline.len() < 8 {
                Some(format!("{} vertices, need at least 8", outline.len()))
            } else if !outline.is_simple() {
                Some("outline self-intersects".to_string())
            } else if outline.is_degenerate() {
                Some("zero area".to_string())
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(ModeError::BadShape { name: rec.name, reason });
            }
            shapes.push(NamedShape {
                name: rec.name,
                outline,
            });
        }
        if shapes.is_empty() {
            return Err(ModeError::EmptyLibrary);
        }
        Ok(Self { shapes })
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct Marker {
    #[serde(default)]
    pub label: Option<String>,
    pub pos: [f64; 2],
}

/// Ice Age overlay data, in normalised map coordinates.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct IceAgeAssets {
    pub lon_west: f64,
    pub lon_east: f64,
    pub lat_south: f64,
    pub lat_north: f64,
    pub lgm_zone: Vec<[f64; 2]>,
    pub o_marker: Marker,
    pub x_target: Marker,
}

impl IceAgeAssets {
    pub fn builtin() -> Self {
        Self::from_toml(ICE_AGE_TOML).expect("bundled ice-age assets are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ModeError> {
        let assets: IceAgeAssets = toml::from_str(text)?;
        let zone = Polygon::from_points(&assets.lgm_zone);
        if zone.len() < 3 || zone.is_degenerate() {
            return Err(ModeError::BadZone(
                "needs at least three vertices and non-zero area".into(),
            ));
        }
        if !zone.is_simple() {
            return Err(ModeError::BadZone("outline self-intersects".into()));
        }
        Ok(assets)
    }

    /// Zone outline in grid cells.
    pub fn zone_on(&self, grid: &GridSpec) -> Polygon {
        Polygon::from_points(&self.lgm_zone).map(|p| to_grid(p, grid))
    }

    pub fn o_marker_on(&self, grid: &GridSpec) -> Vec2 {
        to_grid(Vec2::new(self.o_marker.pos[0], self.o_marker.pos[1]), grid)
    }

    pub fn x_target_on(&self, grid: &GridSpec) -> Vec2 {
        to_grid(Vec2::new(self.x_target.pos[0], self.x_target.pos[1]), grid)
    }
}

/// Unit-box map coordinates to grid cells.
pub fn to_grid(p: Vec2, grid: &GridSpec) -> Vec2 {
    Vec2::new(p.x * grid.nx as f64, p.y * grid.ny as f64)
}

/// Uniform point in the middle half of the grid in both axes, re-drawn
/// while it falls in a solid cell. After 1000 solid draws the last point
/// is returned as is.
pub fn place_target(seed: u64, grid: &GridSpec, obs: Option<&ObstacleField>) -> Vec2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let (w, h) = (grid.nx as f64, grid.ny as f64);
    let mut p = Vec2::new(w / 2.0, h / 2.0);
    for _ in 0..1000 {
        p = Vec2::new(
            rng.random_range(0.25 * w..0.75 * w),
            rng.random_range(0.25 * h..0.75 * h),
        );
        match obs {
            Some(o) if o.is_solid_at(p.x, p.y) => continue,
            _ => break,
        }
    }
    p
}

/// Share of zone cells (by cell centre) classed as high mountain or ice.
/// An empty zone gives 0.
pub fn lgm_coverage(h: &HeightField, zone: &Polygon, thresholds: &Thresholds) -> f64 {
    let (nx, ny) = h.dims();
    let (mut inside, mut covered) = (0usize, 0usize);
    for j in 0..ny {
        for i in 0..nx {
            if !zone.contains(Vec2::new(i as f64 + 0.5, j as f64 + 0.5)) {
                continue;
            }
            inside += 1;
            if matches!(
                classify_relief(h.get(i, j), thresholds),
                ReliefClass::HighMountain | ReliefClass::IceSheet
            ) {
                covered += 1;
            }
        }
    }
    if inside == 0 {
        0.0
    } else {
        covered as f64 / inside as f64
    }
}

/// Mean baseline exit latitude minus mean test exit latitude, in degrees.
/// Positive means storms left further south in the test run.
pub fn southward_diversion(baseline_lats: &[f64], test_lats: &[f64]) -> Result<f64, ModeError> {
    if baseline_lats.is_empty() {
        return Err(ModeError::NoExits("baseline"));
    }
    if test_lats.is_empty() {
        return Err(ModeError::NoExits("test"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(baseline_lats) - mean(test_lats))
}
