use super::{HeightField, ObstacleField, TerrainError};
use crate::field::Field2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliefClass {
    Empty,
    LowMountain,
    HighMountain,
    IceSheet,
}

impl ReliefClass {
    /// Ordinal in increasing height order.
    pub fn index(self) -> u8 {
        self as u8
    }

    /// Short protocol name (`low`, `high`, `ice`).
    pub fn short_name(self) -> &'static str {
        match self {
            ReliefClass::Empty => "empty",
            ReliefClass::LowMountain => "low",
            ReliefClass::HighMountain => "high",
            ReliefClass::IceSheet => "ice",
        }
    }

    pub fn from_short_name(name: &str) -> Option<Self> {
        match name {
            "low" => Some(ReliefClass::LowMountain),
            "high" => Some(ReliefClass::HighMountain),
            "ice" => Some(ReliefClass::IceSheet),
            _ => None,
        }
    }

    pub fn is_wall(self) -> bool {
        matches!(self, ReliefClass::HighMountain | ReliefClass::IceSheet)
    }
}

/// Height thresholds (mm). Intervals are half-open; a height equal to a
/// threshold belongs to the higher class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThresholds")]
pub struct Thresholds {
    low: f64,
    high: f64,
    ice: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    low: f64,
    high: f64,
    ice: f64,
}

impl TryFrom<RawThresholds> for Thresholds {
    type Error = TerrainError;
    fn try_from(raw: RawThresholds) -> Result<Self, Self::Error> {
        Thresholds::new(raw.low, raw.high, raw.ice)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low: 20.0,
            high: 60.0,
            ice: 120.0,
        }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64, ice: f64) -> Result<Self, TerrainError> {
        if !(0.0 < low && low < high && high < ice) {
            return Err(TerrainError::Thresholds { low, high, ice });
        }
        Ok(Self { low, high, ice })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn ice(&self) -> f64 {
        self.ice
    }
}

pub fn classify_relief(height_mm: f64, t: &Thresholds) -> ReliefClass {
    if height_mm >= t.ice {
        ReliefClass::IceSheet
    } else if height_mm >= t.high {
        ReliefClass::HighMountain
    } else if height_mm >= t.low {
        ReliefClass::LowMountain
    } else {
        ReliefClass::Empty
    }
}

/// High mountains and ice sheets become solid walls; low mountains are
/// porous and only add drag.
pub fn obstacles_from_height(h: &HeightField, t: &Thresholds, drag_low: f64) -> ObstacleField {
    let (nx, ny) = h.dims();
    let mut blockage = Field2::new(nx, ny, 0.0);
    let mut drag = Field2::new(nx, ny, 0.0);
    for j in 0..ny {
        for i in 0..nx {
            match classify_relief(h.get(i, j), t) {
                ReliefClass::Empty => {}
                ReliefClass::LowMountain => drag.set(i, j, drag_low.max(0.0)),
                ReliefClass::HighMountain | ReliefClass::IceSheet => blockage.set(i, j, 1.0),
            }
        }
    }
    ObstacleField { blockage, drag }
}
