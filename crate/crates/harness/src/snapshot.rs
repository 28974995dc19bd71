//! One frame of a run: everything the renderer and a UI client need.
//! Serialized, it is both the snapshot file format and the protocol's
//! `frame` message.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o: Option<[f64; 2]>,
    #[serde(default)]
    pub hit_radius: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub mean_speed: f64,
    pub max_divergence: Option<f64>,
    pub storm_hits: u64,
    pub mean_storm_lat: Option<f64>,
    pub lgm_coverage: f64,
    pub obstacle_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Always `"frame"`.
    pub t: String,
    pub step: u64,
    pub nx: usize,
    pub ny: usize,
    pub particles: Vec<[f32; 2]>,
    /// `[x, y, hit]`.
    pub storms: Vec<(f32, f32, bool)>,
    /// One byte per cell, row 0 south.
    pub trail_b64: String,
    /// One byte per cell, 1 where solid.
    pub solid_b64: String,
    pub targets: Targets,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outline: Option<Vec<[f64; 2]>>,
    pub metrics: FrameMetrics,
}

pub fn encode_bytes(bytes: &[u8]) -> String {
    B64.encode(bytes)
}

/// Short hex digest of a solid mask.
pub fn obstacle_digest(solid: &[u8]) -> String {
    let d = Sha256::digest(solid);
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Snapshot {
    fn decode(&self, field: &str, text: &str) -> Result<Vec<u8>, String> {
        let bytes = B64.decode(text).map_err(|e| format!("{field}: {e}"))?;
        if bytes.len() != self.nx * self.ny {
            return Err(format!(
                "{field}: {} bytes for a {}x{} grid",
                bytes.len(),
                self.nx,
                self.ny
            ));
        }
        Ok(bytes)
    }

    pub fn trail(&self) -> Result<Vec<u8>, String> {
        self.decode("trail_b64", &self.trail_b64)
    }

    pub fn solid(&self) -> Result<Vec<u8>, String> {
        self.decode("solid_b64", &self.solid_b64)
    }

    pub fn read(path: &Path) -> Result<Self, SnapshotError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SnapshotError::Io {
            path: name.clone(),
            source,
        })?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| SnapshotError::Format {
            path: name.clone(),
            message: e.to_string(),
        })?;
        for check in [snap.trail(), snap.solid()] {
            check.map_err(|message| SnapshotError::Format {
                path: name.clone(),
                message,
            })?;
        }
        Ok(snap)
    }

    pub fn write(&self, path: &Path) -> Result<(), SnapshotError> {
        let text = serde_json::to_string(self).expect("snapshot serializes");
        std::fs::write(path, text).map_err(|source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
