//! Binary PGM (P5) depth frames. Samples wider than one byte are stored
//! big-endian; frames are always written with maxval 65535.

use super::{DepthFrame, TerrainError};
use std::fs;
use std::path::{Path, PathBuf};

pub fn encode(frame: &DepthFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", frame.width, frame.height).into_bytes();
    out.reserve(frame.values.len() * 2);
    for v in &frame.values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, TerrainError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| TerrainError::MalformedFrame(format!("bad PGM {what}")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<DepthFrame, TerrainError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(TerrainError::MalformedFrame("missing P5 magic".into()));
    }
    let mut header = Header { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(TerrainError::MalformedFrame(format!("maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if header.pos >= bytes.len() || !bytes[header.pos].is_ascii_whitespace() {
        return Err(TerrainError::MalformedFrame("truncated header".into()));
    }
    let raster = &bytes[header.pos + 1..];
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * sample_bytes;
    if raster.len() != expected {
        return Err(TerrainError::MalformedFrame(format!(
            "header declares {width}x{height} ({expected} bytes) but raster has {} bytes",
            raster.len()
        )));
    }
    let values: Vec<u16> = if sample_bytes == 1 {
        raster.iter().map(|&b| u16::from(b)).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(v) = values.iter().find(|&&v| usize::from(v) > maxval) {
        return Err(TerrainError::MalformedFrame(format!(
            "sample {v} exceeds maxval {maxval}"
        )));
    }
    DepthFrame::new(width, height, values)
}

fn io_err(path: &Path, source: std::io::Error) -> TerrainError {
    TerrainError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read(path: &Path) -> Result<DepthFrame, TerrainError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, frame: &DepthFrame) -> Result<(), TerrainError> {
    fs::write(path, encode(frame)).map_err(|e| io_err(path, e))
}

/// Frame files of a sequence directory in playback order. Names are
/// zero-padded, so lexical order is numeric order.
pub fn sequence_paths(dir: &Path) -> Result<Vec<PathBuf>, TerrainError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn sequence_file_name(index: usize) -> String {
    format!("frame_{index:05}.pgm")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_is_big_endian_p5() {
        let frame = DepthFrame::new(2, 1, vec![0x0102, 0xfffe]).unwrap();
        let bytes = encode(&frame);
        assert_eq!(&bytes[..bytes.len() - 4], b"P5\n2 1\n65535\n");
        assert_eq!(&bytes[bytes.len() - 4..], &[0x01, 0x02, 0xff, 0xfe]);
        assert_eq!(decode(&bytes).unwrap(), frame);
    }

    #[test]
    fn decode_accepts_comments_and_8bit() {
        let mut bytes = b"P5 # depth\n# more\n3 1 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let frame = decode(&bytes).unwrap();
        assert_eq!(frame.values, vec![1, 2, 3]);
    }

    #[test]
    fn short_raster_rejected_with_diagnostic() {
        let mut bytes = b"P5\n4 4\n65535\n".to_vec();
        bytes.extend_from_slice(&[0u8; 30]);
        let err = decode(&bytes).unwrap_err().to_string();
        assert!(err.contains("4x4"), "{err}");
    }

    #[test]
    fn wrong_magic_rejected() {
        assert!(decode(b"P2\n1 1\n255\n0").is_err());
    }
}
