use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_bytes, write_atomic};
use crate::speckle::BModeFrame;

/// Metadata stored beside the frame images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
    /// Physical position (mm) of pixel (0, 0).
    pub grid_origin: [f64; 2],
    pub n_frames: usize,
}

pub fn frame_file_name(t: usize) -> String {
    format!("frame_{t:04}.pgm")
}

pub fn encode_pgm(frame: &BModeFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.intensities);
    out
}

/// Parses a binary 8-bit PGM; pitch and frame index come from elsewhere.
pub fn decode_pgm(bytes: &[u8], pixel_pitch: f64, frame_index: usize) -> Result<BModeFrame> {
    let record = format!("frame {frame_index}");
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(record, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::format(record, "not a binary PGM (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::format(&record, format!("bad header value {s:?}")));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(Error::format(record, format!("maxval must be 255, got {maxval}")));
    }
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() != w * h {
        return Err(Error::format(record, format!("expected {} pixels, found {}", w * h, data.len())));
    }
    BModeFrame::new(w, h, pixel_pitch, frame_index, data.to_vec())
}

pub fn write_pgm(path: &Path, frame: &BModeFrame) -> Result<()> {
    write_atomic(path, &encode_pgm(frame))
}

pub fn read_pgm(path: &Path, pixel_pitch: f64, frame_index: usize) -> Result<BModeFrame> {
    decode_pgm(&read_bytes(path)?, pixel_pitch, frame_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let f = BModeFrame::new(3, 2, 0.25, 7, vec![0, 10, 32, 255, 9, 13]).unwrap();
        let bytes = encode_pgm(&f);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(decode_pgm(&bytes, 0.25, 7).unwrap(), f);
        assert!(decode_pgm(&bytes[..bytes.len() - 1], 0.25, 7).is_err());
        assert_eq!(frame_file_name(7), "frame_0007.pgm");
    }
}
