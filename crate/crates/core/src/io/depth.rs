//! Stereo disparity ingestion and binary 16-bit PGM encode/decode.
//!
//! Disparity files use the encoding where a raw value p > 0 carries the
//! disparity (p − 1)/256 in pixels and p = 0 marks a missing measurement.
//! Invalid pixels stay invalid through the conversion; they never turn into
//! zero or NaN depths.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid};

/// Raw 16-bit disparity image.
#[derive(Clone, Debug, PartialEq)]
pub struct DisparityImage {
    pub raw: Grid<u16>,
}

impl DisparityImage {
    /// Disparity in pixels at a raw value, or None when missing.
    #[inline]
    pub fn decode(p: u16) -> Option<f64> {
        if p == 0 {
            None
        } else {
            Some((p as f64 - 1.0) / 256.0)
        }
    }
}

/// Stereo rig geometry needed for disparity → depth.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraParams {
    pub baseline_m: f64,
    pub focal_px: f64,
}

impl CameraParams {
    pub fn new(baseline_m: f64, focal_px: f64) -> Result<Self> {
        if !(baseline_m > 0.0) || !(focal_px > 0.0) {
            return Err(Error::InvalidConfig(
                "baseline and focal length must be positive".into(),
            ));
        }
        Ok(CameraParams {
            baseline_m,
            focal_px,
        })
    }

    /// The Cityscapes stereo rig. A named default, always overridable.
    pub fn cityscapes() -> Self {
        CameraParams {
            baseline_m: 0.209313,
            focal_px: 2262.52,
        }
    }
}

/// depth = baseline · focal / disparity wherever disparity > 0; everything
/// else is marked invalid.
pub fn disparity_to_depth(img: &DisparityImage, cam: &CameraParams) -> DepthMap {
    let (h, w) = (img.raw.height(), img.raw.width());
    let mut values = Grid::filled(h, w, 0.0);
    let mut valid = Grid::filled(h, w, false);
    let bf = cam.baseline_m * cam.focal_px;
    for (row, col, &p) in img.raw.iter() {
        if let Some(disp) = DisparityImage::decode(p) {
            if disp > 0.0 {
                values.set(row, col, bf / disp);
                valid.set(row, col, true);
            }
        }
    }
    DepthMap { values, valid }
}

/// Write a binary 16-bit PGM (P5, maxval 65535, big-endian samples).
pub fn write_pgm16(path: &Path, data: &Grid<u16>) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n65535\n", data.width(), data.height()).into_bytes();
    bytes.reserve(data.len() * 2);
    for &v in data.data() {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::file_io(path, e))
}

/// Read a binary PGM (P5) with maxval up to 65535. 8-bit files widen to u16.
pub fn read_pgm16(path: &Path) -> Result<Grid<u16>> {
    let bytes = fs::read(path).map_err(|e| Error::file_io(path, e))?;
    parse_pgm16(&bytes).map_err(|reason| Error::corrupt(path, reason))
}

fn parse_pgm16(bytes: &[u8]) -> std::result::Result<Grid<u16>, String> {
    let mut pos = 0usize;

    let mut next_token = |bytes: &[u8]| -> std::result::Result<String, String> {
        // Skip whitespace and # comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(bytes)?;
    if magic != "P5" {
        return Err(format!("expected binary PGM magic P5, found {magic}"));
    }
    let width: usize = next_token(bytes)?
        .parse()
        .map_err(|_| "bad width".to_string())?;
    let height: usize = next_token(bytes)?
        .parse()
        .map_err(|_| "bad height".to_string())?;
    let maxval: u32 = next_token(bytes)?
        .parse()
        .map_err(|_| "bad maxval".to_string())?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // Exactly one whitespace byte separates the header from the samples.
    pos += 1;

    let two_byte = maxval > 255;
    let expected = width * height * if two_byte { 2 } else { 1 };
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() < expected {
        return Err(format!(
            "sample data truncated: expected {expected} bytes, found {}",
            data.len()
        ));
    }

    let mut out = Vec::with_capacity(width * height);
    if two_byte {
        for chunk in data[..expected].chunks_exact(2) {
            out.push(u16::from_be_bytes([chunk[0], chunk[1]]));
        }
    } else {
        out.extend(data[..expected].iter().map(|&b| b as u16));
    }
    Ok(Grid::from_vec(height, width, out))
}

/// Encode a depth map as millimeters: invalid pixels map to 0, valid depths
/// round to the nearest millimeter (clamped into [1, 65535]).
pub fn depth_to_millimeters(depth: &DepthMap) -> Grid<u16> {
    let mut out = Grid::filled(depth.height(), depth.width(), 0u16);
    for row in 0..depth.height() {
        for col in 0..depth.width() {
            if let Some(m) = depth.get(row, col) {
                let mm = (m * 1000.0).round().clamp(1.0, 65535.0);
                out.set(row, col, mm as u16);
            }
        }
    }
    out
}

/// Decode a millimeter-quantized depth image back to meters.
pub fn millimeters_to_depth(mm: &Grid<u16>) -> DepthMap {
    let (h, w) = (mm.height(), mm.width());
    let mut values = Grid::filled(h, w, 0.0);
    let mut valid = Grid::filled(h, w, false);
    for (row, col, &v) in mm.iter() {
        if v > 0 {
            values.set(row, col, v as f64 / 1000.0);
            valid.set(row, col, true);
        }
    }
    DepthMap { values, valid }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disparity_encoding_rules() {
        assert_eq!(DisparityImage::decode(0), None);
        assert_eq!(DisparityImage::decode(1), Some(0.0));
        assert_eq!(DisparityImage::decode(513), Some(2.0));
    }

    #[test]
    fn conversion_formula_and_invalidity() {
        let raw = Grid::from_vec(1, 3, vec![0u16, 1, 513]);
        let img = DisparityImage { raw };
        let cam = CameraParams::new(2.0, 5.0).unwrap();
        let depth = disparity_to_depth(&img, &cam);
        assert_eq!(depth.get(0, 0), None);
        // Raw 1 decodes to disparity 0, which cannot produce a depth.
        assert_eq!(depth.get(0, 1), None);
        assert_eq!(depth.get(0, 2), Some(5.0));
    }

    #[test]
    fn conversion_matches_per_pixel_oracle() {
        let mut raw = Grid::filled(7, 9, 0u16);
        for (i, v) in raw.data_mut().iter_mut().enumerate() {
            *v = ((i * 2654435761) % 65536) as u16;
        }
        let img = DisparityImage { raw: raw.clone() };
        let cam = CameraParams::cityscapes();
        let depth = disparity_to_depth(&img, &cam);
        for (row, col, &p) in raw.iter() {
            let expected = if p > 1 {
                Some(cam.baseline_m * cam.focal_px / ((p as f64 - 1.0) / 256.0))
            } else {
                None
            };
            assert_eq!(depth.get(row, col), expected);
        }
    }

    #[test]
    fn pgm16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let mut data = Grid::filled(3, 5, 0u16);
        for (i, v) in data.data_mut().iter_mut().enumerate() {
            *v = (i * i * 37 % 65536) as u16;
        }
        write_pgm16(&path, &data).unwrap();
        let back = read_pgm16(&path).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn pgm16_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P6\n1 1\n255\n___").unwrap();
        assert!(read_pgm16(&path).is_err());
        std::fs::write(&path, b"P5\n4 4\n65535\nxx").unwrap();
        assert!(read_pgm16(&path).is_err());
    }

    #[test]
    fn millimeter_quantization_bound() {
        let mut depth = DepthMap::filled(1, 64, 0.0);
        for col in 0..64 {
            depth.values.set(0, col, 3.0 + col as f64 * 0.137911);
        }
        depth.valid.set(0, 63, false);
        let mm = depth_to_millimeters(&depth);
        let back = millimeters_to_depth(&mm);
        for col in 0..63 {
            let err = (back.get(0, col).unwrap() - depth.get(0, col).unwrap()).abs();
            assert!(err <= 0.0005 + 1e-12, "quantization error {err}");
        }
        assert_eq!(back.get(0, 63), None);
    }
}
