//! Image export in two deliberately plain formats.
//!
//! Eight-bit binary PGM for eyeballing results, and raw little-endian f64
//! with a tiny JSON sidecar for lossless exchange with analysis scripts.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Writes `pixels` (row-major, `height * width`) as a binary PGM (P5,
/// maxval 255). Intensities are clamped to `[0, 1]` and scaled to 0..=255;
/// anything outside that range (possible for reconstructions) saturates.
pub fn write_pgm(path: &Path, height: usize, width: usize, pixels: &[f64]) -> io::Result<()> {
    assert_eq!(pixels.len(), height * width, "pixel count mismatch");
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend(
        pixels
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)
}

/// Writes `pixels` as raw little-endian f64 values at `path`, plus a JSON
/// sidecar at `path.json` recording the shape:
/// `{"height": h, "width": w, "dtype": "f64le"}`.
pub fn write_f64le(path: &Path, height: usize, width: usize, pixels: &[f64]) -> io::Result<()> {
    assert_eq!(pixels.len(), height * width, "pixel count mismatch");
    let mut bytes = Vec::with_capacity(pixels.len() * 8);
    for v in pixels {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;

    let sidecar = serde_json::json!({
        "height": height,
        "width": width,
        "dtype": "f64le",
    });
    fs::write(sidecar_path(path), format!("{sidecar}\n"))
}

/// Reads an image written by [`write_f64le`], using the JSON sidecar for
/// the shape. Returns `(height, width, pixels)`.
pub fn read_f64le(path: &Path) -> io::Result<(usize, usize, Vec<f64>)> {
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    if meta["dtype"] != "f64le" {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported dtype {}", meta["dtype"]),
        ));
    }
    let height = meta["height"].as_u64().ok_or_else(bad_shape)? as usize;
    let width = meta["width"].as_u64().ok_or_else(bad_shape)? as usize;

    let bytes = fs::read(path)?;
    if bytes.len() != height * width * 8 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!(
                "expected {} bytes for a {height}x{width} image, got {}",
                height * width * 8,
                bytes.len()
            ),
        ));
    }
    let pixels = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((height, width, pixels))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn bad_shape() -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, "sidecar missing height/width")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_bytes_by_hand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        // 2x3 image; 1.5 saturates to 255, -0.2 to 0, 0.5 rounds to 128.
        write_pgm(&path, 2, 3, &[0.0, 0.5, 1.0, 1.5, -0.2, 1.0]).unwrap();
        let bytes = fs::read(&path).unwrap();
        let mut want = b"P5\n3 2\n255\n".to_vec();
        want.extend([0u8, 128, 255, 255, 0, 255]);
        assert_eq!(bytes, want);
    }

    #[test]
    fn f64le_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.f64");
        let pixels = vec![0.0, -1.5, 3.25e-17, f64::MAX, 42.0, -0.0];
        write_f64le(&path, 2, 3, &pixels).unwrap();
        let (h, w, back) = read_f64le(&path).unwrap();
        assert_eq!((h, w), (2, 3));
        // Bit-exact, including the negative zero.
        for (a, b) in back.iter().zip(&pixels) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sidecar_contains_shape_and_dtype() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.f64");
        write_f64le(&path, 4, 5, &vec![0.0; 20]).unwrap();
        let meta: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("img.f64.json")).unwrap())
                .unwrap();
        assert_eq!(meta["height"], 4);
        assert_eq!(meta["width"], 5);
        assert_eq!(meta["dtype"], "f64le");
    }
}
