//! 16-bit binary PGM export with a sidecar recording the display scale.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

/// `<path>.scale`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale");
    PathBuf::from(s)
}

/// Samples `round(v / max * 65535)`, big-endian. The sidecar holds
/// `scale = max / 65535`, the value of one count.
pub fn write_pgm(path: &Path, image: &Array2<f64>) -> Result<()> {
    let (rows, cols) = image.dim();
    let max = image.iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    for &v in image.iter() {
        let s = if max > 0.0 { (v.max(0.0) / max * 65535.0).round() as u16 } else { 0 };
        out.extend_from_slice(&s.to_be_bytes());
    }
    fs::write(path, out)?;
    fs::write(sidecar_path(path), format!("scale = {}\n", max / 65535.0))?;
    Ok(())
}

/// Raw samples and the sidecar scale.
pub fn read_pgm(path: &Path) -> Result<(Array2<u16>, f64)> {
    let bad = |message: &str| Error::Format { path: path.to_path_buf(), message: message.into() };
    let bytes = fs::read(path)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(bad("expected a 16-bit P5 image"));
    }
    let cols: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let rows: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != 2 * rows * cols {
        return Err(bad("sample count does not match header"));
    }
    let samples = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    let img = Array2::from_shape_vec((rows, cols), samples).map_err(|e| bad(&e.to_string()))?;
    let side = fs::read_to_string(sidecar_path(path))?;
    let scale = side
        .trim()
        .strip_prefix("scale = ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("unreadable scale sidecar"))?;
    Ok((img, scale))
}
