//! `IDF1` tensor files: magic, little-endian `u32` rank and dims, then
//! row-major little-endian `f64` values.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3, ArrayD, IxDyn};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"IDF1";

pub fn encode_tensor(a: &ArrayD<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * a.ndim() + 8 * a.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(a.ndim() as u32).to_le_bytes());
    for &d in a.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in a.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> std::result::Result<ArrayD<f64>, String> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err("missing IDF1 magic".into());
    }
    let word = |i: usize| -> std::result::Result<usize, String> {
        bytes
            .get(i..i + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
            .ok_or_else(|| "truncated header".to_string())
    };
    let rank = word(4)?;
    let dims: Vec<usize> = (0..rank).map(|i| word(8 + 4 * i)).collect::<std::result::Result<_, _>>()?;
    let start = 8 + 4 * rank;
    let count: usize = dims.iter().product();
    let body = &bytes[start.min(bytes.len())..];
    if body.len() != 8 * count {
        return Err(format!("expected {} value bytes for dims {dims:?}, found {}", 8 * count, body.len()));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    ArrayD::from_shape_vec(IxDyn(&dims), values).map_err(|e| e.to_string())
}

pub fn write_tensor(path: &Path, a: &ArrayD<f64>) -> Result<()> {
    fs::write(path, encode_tensor(a))?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<ArrayD<f64>> {
    let bytes = fs::read(path)?;
    decode_tensor(&bytes).map_err(|message| Error::Format { path: path.to_path_buf(), message })
}

pub fn write_image(path: &Path, a: &Array2<f64>) -> Result<()> {
    write_tensor(path, &a.clone().into_dyn())
}

pub fn read_image(path: &Path) -> Result<Array2<f64>> {
    read_tensor(path)?
        .into_dimensionality()
        .map_err(|_| Error::Format { path: path.to_path_buf(), message: "expected a rank-2 tensor".into() })
}

pub fn write_array3(path: &Path, a: &Array3<f64>) -> Result<()> {
    write_tensor(path, &a.clone().into_dyn())
}

pub fn read_array3(path: &Path) -> Result<Array3<f64>> {
    read_tensor(path)?
        .into_dimensionality()
        .map_err(|_| Error::Format { path: path.to_path_buf(), message: "expected a rank-3 tensor".into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let a = Array2::from_shape_vec((1, 2), vec![1.0, -2.5]).unwrap().into_dyn();
        let b = encode_tensor(&a);
        assert_eq!(&b[..4], b"IDF1");
        assert_eq!(&b[4..8], &[2, 0, 0, 0]);
        assert_eq!(&b[8..16], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&b[16..24], &1.0f64.to_le_bytes());
        assert_eq!(decode_tensor(&b).unwrap(), a);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(decode_tensor(b"IDF2\0\0\0\0").is_err());
        let a = Array2::<f64>::zeros((2, 2)).into_dyn();
        let b = encode_tensor(&a);
        assert!(decode_tensor(&b[..b.len() - 1]).is_err());
    }
}
