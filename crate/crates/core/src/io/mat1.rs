//! The raw matrix format "mat1": magic `PIMX`, version byte 1, u32
//! little-endian row and column counts, then the entries as 32-bit
//! little-endian IEEE-754 values in column-major order.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::io::write_atomic;

const MAGIC: &[u8; 4] = b"PIMX";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 13;

/// Encodes a matrix into mat1 bytes. Values must fit 32-bit storage.
pub fn encode_matrix(m: &Array2<f64>) -> Result<Vec<u8>> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Domain("cannot encode an empty matrix".into()));
    }
    if rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(Error::Domain(format!(
            "matrix {}x{} exceeds the 32-bit dimension limit",
            rows, cols
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * rows * cols);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for col in m.columns() {
        for &v in col.iter() {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::Domain(format!(
                    "value {} does not fit 32-bit storage",
                    v
                )));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

/// Decodes one mat1 block starting at `*pos`, advancing `*pos` past it.
pub fn decode_matrix_at(bytes: &[u8], pos: &mut usize) -> Result<Array2<f64>> {
    let header = bytes.get(*pos..*pos + HEADER_LEN).ok_or_else(|| {
        Error::Length(format!(
            "matrix header truncated at offset {} (file has {} bytes)",
            *pos,
            bytes.len()
        ))
    })?;
    if &header[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad matrix magic {:?} at offset {}",
            &header[..4],
            *pos
        )));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!(
            "unsupported matrix version {} (expected {})",
            header[4], VERSION
        )));
    }
    let rows = u32::from_le_bytes([header[5], header[6], header[7], header[8]]) as usize;
    let cols = u32::from_le_bytes([header[9], header[10], header[11], header[12]]) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty matrix {}x{}", rows, cols)));
    }
    let n = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Length("matrix dimensions overflow".into()))?;
    let data_start = *pos + HEADER_LEN;
    let raster = bytes.get(data_start..data_start + n).ok_or_else(|| {
        Error::Length(format!(
            "matrix payload truncated: need {} bytes at offset {}, file has {}",
            n,
            data_start,
            bytes.len()
        ))
    })?;
    let mut m = Array2::zeros((rows, cols));
    for (i, chunk) in raster.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        if !v.is_finite() {
            return Err(Error::Format(format!(
                "non-finite value at entry {} (column-major)",
                i
            )));
        }
        // Column-major: entry i lives at (i % rows, i / rows).
        m[[i % rows, i / rows]] = v;
    }
    *pos = data_start + n;
    Ok(m)
}

/// Decodes a whole buffer as a single matrix; trailing bytes are an error.
pub fn decode_matrix(bytes: &[u8]) -> Result<Array2<f64>> {
    let mut pos = 0;
    let m = decode_matrix_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(Error::Length(format!(
            "{} trailing bytes after the matrix payload",
            bytes.len() - pos
        )));
    }
    Ok(m)
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_atomic(path, &encode_matrix(m)?)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    decode_matrix(&std::fs::read(path)?)
}
