//! Training checkpoint file: magic `PICP`, version byte 1, u32 LE K₀, K₁ and
//! epoch, f64 LE slope β, bias b and rate factor v_t, then the filter matrix
//! C as a mat1 block.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::io::mat1::{decode_matrix_at, encode_matrix};
use crate::io::write_atomic;

const MAGIC: &[u8; 4] = b"PICP";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 41;

/// A persisted training result: the tuning state and the filter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub k0: usize,
    pub k1: usize,
    pub epoch: usize,
    pub beta: f64,
    pub bias: f64,
    pub rate_factor: f64,
    pub c: Array2<f64>,
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    if ck.c.dim() != (ck.k0, ck.k1) {
        return Err(Error::Shape(format!(
            "checkpoint C is {}x{} but the header says {}x{}",
            ck.c.nrows(),
            ck.c.ncols(),
            ck.k0,
            ck.k1
        )));
    }
    if ck.k0 > u32::MAX as usize || ck.k1 > u32::MAX as usize || ck.epoch > u32::MAX as usize {
        return Err(Error::Domain("checkpoint header field exceeds u32".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(ck.k0 as u32).to_le_bytes());
    out.extend_from_slice(&(ck.k1 as u32).to_le_bytes());
    out.extend_from_slice(&(ck.epoch as u32).to_le_bytes());
    out.extend_from_slice(&ck.beta.to_le_bytes());
    out.extend_from_slice(&ck.bias.to_le_bytes());
    out.extend_from_slice(&ck.rate_factor.to_le_bytes());
    out.extend_from_slice(&encode_matrix(&ck.c)?);
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let header = bytes.get(..HEADER_LEN).ok_or_else(|| {
        Error::Length(format!("checkpoint header truncated ({} bytes)", bytes.len()))
    })?;
    if &header[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic {:?}",
            &header[..4]
        )));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            header[4]
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes")) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().expect("8 bytes"));
    let (k0, k1, epoch) = (u32_at(5), u32_at(9), u32_at(13));
    let (beta, bias, rate_factor) = (f64_at(17), f64_at(25), f64_at(33));
    let mut pos = HEADER_LEN;
    let c = decode_matrix_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(Error::Length(format!(
            "{} trailing bytes after the checkpoint",
            bytes.len() - pos
        )));
    }
    if c.dim() != (k0, k1) {
        return Err(Error::Format(format!(
            "checkpoint C is {}x{} but the header says {}x{}",
            c.nrows(),
            c.ncols(),
            k0,
            k1
        )));
    }
    if !(beta > 0.0) || !bias.is_finite() || !(rate_factor > 0.0) {
        return Err(Error::Format(format!(
            "checkpoint tuning state out of range: beta {}, bias {}, v {}",
            beta, bias, rate_factor
        )));
    }
    Ok(Checkpoint { k0, k1, epoch, beta, bias, rate_factor, c })
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ck)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}
