//! Whitening model file: magic `PIWM`, version byte 1, u32 LE retained rank,
//! f64 LE threshold, then three mat1 blocks (mean K×1, eigenbasis K×K,
//! spectrum K×1).

use std::path::Path;

use ndarray::{Array1, Axis};

use crate::error::{Error, Result};
use crate::io::mat1::{decode_matrix_at, encode_matrix};
use crate::io::write_atomic;
use crate::whiten::WhiteningModel;

const MAGIC: &[u8; 4] = b"PIWM";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 17;

pub fn encode_whitening_model(model: &WhiteningModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(model.retained_rank() as u32).to_le_bytes());
    out.extend_from_slice(&model.threshold().to_le_bytes());
    let mean = model.mean().view().insert_axis(Axis(1)).to_owned();
    let spectrum = model.spectrum().view().insert_axis(Axis(1)).to_owned();
    out.extend_from_slice(&encode_matrix(&mean)?);
    out.extend_from_slice(&encode_matrix(model.eigvecs_full())?);
    out.extend_from_slice(&encode_matrix(&spectrum)?);
    Ok(out)
}

pub fn decode_whitening_model(bytes: &[u8]) -> Result<WhiteningModel> {
    let header = bytes.get(..HEADER_LEN).ok_or_else(|| {
        Error::Length(format!(
            "whitening model header truncated ({} bytes)",
            bytes.len()
        ))
    })?;
    if &header[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad whitening model magic {:?}",
            &header[..4]
        )));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!(
            "unsupported whitening model version {}",
            header[4]
        )));
    }
    let retained = u32::from_le_bytes([header[5], header[6], header[7], header[8]]) as usize;
    let threshold = f64::from_le_bytes(header[9..17].try_into().expect("8 bytes"));
    let mut pos = HEADER_LEN;
    let mean = decode_matrix_at(bytes, &mut pos)?;
    let eigvecs = decode_matrix_at(bytes, &mut pos)?;
    let spectrum = decode_matrix_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(Error::Length(format!(
            "{} trailing bytes after the whitening model",
            bytes.len() - pos
        )));
    }
    if mean.ncols() != 1 || spectrum.ncols() != 1 {
        return Err(Error::Format(
            "mean and spectrum blocks must be single-column".into(),
        ));
    }
    let mean: Array1<f64> = mean.column(0).to_owned();
    let spectrum: Array1<f64> = spectrum.column(0).to_owned();
    WhiteningModel::new(mean, eigvecs, spectrum, retained, threshold)
}

pub fn save_whitening_model(path: &Path, model: &WhiteningModel) -> Result<()> {
    write_atomic(path, &encode_whitening_model(model)?)
}

pub fn load_whitening_model(path: &Path) -> Result<WhiteningModel> {
    decode_whitening_model(&std::fs::read(path)?)
}
