//! On-disk formats: raw matrices, whitening models, training checkpoints,
//! and the history CSV. All writers go through [`write_atomic`], so a failed
//! run never leaves a partially written artifact.

pub mod checkpoint;
pub mod mat1;
pub mod model_file;

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::train::HistoryRow;

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other("path has no file name")))?;
    let mut tmp = std::ffi::OsString::from(file_name);
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp_path = match dir {
        Some(d) => d.join(&tmp),
        None => std::path::PathBuf::from(&tmp),
    };
    let mut f = std::fs::File::create(&tmp_path)?;
    let written = f.write_all(bytes).and_then(|_| f.flush());
    drop(f);
    if let Err(e) = written {
        let _ = std::fs::remove_file(&tmp_path);
        return Err(e.into());
    }
    if let Err(e) = std::fs::rename(&tmp_path, path) {
        let _ = std::fs::remove_file(&tmp_path);
        return Err(e.into());
    }
    Ok(())
}

/// Serializes the training history as CSV:
/// `epoch,objective,step,backtracks,wall_seconds`.
pub fn encode_history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from("epoch,objective,step,backtracks,wall_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.9e},{:.9e},{},{:.3}\n",
            r.epoch, r.objective, r.step, r.backtracks, r.wall_seconds
        ));
    }
    out
}

/// Writes the history CSV atomically.
pub fn write_history_csv(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    write_atomic(path, encode_history_csv(rows).as_bytes())
}
