//! Deterministic data-parallel helpers.
//!
//! Work over sample columns is split into chunks of a fixed width that does
//! not depend on the worker count. Chunk results are collected in index order
//! and reduced sequentially, so floating-point sums are combined in one fixed
//! order: output is bitwise identical for any thread pool size, including 1.

use std::ops::Range;

use rayon::prelude::*;

/// Column-chunk width used by every data-parallel reduction in this crate.
pub const CHUNK_COLS: usize = 8192;

/// Splits `0..n` into consecutive ranges of at most [`CHUNK_COLS`] columns.
pub fn col_chunks(n: usize) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(n.div_ceil(CHUNK_COLS).max(1));
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK_COLS).min(n);
        out.push(start..end);
        start = end;
    }
    out
}

/// Applies `f` to every chunk of `0..n`, in parallel when more than one chunk
/// exists, and returns the results in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunks = col_chunks(n);
    if chunks.len() <= 1 {
        chunks.into_iter().map(f).collect()
    } else {
        chunks.into_par_iter().map(f).collect()
    }
}
