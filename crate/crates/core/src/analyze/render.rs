//! Filter-grid rendering.
//!
//! Each filter column is normalized by its largest absolute entry, mapped
//! from `[-1,1]` to `[0,1]`, reshaped to its square patch, and tiled into a
//! near-square grid with one-pixel separators at mid gray.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::ingest::ImageGray;

/// Tiles the columns of a `K x K₁` filter matrix (`K = w²`) into one image.
///
/// Zero columns cannot be normalized; they render as flat mid gray with a
/// warning rather than failing the whole grid.
pub fn render_filter_grid(columns: &Array2<f64>, patch_width: usize) -> Result<ImageGray> {
    let (k, k1) = columns.dim();
    if patch_width == 0 {
        return Err(Error::Domain("patch width must be >= 1".into()));
    }
    if k != patch_width * patch_width {
        return Err(Error::Geometry(format!(
            "filter rows {} do not match a {}x{} patch",
            k, patch_width, patch_width
        )));
    }
    if k1 == 0 {
        return Err(Error::Domain("no filter columns to render".into()));
    }
    if columns.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(
            "filter matrix contains a non-finite entry".into(),
        ));
    }

    let w = patch_width;
    let grid_cols = (k1 as f64).sqrt().ceil() as usize;
    let grid_rows = k1.div_ceil(grid_cols);
    let img_w = grid_cols * w + (grid_cols - 1);
    let img_h = grid_rows * w + (grid_rows - 1);
    // Separators, and any unused trailing cells, stay at mid gray.
    let mut pixels = vec![0.5; img_w * img_h];

    for (kk, col) in columns.columns().into_iter().enumerate() {
        let origin_r = (kk / grid_cols) * (w + 1);
        let origin_c = (kk % grid_cols) * (w + 1);
        let maxabs = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if maxabs == 0.0 {
            log::warn!("filter column {} is identically zero; rendering flat gray", kk);
            continue;
        }
        for r in 0..w {
            for c in 0..w {
                let v = col[r * w + c] / maxabs;
                pixels[(origin_r + r) * img_w + origin_c + c] = (v + 1.0) / 2.0;
            }
        }
    }
    ImageGray::new(img_w, img_h, pixels)
}
