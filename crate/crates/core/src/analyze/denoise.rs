//! Patch-based denoising.
//!
//! The pipeline trains a filter bank on a clean region, then reconstructs a
//! noisy region through the analysis/synthesis pair: every stride-1 patch is
//! coded as `y = Wᵀ(x − mean)` and rebuilt as `x̆ = B·y + mean`, and the
//! overlapping reconstructions are averaged per pixel. Rank selection is the
//! denoiser: components below the energy threshold, where the noise lives,
//! are never represented.

use ndarray::Axis;

use crate::analyze::dictionary::extract_bases;
use crate::error::{Error, Result};
use crate::ingest::{center, dense_patches, ImageGray};
use crate::model::init_tuning;
use crate::train::{run_training, TrainConfig};
use crate::whiten::{fit_whitening, transform, TransformMode};

/// Denoises `noisy` with filters trained on `clean`.
///
/// `clean` provides the training patches (every stride-1 window); `threshold`
/// is the whitening energy threshold selecting the retained rank `K₀`, and
/// the bank is trained square (`K₁ = K₀`) per `cfg`. The output has the same
/// dimensions as `noisy`, with per-pixel averages of all overlapping patch
/// reconstructions, clamped to `[0,1]`.
pub fn denoise_image(
    clean: &ImageGray,
    noisy: &ImageGray,
    patch_width: usize,
    threshold: f64,
    cfg: &TrainConfig,
) -> Result<ImageGray> {
    if patch_width < 2 {
        return Err(Error::Domain(format!(
            "denoising needs a patch width of at least 2, got {}",
            patch_width
        )));
    }

    // Train on the clean region.
    let train_patches = dense_patches(clean, patch_width)?;
    let (centered, mean) = center(&train_patches);
    let model = fit_whitening(&centered, mean, threshold)?;
    let k0 = model.retained_rank();
    let xhat = transform(&model, &train_patches, TransformMode::Whiten)?;
    let mut params = init_tuning(k0, k0)?;
    let (bank, _state) = run_training(&xhat, cfg, &mut params)?;
    let dict = extract_bases(&model, &bank, &params)?;

    // Reconstruct every window of the noisy region through the code.
    let noisy_patches = dense_patches(noisy, patch_width)?;
    let mean_col = model.mean().view().insert_axis(Axis(1));
    let centered_noisy = noisy_patches.data() - &mean_col;
    let code = dict.filters().t().dot(&centered_noisy);
    let mut rebuilt = dict.basis().dot(&code);
    rebuilt += &mean_col;

    // Average the overlaps per pixel.
    let w = patch_width;
    let (out_w, out_h) = (noisy.width(), noisy.height());
    let windows_per_row = out_w - w + 1;
    let mut sum = vec![0.0f64; out_w * out_h];
    let mut hits = vec![0.0f64; out_w * out_h];
    for (m, col) in rebuilt.columns().into_iter().enumerate() {
        let r0 = m / windows_per_row;
        let c0 = m % windows_per_row;
        for r in 0..w {
            for c in 0..w {
                let p = (r0 + r) * out_w + c0 + c;
                sum[p] += col[r * w + c];
                hits[p] += 1.0;
            }
        }
    }
    let pixels: Vec<f64> = sum
        .iter()
        .zip(hits.iter())
        .map(|(s, h)| (s / h).clamp(0.0, 1.0))
        .collect();
    ImageGray::new(out_w, out_h, pixels)
}
