//! Image loading and patch sampling.
//!
//! Supported inputs are binary PGM (`P5`, maxval 255 or 65535 big-endian) and
//! IDX image archives (magic `0x00000803`). Intensities are normalized to
//! `[0,1]`. Patches are square windows vectorized row-major into the columns
//! of a [`PatchMatrix`].

use std::path::Path;

use ndarray::{Array1, Array2, Axis, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// A grayscale image with intensities in `[0,1]`, stored row-major.
#[derive(Debug, Clone)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageGray {
    /// Builds an image, validating dimensions and the `[0,1]` intensity range.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be positive, got {}x{}",
                width, height
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Geometry(format!(
                "pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "intensity {} outside [0,1]",
                bad
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Intensity at `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Column matrix of vectorized square patches.
///
/// `data` is `K x M` with `K = patch_width^2`; column `m` holds one patch in
/// row-major pixel order.
#[derive(Debug, Clone)]
pub struct PatchMatrix {
    data: Array2<f64>,
    patch_width: usize,
}

impl PatchMatrix {
    pub fn new(data: Array2<f64>, patch_width: usize) -> Result<Self> {
        if patch_width == 0 {
            return Err(Error::Domain("patch width must be >= 1".into()));
        }
        if data.nrows() != patch_width * patch_width {
            return Err(Error::Geometry(format!(
                "patch rows {} do not match width {} (expected {})",
                data.nrows(),
                patch_width,
                patch_width * patch_width
            )));
        }
        Ok(Self { data, patch_width })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn patch_width(&self) -> usize {
        self.patch_width
    }

    /// Patch dimension `K = w^2`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.data.ncols()
    }
}

/// Random patch sampler configuration.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub patch_width: usize,
    pub count: usize,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// PGM

/// Reads a binary PGM (`P5`) file with maxval 255 or 65535.
pub fn load_pgm(path: &Path) -> Result<ImageGray> {
    let bytes = std::fs::read(path)?;
    parse_pgm(&bytes)
}

/// Parses binary PGM bytes. 16-bit samples are big-endian per the format.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageGray> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format(format!(
            "expected binary PGM magic \"P5\", got {:?}",
            String::from_utf8_lossy(&bytes[..bytes.len().min(2)])
        )));
    }
    let mut pos = 2;
    let width = read_pgm_uint(bytes, &mut pos)?;
    let height = read_pgm_uint(bytes, &mut pos)?;
    let maxval = read_pgm_uint(bytes, &mut pos)?;
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::Format(format!(
                "missing whitespace after maxval at byte {}",
                pos
            )))
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::Geometry(format!(
            "image dimensions must be positive, got {}x{}",
            width, height
        )));
    }
    let n = width * height;
    let pixels = match maxval {
        255 => {
            let raster = bytes.get(pos..pos + n).ok_or_else(|| {
                Error::Length(format!(
                    "raster truncated: need {} bytes at offset {}, file has {}",
                    n,
                    pos,
                    bytes.len()
                ))
            })?;
            raster.iter().map(|&b| b as f64 / 255.0).collect()
        }
        65535 => {
            let raster = bytes.get(pos..pos + 2 * n).ok_or_else(|| {
                Error::Length(format!(
                    "raster truncated: need {} bytes at offset {}, file has {}",
                    2 * n,
                    pos,
                    bytes.len()
                ))
            })?;
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
                .collect()
        }
        other => {
            return Err(Error::Format(format!(
                "unsupported maxval {} (expected 255 or 65535)",
                other
            )))
        }
    };
    ImageGray::new(width, height, pixels)
}

/// Reads one whitespace-delimited unsigned integer, skipping `#` comments.
fn read_pgm_uint(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(b) => {
                return Err(Error::Format(format!(
                    "unexpected byte 0x{:02x} in header at offset {}",
                    b, *pos
                )))
            }
            None => {
                return Err(Error::Format(format!(
                    "header ended prematurely at byte {}",
                    *pos
                )))
            }
        }
    }
    let mut v: usize = 0;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        v = v
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as usize))
            .ok_or_else(|| {
                Error::Format(format!("header integer overflow at byte {}", *pos))
            })?;
        *pos += 1;
    }
    Ok(v)
}

/// Writes an image as binary PGM with maxval 255 (atomic rename).
pub fn write_pgm(path: &Path, img: &ImageGray) -> Result<()> {
    let mut out = Vec::with_capacity(32 + img.pixels.len());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes());
    out.extend(img.pixels.iter().map(|&v| (v * 255.0).round() as u8));
    write_atomic(path, &out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// IDX

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;

/// Reads an IDX image archive (big-endian header, magic `0x00000803`).
pub fn load_idx_images(path: &Path) -> Result<Vec<ImageGray>> {
    let bytes = std::fs::read(path)?;
    parse_idx_images(&bytes)
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageGray>> {
    let header = |i: usize| -> Result<u32> {
        let s = bytes.get(4 * i..4 * i + 4).ok_or_else(|| {
            Error::Length(format!("IDX header truncated: file has {} bytes", bytes.len()))
        })?;
        Ok(u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
    };
    let magic = header(0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "IDX magic 0x{:08x} is not an image archive (expected 0x{:08x})",
            magic, IDX_IMAGE_MAGIC
        )));
    }
    let count = header(1)? as usize;
    let rows = header(2)? as usize;
    let cols = header(3)? as usize;
    let expected = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Length("IDX dimensions overflow".into()))?;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::Length(format!(
            "IDX payload is {} bytes, header promises {}x{}x{} = {}",
            payload.len(),
            count,
            rows,
            cols,
            expected
        )));
    }
    let mut images = Vec::with_capacity(count);
    for r in 0..count {
        let slice = &payload[r * rows * cols..(r + 1) * rows * cols];
        let pixels = slice.iter().map(|&b| b as f64 / 255.0).collect();
        images.push(ImageGray::new(cols, rows, pixels)?);
    }
    Ok(images)
}

// ---------------------------------------------------------------------------
// Sampling and centering

/// Samples `cfg.count` square patches uniformly over (image, top-left corner)
/// pairs, with replacement. Deterministic for a fixed seed, independent of
/// platform word size.
pub fn sample_patches(images: &[ImageGray], cfg: &SamplerConfig) -> Result<PatchMatrix> {
    let w = cfg.patch_width;
    if w == 0 {
        return Err(Error::Domain("patch width must be >= 1".into()));
    }
    if cfg.count == 0 {
        return Err(Error::Domain("sample count must be >= 1".into()));
    }
    if images.is_empty() {
        return Err(Error::Domain("no images to sample from".into()));
    }
    for (i, img) in images.iter().enumerate() {
        if img.width() < w || img.height() < w {
            return Err(Error::Geometry(format!(
                "image {} is {}x{}, smaller than the {}x{} patch window",
                i,
                img.width(),
                img.height(),
                w,
                w
            )));
        }
    }

    let k = w * w;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Draws happen in u64 so the stream does not depend on the platform usize.
    let mut draw = |n: usize| -> usize { rng.random_range(0..n as u64) as usize };

    let mut data = Vec::with_capacity(k * cfg.count);
    for _ in 0..cfg.count {
        let img = &images[draw(images.len())];
        let r0 = draw(img.height() - w + 1);
        let c0 = draw(img.width() - w + 1);
        for r in 0..w {
            for c in 0..w {
                data.push(img.get(r0 + r, c0 + c));
            }
        }
    }
    let matrix = Array2::from_shape_vec((k, cfg.count).f(), data)
        .expect("shape matches construction");
    PatchMatrix::new(matrix, w)
}

/// Extracts every stride-1 patch of an image, window positions ordered
/// row-major (all columns of the top row first). Column `r0*(W-w+1) + c0`
/// holds the patch whose top-left corner is `(r0, c0)`.
pub fn dense_patches(image: &ImageGray, patch_width: usize) -> Result<PatchMatrix> {
    let w = patch_width;
    if w == 0 {
        return Err(Error::Domain("patch width must be >= 1".into()));
    }
    if image.width() < w || image.height() < w {
        return Err(Error::Geometry(format!(
            "image is {}x{}, smaller than the {}x{} patch window",
            image.width(),
            image.height(),
            w,
            w
        )));
    }
    let rows = image.height() - w + 1;
    let cols = image.width() - w + 1;
    let k = w * w;
    let mut data = Vec::with_capacity(k * rows * cols);
    for r0 in 0..rows {
        for c0 in 0..cols {
            for r in 0..w {
                for c in 0..w {
                    data.push(image.get(r0 + r, c0 + c));
                }
            }
        }
    }
    let matrix = Array2::from_shape_vec((k, rows * cols).f(), data)
        .expect("shape matches construction");
    PatchMatrix::new(matrix, w)
}

/// Subtracts the per-row mean; returns the centered matrix and the mean vector.
pub fn center(patches: &PatchMatrix) -> (PatchMatrix, Array1<f64>) {
    let mean = patches
        .data()
        .mean_axis(Axis(1))
        .expect("sample count >= 1 by construction");
    let centered = patches.data() - &mean.view().insert_axis(Axis(1));
    (
        PatchMatrix::new(centered, patches.patch_width()).expect("geometry preserved"),
        mean,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pgm_bytes(header: &str, raster: &[u8]) -> Vec<u8> {
        let mut v = header.as_bytes().to_vec();
        v.extend_from_slice(raster);
        v
    }

    #[test]
    fn pgm_8bit_normalizes_by_255() {
        // Oracle: direct byte/255 arithmetic.
        let img = parse_pgm(&pgm_bytes("P5\n2 2\n255\n", &[0, 255, 128, 64])).unwrap();
        let want = [0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0];
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        for (got, want) in img.pixels().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((img.pixels()[2] - 0.50196).abs() < 1e-5);
        assert!((img.pixels()[3] - 0.25098).abs() < 1e-5);
    }

    #[test]
    fn pgm_16bit_zero_payload() {
        let img = parse_pgm(&pgm_bytes("P5\n3 1\n65535\n", &[0, 0, 0, 0, 0, 0])).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pgm_16bit_is_big_endian() {
        let img = parse_pgm(&pgm_bytes("P5\n1 1\n65535\n", &[0x80, 0x00])).unwrap();
        assert!((img.pixels()[0] - 32768.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_rejects_ascii_variant() {
        assert!(matches!(
            parse_pgm(b"P2\n2 2\n255\n0 1 2 3"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn pgm_rejects_truncated_raster() {
        assert!(matches!(
            parse_pgm(&pgm_bytes("P5\n2 2\n255\n", &[0, 255, 128])),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn pgm_skips_comments() {
        let img = parse_pgm(&pgm_bytes("P5\n# a comment\n2 1 # inline\n255\n", &[7, 9])).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 1);
    }

    #[test]
    fn idx_normalizes_by_255() {
        // Oracle: byte/255.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 51, 102, 255]);
        let images = parse_idx_images(&bytes).unwrap();
        assert_eq!(images.len(), 1);
        let want = [0.0, 0.2, 0.4, 1.0];
        for (got, want) in images[0].pixels().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn idx_rejects_label_magic() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        bytes.extend_from_slice(&0u32.to_be_bytes());
        bytes.extend_from_slice(&0u32.to_be_bytes());
        bytes.extend_from_slice(&0u32.to_be_bytes());
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn idx_rejects_payload_mismatch() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 51, 102]);
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Length(_))));
    }

    #[test]
    fn sampling_single_corner_repeats_whole_image() {
        let pix: Vec<f64> = (0..144).map(|i| i as f64 / 143.0).collect();
        let img = ImageGray::new(12, 12, pix.clone()).unwrap();
        let patches = sample_patches(
            &[img],
            &SamplerConfig { patch_width: 12, count: 3, seed: 9 },
        )
        .unwrap();
        assert_eq!(patches.dim(), 144);
        assert_eq!(patches.sample_count(), 3);
        for m in 0..3 {
            for i in 0..144 {
                assert_eq!(patches.data()[[i, m]], pix[i]);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let img = ImageGray::new(8, 8, vec![0.25; 64]).unwrap();
        let img2 = ImageGray::new(
            8,
            8,
            (0..64).map(|i| i as f64 / 63.0).collect(),
        )
        .unwrap();
        let cfg = SamplerConfig { patch_width: 3, count: 40, seed: 1234 };
        let a = sample_patches(&[img.clone(), img2.clone()], &cfg).unwrap();
        let b = sample_patches(&[img, img2], &cfg).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn sampling_rejects_small_images() {
        let img = ImageGray::new(4, 4, vec![0.0; 16]).unwrap();
        let err = sample_patches(
            &[img],
            &SamplerConfig { patch_width: 5, count: 1, seed: 0 },
        );
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn dense_patches_covers_every_position_in_order() {
        // 3x2 image, 2x2 windows: two positions, hand-checked columns.
        let pix = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let img = ImageGray::new(3, 2, pix).unwrap();
        let patches = dense_patches(&img, 2).unwrap();
        assert_eq!(patches.dim(), 4);
        assert_eq!(patches.sample_count(), 2);
        let want0 = [0.0, 0.1, 0.3, 0.4];
        let want1 = [0.1, 0.2, 0.4, 0.5];
        for i in 0..4 {
            assert_eq!(patches.data()[[i, 0]], want0[i]);
            assert_eq!(patches.data()[[i, 1]], want1[i]);
        }

        // Window as large as the image: exactly one column.
        let img = ImageGray::new(2, 2, vec![0.5; 4]).unwrap();
        assert_eq!(dense_patches(&img, 2).unwrap().sample_count(), 1);
        assert!(matches!(dense_patches(&img, 3), Err(Error::Geometry(_))));
    }

    #[test]
    fn center_matches_hand_example() {
        let data = Array2::from_shape_vec((1, 2), vec![1.0, 3.0]).unwrap();
        let patches = PatchMatrix::new(data, 1).unwrap();
        let (centered, mean) = center(&patches);
        assert_eq!(mean[0], 2.0);
        assert_eq!(centered.data()[[0, 0]], -1.0);
        assert_eq!(centered.data()[[0, 1]], 1.0);
    }

    #[test]
    fn center_is_idempotent_and_round_trips() {
        let data = Array2::from_shape_fn((25, 100), |(i, j)| {
            ((i * 31 + j * 17) % 97) as f64 / 97.0
        });
        let patches = PatchMatrix::new(data.clone(), 5).unwrap();
        let (centered, mean) = center(&patches);
        // Output row means vanish (direct recomputation oracle).
        for rm in centered.data().mean_axis(Axis(1)).unwrap().iter() {
            assert!(rm.abs() < 1e-12);
        }
        // Round trip.
        let restored = centered.data() + &mean.view().insert_axis(Axis(1));
        for (a, b) in restored.iter().zip(data.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // Centering again changes nothing.
        let (again, mean2) = center(&centered);
        for v in mean2.iter() {
            assert!(v.abs() < 1e-12);
        }
        for (a, b) in again.data().iter().zip(centered.data().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
