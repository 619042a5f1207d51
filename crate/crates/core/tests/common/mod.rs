//! Helpers shared by the integration suites: synthetic sources, mixing
//! matrices, the Amari recovery score and a finite-difference oracle.
#![allow(dead_code)]

use infomax::ingest::ImageGray;
use infomax::train::gram_schmidt_rows;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Random matrix with orthonormal rows.
pub fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    gram_schmidt_rows(&random_matrix(rows, cols, seed)).expect("random rows are independent")
}

/// Unit-variance Laplacian sources, one row per source, drawn by inverse CDF
/// so the stream is identical on every platform.
pub fn laplacian_sources(k: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = std::f64::consts::FRAC_1_SQRT_2;
    Array2::from_shape_fn((k, m), |_| {
        // u strictly inside (0,1): 53 mantissa bits plus a half-bit offset.
        let u = ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        let centered = u - 0.5;
        -b * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
    })
}

/// Square mixing with singular values in [0.85, 1.6]: full rank and far from
/// singular for any seed.
pub fn well_conditioned_mixing(k: usize, seed: u64) -> Array2<f64> {
    let u = random_orthonormal(k, k, seed);
    let v = random_orthonormal(k, k, seed.wrapping_add(101));
    let span = if k > 1 { 0.75 / (k - 1) as f64 } else { 0.0 };
    let mut scaled = v;
    for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
        let s = 1.6 - span * i as f64;
        row.map_inplace(|x| *x *= s);
    }
    u.t().dot(&scaled)
}

/// Normalized Amari index of a square composite matrix: 0 iff the matrix is
/// a scaled permutation, independent of row/column order and scale.
pub fn amari_index(p: &Array2<f64>) -> f64 {
    let k = p.nrows();
    assert_eq!(k, p.ncols(), "Amari index needs a square matrix");
    assert!(k > 1);
    let mut total = 0.0;
    for i in 0..k {
        let row = p.row(i);
        let max = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sum: f64 = row.iter().map(|v| v.abs()).sum();
        total += sum / max - 1.0;
    }
    for j in 0..p.ncols() {
        let col = p.column(j);
        let max = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sum: f64 = col.iter().map(|v| v.abs()).sum();
        total += sum / max - 1.0;
    }
    total / (2.0 * k as f64 * (k as f64 - 1.0))
}

/// Central finite differences of a scalar function over the entries of `c0`.
pub fn fd_gradient(c0: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let h = 1e-6;
    let mut grad = Array2::zeros(c0.raw_dim());
    for idx in 0..c0.len() {
        let (i, j) = (idx / c0.ncols(), idx % c0.ncols());
        let mut plus = c0.clone();
        plus[[i, j]] += h;
        let mut minus = c0.clone();
        minus[[i, j]] -= h;
        grad[[i, j]] = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    grad
}

pub fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let num: f64 = (a - b).iter().map(|v| v * v).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}

/// Smooth band-limited texture with a little dither: structured enough for a
/// low-rank patch model, irregular enough that denoising is not trivial.
pub fn textured_image(height: usize, width: usize, seed: u64) -> ImageGray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut pixels = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let (rf, cf) = (r as f64, c as f64);
            let v = 0.5
                + 0.22 * (rf / 12.0 * tau).sin() * (cf / 12.0 * tau).cos()
                + 0.12 * ((rf + cf) / 17.0 * tau).sin()
                + rng.random_range(-0.02..0.02);
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    ImageGray::new(width, height, pixels).expect("pixels are clamped into range")
}
