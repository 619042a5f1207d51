//! Evaluation metrics, dictionary extraction, filter rendering, denoising.
//!
//! [`metrics`] estimates the coefficient entropy (bits) and the conditional
//! entropy (nats) of a trained bank; [`dictionary`] converts the whitened-space
//! filters back to pixel-space bases, analysis filters and display filters;
//! [`render`] tiles display filters into a grid image; [`denoise`] runs the
//! end-to-end patch reconstruction pipeline.

pub mod denoise;
pub mod dictionary;
pub mod entropy;
pub mod metrics;
pub mod render;

pub use denoise::denoise_image;
pub use dictionary::{extract_bases, Dictionary};
pub use entropy::{kde_entropy, kde_entropy_with, KdeConfig};
pub use metrics::{coefficient_entropy, conditional_entropy, MetricsReport};
pub use render::render_filter_grid;
