//! `sample`: images → patch matrix file.

use std::time::Instant;

use infomax::ingest::{load_idx_images, load_pgm, sample_patches, SamplerConfig};
use infomax::io::mat1::write_matrix;

use crate::config::FileConfig;
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{CliError, CliResult, SampleArgs};

pub fn run(args: SampleArgs, file: &FileConfig) -> CliResult<()> {
    let patch_width = args
        .patch_width
        .or(file.usize("patch-width"))
        .ok_or_else(|| CliError::Usage("--patch-width is required (flag or config)".into()))?;
    let count = args
        .count
        .or(file.usize("count"))
        .ok_or_else(|| CliError::Usage("--count is required (flag or config)".into()))?;
    let seed = args.seed.or(file.u64("seed")).unwrap_or(0);
    if args.images.is_empty() && args.idx.is_none() {
        return Err(CliError::Usage("no inputs: pass --images and/or --idx".into()));
    }

    let mut manifest = RunManifest::new("sample");
    manifest
        .seed(seed)
        .knob("patch-width", patch_width)
        .knob("count", count)
        .knob("seed", seed);

    let start = Instant::now();
    let mut images = Vec::new();
    for path in &args.images {
        manifest.input(path)?;
        images.push(load_pgm(path)?);
    }
    if let Some(path) = &args.idx {
        manifest.input(path)?;
        images.extend(load_idx_images(path)?);
    }
    manifest.stage("load", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let cfg = SamplerConfig { patch_width, count, seed };
    let patches = sample_patches(&images, &cfg)?;
    manifest.stage("sample", start.elapsed().as_secs_f64());

    let start = Instant::now();
    write_matrix(&args.out, patches.data())?;
    manifest.stage("write", start.elapsed().as_secs_f64());

    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))?;

    println!("images = {}", images.len());
    println!("patches = {}x{}", patches.dim(), patches.sample_count());
    println!("out = {}", args.out.display());
    Ok(())
}
