//! `denoise`: clean image + noisy image → denoised PGM and an error report.

use std::time::Instant;

use infomax::analyze::denoise_image;
use infomax::ingest::{load_pgm, write_pgm, ImageGray};
use infomax::train::TrainConfig;

use crate::commands::{algorithm_name, guard_exact, resolve_algorithm};
use crate::config::FileConfig;
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{AlgChoice, CliError, CliResult, DenoiseArgs};

/// Root-mean-square pixel difference; images must have equal dimensions.
fn rmse(a: &ImageGray, b: &ImageGray) -> f64 {
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (sum / a.pixels().len() as f64).sqrt()
}

pub fn run(args: DenoiseArgs, file: &FileConfig) -> CliResult<()> {
    let patch_width = args
        .patch_width
        .or(file.usize("patch-width"))
        .ok_or_else(|| CliError::Usage("--patch-width is required (flag or config)".into()))?;
    let epsilon = args
        .epsilon
        .or(file.f64("epsilon"))
        .ok_or_else(|| CliError::Usage("--epsilon is required (flag or config)".into()))?;
    let epochs = args.epochs.or(file.usize("epochs")).unwrap_or(300);
    let t0 = args.t0.or(file.usize("t0")).unwrap_or(50);
    let v1 = args.v1.or(file.f64("v1")).unwrap_or(0.4);
    let tau = args.tau.or(file.f64("tau")).unwrap_or(0.8);
    let alg_choice = args.alg.or(file.alg("alg")).unwrap_or(AlgChoice::Auto);
    let seed = args.seed.or(file.u64("seed")).unwrap_or(0);

    // The denoising bank is square (K1 = K0), so auto resolves to alg1.
    let algorithm = resolve_algorithm(alg_choice, 1, 1);

    let mut manifest = RunManifest::new("denoise");
    manifest
        .seed(seed)
        .knob("patch-width", patch_width)
        .knob("epsilon", epsilon)
        .knob("epochs", epochs)
        .knob("t0", t0)
        .knob("v1", v1)
        .knob("tau", tau)
        .knob("alg", algorithm_name(algorithm))
        .knob("seed", seed);
    manifest.input(&args.clean)?;
    manifest.input(&args.noisy)?;

    let start = Instant::now();
    let clean = load_pgm(&args.clean)?;
    let noisy = load_pgm(&args.noisy)?;
    manifest.stage("load", start.elapsed().as_secs_f64());

    // Upper bound on the exact objective's cost: K1 <= w^2 training windows.
    if patch_width >= 2 && clean.width() > patch_width && clean.height() > patch_width {
        let windows = (clean.width() - patch_width + 1) * (clean.height() - patch_width + 1);
        guard_exact(algorithm, patch_width * patch_width, windows)?;
    }

    let cfg = TrainConfig {
        algorithm,
        t_max: epochs,
        t0,
        v1,
        tau,
        seed,
        train_bias: false,
        batch_size: None,
    };
    let start = Instant::now();
    let denoised = denoise_image(&clean, &noisy, patch_width, epsilon, &cfg)?;
    manifest.stage("denoise", start.elapsed().as_secs_f64());

    let start = Instant::now();
    write_pgm(&args.out, &denoised)?;
    manifest.stage("write", start.elapsed().as_secs_f64());
    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))?;

    println!("rmse_denoised_vs_noisy = {:.6}", rmse(&denoised, &noisy));
    if clean.width() == noisy.width() && clean.height() == noisy.height() {
        let before = rmse(&noisy, &clean);
        let after = rmse(&denoised, &clean);
        println!("rmse_noisy_vs_clean = {:.6}", before);
        println!("rmse_denoised_vs_clean = {:.6}", after);
        if before > 0.0 {
            println!("error_reduction_percent = {:.1}", 100.0 * (1.0 - after / before));
        }
    }
    println!("out = {}", args.out.display());
    Ok(())
}
