//! `metrics`: checkpoint + patches → one CSV row of coefficient entropy
//! (bits) and conditional entropy (nats).

use std::time::Instant;

use infomax::analyze::{coefficient_entropy, conditional_entropy, extract_bases};
use infomax::io::write_atomic;
use infomax::whiten::{transform, TransformMode};

use crate::commands::{load_patches, load_run};
use crate::config::FileConfig;
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{CliResult, MetricsArgs};

pub fn run(args: MetricsArgs, file: &FileConfig) -> CliResult<()> {
    let n = args.n.or(file.u64("n")).unwrap_or(1_000_000);

    let mut manifest = RunManifest::new("metrics");
    manifest.knob("n", n);
    manifest.input(&args.checkpoint)?;
    manifest.input(&args.whitening)?;
    manifest.input(&args.patches)?;

    let start = Instant::now();
    let run = load_run(&args.checkpoint, &args.whitening)?;
    let patches = load_patches(&args.patches)?;
    manifest.stage("load", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let xhat = transform(&run.model, &patches, TransformMode::Whiten)?;
    let zca = transform(&run.model, &patches, TransformMode::Zca)?;
    let dict = extract_bases(&run.model, &run.bank, &run.params)?;
    let cfe_bits = coefficient_entropy(&dict, &zca)?;
    let cde_nats = conditional_entropy(&run.bank, &xhat, &run.params, n as f64)?;
    let wall = start.elapsed().as_secs_f64();
    manifest.stage("evaluate", wall);

    let csv = format!(
        "epoch,cfe_bits,cde_nats,wall_seconds\n{},{:.9e},{:.9e},{:.3}\n",
        run.checkpoint.epoch, cfe_bits, cde_nats, wall
    );
    write_atomic(&args.out, csv.as_bytes())?;
    manifest.output(&args.out);
    manifest.write(&manifest_path_for(&args.out))?;

    println!("epoch = {}", run.checkpoint.epoch);
    println!("cfe_bits = {:.6}", cfe_bits);
    println!("cde_nats = {:.6}", cde_nats);
    println!("out = {}", args.out.display());
    Ok(())
}
