//! `train`: patch matrix → checkpoint, whitening model, history CSV and a
//! filter-grid PGM, with optional metrics rows every N epochs.

use std::path::Path;
use std::time::Instant;

use infomax::analyze::{
    coefficient_entropy, conditional_entropy, extract_bases, render_filter_grid,
};
use infomax::ingest::{center, write_pgm};
use infomax::io::checkpoint::{save_checkpoint, Checkpoint};
use infomax::io::model_file::save_whitening_model;
use infomax::io::{write_atomic, write_history_csv};
use infomax::model::beta_at_epoch;
use infomax::train::{run_training, run_training_observed, TrainConfig};
use infomax::whiten::{fit_whitening, transform, TransformMode};

use crate::commands::{algorithm_name, guard_exact, load_patches, patch_side, resolve_algorithm};
use crate::config::FileConfig;
use crate::manifest::RunManifest;
use crate::{AlgChoice, CliResult, TrainArgs};

struct MetricsRow {
    epoch: usize,
    cfe_bits: f64,
    cde_nats: f64,
    wall_seconds: f64,
}

fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> CliResult<()> {
    let mut out = String::from("epoch,cfe_bits,cde_nats,wall_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.9e},{:.9e},{:.3}\n",
            r.epoch, r.cfe_bits, r.cde_nats, r.wall_seconds
        ));
    }
    write_atomic(path, out.as_bytes())?;
    Ok(())
}

pub fn run(args: TrainArgs, file: &FileConfig) -> CliResult<()> {
    let k1 = args.k1.or(file.usize("k1")).unwrap_or(144);
    let epsilon = args.epsilon.or(file.f64("epsilon")).unwrap_or(1.0);
    let epochs = args.epochs.or(file.usize("epochs")).unwrap_or(300);
    let t0 = args.t0.or(file.usize("t0")).unwrap_or(50);
    let v1 = args.v1.or(file.f64("v1")).unwrap_or(0.4);
    let tau = args.tau.or(file.f64("tau")).unwrap_or(0.8);
    let alg_choice = args.alg.or(file.alg("alg")).unwrap_or(AlgChoice::Auto);
    let seed = args.seed.or(file.u64("seed")).unwrap_or(0);
    let metrics_every = args.metrics_every.or(file.usize("metrics-every")).unwrap_or(0);
    let n = args.n.or(file.u64("n")).unwrap_or(1_000_000);

    std::fs::create_dir_all(&args.out_dir).map_err(infomax::Error::Io)?;

    let mut manifest = RunManifest::new("train");
    manifest
        .seed(seed)
        .knob("k1", k1)
        .knob("epsilon", epsilon)
        .knob("epochs", epochs)
        .knob("t0", t0)
        .knob("v1", v1)
        .knob("tau", tau)
        .knob("seed", seed)
        .knob("metrics-every", metrics_every)
        .knob("n", n);
    manifest.input(&args.patches)?;

    let start = Instant::now();
    let patches = load_patches(&args.patches)?;
    let w = patch_side(patches.dim())?;
    manifest.stage("load", start.elapsed().as_secs_f64());

    let start = Instant::now();
    let (centered, mean) = center(&patches);
    let model = fit_whitening(&centered, mean, epsilon)?;
    let k0 = model.retained_rank();
    let xhat = transform(&model, &patches, TransformMode::Whiten)?;
    manifest.stage("whiten", start.elapsed().as_secs_f64());

    let algorithm = resolve_algorithm(alg_choice, k0, k1);
    manifest.knob("alg", algorithm_name(algorithm));
    guard_exact(algorithm, k1, patches.sample_count())?;

    let mut params = infomax::model::init_tuning(k0, k1)?;
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

    let train_start = Instant::now();
    let mut rows: Vec<MetricsRow> = Vec::new();
    let (bank, state) = if metrics_every > 0 {
        let zca = transform(&model, &patches, TransformMode::Zca)?;
        // The slope schedule is a pure function of the epoch, so checkpoint
        // metrics can re-derive the tuning state the trainer holds privately.
        let base = params.clone().with_t0(t0);
        run_training_observed(&xhat, &cfg, &mut params, |t, bank| {
            if t % metrics_every == 0 {
                let mut p = base.clone();
                p.set_beta(beta_at_epoch(&base, t));
                let dict = extract_bases(&model, bank, &p)?;
                rows.push(MetricsRow {
                    epoch: t,
                    cfe_bits: coefficient_entropy(&dict, &zca)?,
                    cde_nats: conditional_entropy(bank, &xhat, &p, n as f64)?,
                    wall_seconds: train_start.elapsed().as_secs_f64(),
                });
            }
            Ok(())
        })?
    } else {
        run_training(&xhat, &cfg, &mut params)?
    };
    manifest.stage("train", train_start.elapsed().as_secs_f64());

    let start = Instant::now();
    let dict = extract_bases(&model, &bank, &params)?;
    if metrics_every > 0 && state.epoch > 0 && state.epoch % metrics_every != 0 {
        let zca = transform(&model, &patches, TransformMode::Zca)?;
        rows.push(MetricsRow {
            epoch: state.epoch,
            cfe_bits: coefficient_entropy(&dict, &zca)?,
            cde_nats: conditional_entropy(&bank, &xhat, &params, n as f64)?,
            wall_seconds: train_start.elapsed().as_secs_f64(),
        });
    }

    let checkpoint = Checkpoint {
        k0,
        k1,
        epoch: state.epoch,
        beta: params.beta(),
        bias: params.bias(),
        rate_factor: state.rate_factor,
        c: bank.matrix().clone(),
    };
    let checkpoint_path = args.out_dir.join("checkpoint.picp");
    let whitening_path = args.out_dir.join("whitening.piwm");
    let history_path = args.out_dir.join("history.csv");
    let filters_path = args.out_dir.join("filters.pgm");
    save_checkpoint(&checkpoint_path, &checkpoint)?;
    save_whitening_model(&whitening_path, &model)?;
    write_history_csv(&history_path, &state.history)?;
    write_pgm(&filters_path, &render_filter_grid(dict.display(), w)?)?;
    manifest.output(&checkpoint_path).output(&whitening_path);
    manifest.output(&history_path).output(&filters_path);
    if !rows.is_empty() {
        let metrics_path = args.out_dir.join("metrics.csv");
        write_metrics_csv(&metrics_path, &rows)?;
        manifest.output(&metrics_path);
    }
    manifest.stage("artifacts", start.elapsed().as_secs_f64());
    manifest.write(&args.out_dir.join("train.manifest.json"))?;

    println!("patches = {}x{}", patches.dim(), patches.sample_count());
    println!("k0 = {} (epsilon {})", k0, epsilon);
    println!("alg = {}", algorithm_name(algorithm));
    println!("epochs_run = {}", state.epoch);
    if let Some(last) = state.history.last() {
        println!("objective = {:.9e}", last.objective);
    }
    println!("out = {}", args.out_dir.display());
    Ok(())
}
