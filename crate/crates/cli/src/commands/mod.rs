//! Subcommand implementations and the plumbing they share.

pub mod denoise;
pub mod export;
pub mod metrics;
pub mod sample;
pub mod train;

use std::path::Path;

use infomax::ingest::PatchMatrix;
use infomax::io::checkpoint::{load_checkpoint, Checkpoint};
use infomax::io::mat1::read_matrix;
use infomax::io::model_file::load_whitening_model;
use infomax::model::{init_tuning, TuningParams};
use infomax::train::{Algorithm, FilterBank};
use infomax::whiten::WhiteningModel;

use crate::{AlgChoice, CliError, CliResult};

/// Integer square root of a patch dimension; errors when K is not square.
pub fn patch_side(k: usize) -> CliResult<usize> {
    let w = (k as f64).sqrt().round() as usize;
    if w * w != k {
        return Err(CliError::App(infomax::Error::Geometry(format!(
            "dimension {} is not a square patch size",
            k
        ))));
    }
    Ok(w)
}

/// Loads a mat1 patch matrix and wraps it with its derived patch width.
pub fn load_patches(path: &Path) -> CliResult<PatchMatrix> {
    let m = read_matrix(path)?;
    let w = patch_side(m.nrows())?;
    Ok(PatchMatrix::new(m, w)?)
}

/// A checkpoint joined with its whitening model, rebuilt into live types.
pub struct LoadedRun {
    pub checkpoint: Checkpoint,
    pub model: WhiteningModel,
    pub bank: FilterBank,
    pub params: TuningParams,
}

/// Loads and cross-checks a checkpoint/whitening-model pair.
pub fn load_run(checkpoint_path: &Path, whitening_path: &Path) -> CliResult<LoadedRun> {
    let checkpoint = load_checkpoint(checkpoint_path)?;
    let model = load_whitening_model(whitening_path)?;
    if model.retained_rank() != checkpoint.k0 {
        return Err(CliError::App(infomax::Error::Shape(format!(
            "checkpoint K0 {} does not match the whitening model's retained rank {}",
            checkpoint.k0,
            model.retained_rank()
        ))));
    }
    let bank = FilterBank::new(checkpoint.c.clone())?;
    let mut params = init_tuning(checkpoint.k0, checkpoint.k1)?;
    params.set_beta(checkpoint.beta);
    params.set_bias(checkpoint.bias);
    Ok(LoadedRun { checkpoint, model, bank, params })
}

/// Applies the `auto` rule: alg1 exactly when the bank is square.
pub fn resolve_algorithm(choice: AlgChoice, k0: usize, k1: usize) -> Algorithm {
    match choice {
        AlgChoice::Auto => {
            if k0 == k1 {
                Algorithm::Alg1
            } else {
                Algorithm::Alg2
            }
        }
        AlgChoice::Alg1 => Algorithm::Alg1,
        AlgChoice::Alg2 => Algorithm::Alg2,
        AlgChoice::Exact => Algorithm::ExactReference,
    }
}

/// The exact objective is for small verification instances only.
pub fn guard_exact(algorithm: Algorithm, k1: usize, m: usize) -> CliResult<()> {
    const LIMIT: u128 = 1_000_000;
    if algorithm == Algorithm::ExactReference && (k1 as u128) * (m as u128) > LIMIT {
        return Err(CliError::Usage(format!(
            "alg=exact is refused for K1*M = {} > {}; use alg1 or alg2",
            (k1 as u128) * (m as u128),
            LIMIT
        )));
    }
    Ok(())
}

pub fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Alg1 => "alg1",
        Algorithm::Alg2 => "alg2",
        Algorithm::ExactReference => "exact",
    }
}
