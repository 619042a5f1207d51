//! Training loop: filter-bank state, configuration, and the two-phase
//! optimization over the row-orthonormal manifold.
//!
//! Epochs 1..=t₀ optimize on the manifold (steps retracted by row
//! Gram-Schmidt); afterwards training continues unconstrained. The first
//! algorithm (square banks) switches to the log-det-corrected objective with
//! relative-gradient steps; the second keeps its determinant surrogate and
//! simply drops the retraction. An exact, per-sample-determinant reference
//! objective is available for small verification runs.

pub mod manifold;
pub mod objectives;

use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{beta_at_epoch, TuningParams};

pub use manifold::{
    adapt_step, gram_schmidt_rows, relative_direction, stiefel_direction, stiefel_step,
    Retraction, StepOutcome,
};
pub use objectives::{
    objective_alg1, objective_alg2, objective_exact, objective_grad_alg1, objective_grad_alg2,
    objective_grad_exact, objective_grad_q2, objective_q2,
};

/// The filter matrix `C` (K₀ rows, K₁ output columns).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    c: Array2<f64>,
}

impl FilterBank {
    /// Wraps a matrix, requiring `K₁ ≥ K₀ ≥ 1` and finite entries.
    pub fn new(c: Array2<f64>) -> Result<Self> {
        let (k0, k1) = c.dim();
        if k0 == 0 || k1 < k0 {
            return Err(Error::Shape(format!(
                "filter bank needs at least as many outputs as inputs, got {}x{}",
                k0, k1
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(
                "filter bank contains a non-finite entry".into(),
            ));
        }
        Ok(Self { c })
    }

    /// Input dimension K₀.
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    /// Output count K₁.
    pub fn outputs(&self) -> usize {
        self.c.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.c
    }
}

/// Which objective drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Square banks: orthonormal phase on Q₁, then unconstrained Q₂ with
    /// relative-gradient steps.
    Alg1,
    /// Rectangular banks: determinant surrogate Q̂ throughout.
    Alg2,
    /// Per-sample-determinant reference objective; slow, for verification.
    ExactReference,
}

/// Training knobs. Defaults match the reference configuration:
/// `t_max = 300`, `t0 = 50`, `v1 = 0.4`, `tau = 0.8`, full-batch epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub t_max: usize,
    pub t0: usize,
    pub v1: f64,
    pub tau: f64,
    pub seed: u64,
    pub train_bias: bool,
    /// Columns drawn per epoch; `None` trains on the full dataset. With a
    /// mini-batch each epoch sees a different subset, so the non-increasing
    /// history guarantee applies to full-batch runs only.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Alg1,
            t_max: 300,
            t0: 50,
            v1: 0.4,
            tau: 0.8,
            seed: 0,
            train_bias: false,
            batch_size: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v1 > 0.0 && self.v1 < 1.0) {
            return Err(Error::Domain(format!("v1 = {} outside (0,1)", self.v1)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Domain(format!("tau = {} outside (0,1)", self.tau)));
        }
        if self.t0 < 1 || self.t0 > self.t_max {
            return Err(Error::Domain(format!(
                "t0 = {} outside 1..=t_max ({})",
                self.t0, self.t_max
            )));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Domain("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// One accepted epoch in the training history.
#[derive(Debug, Clone)]
pub struct HistoryRow {
    pub epoch: usize,
    pub objective: f64,
    pub step: f64,
    pub backtracks: u32,
    pub wall_seconds: f64,
}

/// Mutable optimizer state: current epoch, adaptive rate factor, last step.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub epoch: usize,
    pub rate_factor: f64,
    pub step: f64,
    pub tau: f64,
    pub history: Vec<HistoryRow>,
}

impl TrainState {
    pub fn new(v1: f64, tau: f64) -> Self {
        Self { epoch: 0, rate_factor: v1, step: 0.0, tau, history: Vec::new() }
    }
}

#[derive(Clone, Copy)]
enum Active {
    Q1,
    Q2,
    QHat,
    Exact,
}

fn value_of(
    active: Active,
    bank: &FilterBank,
    x: &Array2<f64>,
    p: &TuningParams,
) -> Result<f64> {
    match active {
        Active::Q1 => objective_alg1(bank, x, p),
        Active::Q2 => objective_q2(bank, x, p),
        Active::QHat => objective_alg2(bank, x, p),
        Active::Exact => objective_exact(bank, x, p),
    }
}

fn grad_of(
    active: Active,
    bank: &FilterBank,
    x: &Array2<f64>,
    p: &TuningParams,
) -> Result<(f64, Array2<f64>)> {
    match active {
        Active::Q1 => objective_grad_alg1(bank, x, p),
        Active::Q2 => objective_grad_q2(bank, x, p),
        Active::QHat => objective_grad_alg2(bank, x, p),
        Active::Exact => objective_grad_exact(bank, x, p),
    }
}

/// Draws `take` distinct indices from `0..n`, sorted ascending. The draws use
/// a 64-bit range so streams are identical across platforms.
fn sample_distinct(rng: &mut ChaCha8Rng, n: usize, take: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..take {
        let j = i + rng.random_range(0..(n - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mut out = idx[..take].to_vec();
    out.sort_unstable();
    out
}

fn gather_columns(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), idx.len()));
    for (mut col, &src) in out.columns_mut().into_iter().zip(idx) {
        col.assign(&x.column(src));
    }
    out
}

/// One auxiliary bias update: finite-difference slope of the active objective
/// in `b`, then a backtracked scalar step. Keeps the current bias when no
/// strict decrease is found; this step is best-effort by design.
fn bias_step(
    active: Active,
    bank: &FilterBank,
    x: &Array2<f64>,
    params: &mut TuningParams,
    v1: f64,
    tau: f64,
) -> Result<()> {
    let eval = |b: f64, params: &TuningParams| -> Result<f64> {
        let mut p = params.clone();
        p.set_bias(b);
        value_of(active, bank, x, &p)
    };
    let h = 1e-6;
    let b0 = params.bias();
    let f0 = eval(b0, params)?;
    let slope = (eval(b0 + h, params)? - eval(b0 - h, params)?) / (2.0 * h);
    if slope == 0.0 || !slope.is_finite() {
        return Ok(());
    }
    let kappa = slope.abs() / b0.abs().max(1.0);
    let mut v = v1;
    for _ in 0..=20 {
        let candidate = b0 - (v / kappa) * slope;
        match eval(candidate, params) {
            Ok(f) if f < f0 => {
                params.set_bias(candidate);
                return Ok(());
            }
            Ok(_) => {}
            Err(e) if e.is_numerical() => {}
            Err(e) => return Err(e),
        }
        v *= tau;
    }
    Ok(())
}

/// Runs the configured training loop on whitened data.
///
/// `params` is taken mutably: its slope follows the epoch schedule and, with
/// `train_bias`, its bias is refined; the final values describe the returned
/// bank. `cfg.t0` overrides the schedule switch stored in `params`.
///
/// A line-search stall (no decrease within the backtracking budget) means the
/// objective is converged to floating-point resolution; training stops early
/// and returns the last accepted bank. `state.epoch` reports the epochs that
/// actually ran.
pub fn run_training(
    xhat: &Array2<f64>,
    cfg: &TrainConfig,
    params: &mut TuningParams,
) -> Result<(FilterBank, TrainState)> {
    run_training_observed(xhat, cfg, params, |_, _| Ok(()))
}

/// [`run_training`] with a per-epoch observer, called after each accepted
/// epoch with the epoch number and the current bank. Observer errors abort
/// training.
pub fn run_training_observed<F>(
    xhat: &Array2<f64>,
    cfg: &TrainConfig,
    params: &mut TuningParams,
    mut observer: F,
) -> Result<(FilterBank, TrainState)>
where
    F: FnMut(usize, &FilterBank) -> Result<()>,
{
    cfg.validate()?;
    let (k0, k1) = (params.k0(), params.k1());
    if xhat.nrows() != k0 {
        return Err(Error::Shape(format!(
            "whitened data has {} rows, tuning params expect {}",
            xhat.nrows(),
            k0
        )));
    }
    if xhat.ncols() == 0 {
        return Err(Error::Domain("no training samples".into()));
    }
    if matches!(cfg.algorithm, Algorithm::Alg1 | Algorithm::ExactReference) && k0 != k1 {
        return Err(Error::Shape(format!(
            "this algorithm requires K0 = K1, got {}x{}",
            k0, k1
        )));
    }
    *params = params.clone().with_t0(cfg.t0);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init: Vec<f64> = (0..k0 * k1).map(|_| rng.random_range(-1.0..1.0)).collect();
    let init = Array2::from_shape_vec((k0, k1), init).expect("shape matches draw count");
    let mut bank = FilterBank::new(gram_schmidt_rows(&init)?)?;
    let mut state = TrainState::new(cfg.v1, cfg.tau);

    let m_total = xhat.ncols();
    for t in 1..=cfg.t_max {
        let started = Instant::now();
        params.set_beta(beta_at_epoch(params, t));

        let batch_storage;
        let data: &Array2<f64> = match cfg.batch_size {
            Some(b) if b < m_total => {
                let idx = sample_distinct(&mut rng, m_total, b);
                batch_storage = gather_columns(xhat, &idx);
                &batch_storage
            }
            _ => xhat,
        };

        let in_ortho_phase = t <= cfg.t0;
        let active = match (cfg.algorithm, in_ortho_phase) {
            (Algorithm::Alg1, true) => Active::Q1,
            (Algorithm::Alg1, false) => Active::Q2,
            (Algorithm::Alg2, _) => Active::QHat,
            (Algorithm::ExactReference, _) => Active::Exact,
        };
        let retraction = if in_ortho_phase {
            Retraction::Orthonormalize
        } else {
            Retraction::None
        };

        let (objective, grad) = grad_of(active, &bank, data, params)?;
        let direction = if matches!(active, Active::Q2) {
            relative_direction(bank.matrix(), &grad)
        } else {
            stiefel_direction(bank.matrix(), &grad)
        };
        let outcome = match adapt_step(
            &mut state,
            &bank,
            objective,
            &grad,
            &direction,
            retraction,
            |cand| value_of(active, cand, data, params),
        ) {
            Ok(outcome) => outcome,
            Err(Error::Stall(msg)) => {
                log::info!("converged at epoch {}: {}", t, msg);
                break;
            }
            Err(e) => return Err(e),
        };
        bank = outcome.bank;

        if cfg.train_bias {
            bias_step(active, &bank, data, params, state.rate_factor, cfg.tau)?;
        }

        state.epoch = t;
        state.history.push(HistoryRow {
            epoch: t,
            objective: outcome.objective,
            step: outcome.step,
            backtracks: outcome.backtracks,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
        observer(t, &bank)?;
    }

    Ok((bank, state))
}
