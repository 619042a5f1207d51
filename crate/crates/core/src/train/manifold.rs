//! Manifold steps, row orthonormalization, and adaptive step-size control.

use ndarray::Array2;

use super::{FilterBank, TrainState};
use crate::error::{Error, Result};

/// Maximum consecutive step shrinkages before a stall error.
const MAX_BACKTRACKS: u32 = 60;

/// How an accepted candidate is mapped back onto the constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retraction {
    /// Row Gram-Schmidt after the step (orthonormal training phase).
    Orthonormalize,
    /// Keep the raw step (unconstrained phase).
    None,
}

/// Tangent-style update direction `−∇ + C∇ᵀC`.
pub fn stiefel_direction(c: &Array2<f64>, grad: &Array2<f64>) -> Array2<f64> {
    c.dot(&grad.t()).dot(c) - grad
}

/// One manifold step `C′ = C + μ(−∇ + C∇ᵀC)`.
pub fn stiefel_step(c: &Array2<f64>, grad: &Array2<f64>, mu: f64) -> Array2<f64> {
    c + &(mu * &stiefel_direction(c, grad))
}

/// Relative-gradient direction `−CCᵀ∇` for the unconstrained phase.
pub fn relative_direction(c: &Array2<f64>, grad: &Array2<f64>) -> Array2<f64> {
    -c.dot(&c.t()).dot(grad)
}

/// Orthonormalizes the rows of `c` by modified Gram-Schmidt with
/// re-orthogonalization, preserving the span and the first row's direction.
pub fn gram_schmidt_rows(c: &Array2<f64>) -> Result<Array2<f64>> {
    let mut q = c.clone();
    let rows = q.nrows();
    for i in 0..rows {
        let scale = c.row(i).dot(&c.row(i)).sqrt();
        // Two projection passes keep orthogonality near machine precision
        // even for ill-conditioned inputs.
        for _ in 0..2 {
            for j in 0..i {
                let proj = q.row(j).dot(&q.row(i));
                let prev = q.row(j).to_owned();
                q.row_mut(i).zip_mut_with(&prev, |a, b| *a -= proj * b);
            }
        }
        let norm = q.row(i).dot(&q.row(i)).sqrt();
        if norm <= 1e-12 * scale.max(1.0) {
            return Err(Error::Rank(format!(
                "row {} is linearly dependent on the rows above it",
                i
            )));
        }
        q.row_mut(i).map_inplace(|v| *v /= norm);
    }
    Ok(q)
}

/// Step-size factor `κ = (1/K₁) Σ_k ‖∇_{:,k}‖ / ‖C_{:,k}‖`.
///
/// Columns of `C` with zero norm are skipped; their ratio is undefined and
/// they carry no step-scale information.
fn kappa(c: &Array2<f64>, grad: &Array2<f64>) -> f64 {
    let k1 = c.ncols();
    let mut sum = 0.0;
    for (gc, cc) in grad.columns().into_iter().zip(c.columns()) {
        let cn = cc.dot(&cc).sqrt();
        if cn > 0.0 {
            sum += gc.dot(&gc).sqrt() / cn;
        }
    }
    sum / k1 as f64
}

/// An accepted adaptive step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub bank: FilterBank,
    pub objective: f64,
    pub step: f64,
    pub backtracks: u32,
}

/// Backtracking line search along `direction` with the adaptive step
/// `μ = v/κ`.
///
/// The candidate `C + μ·direction` is retracted per `retraction` and
/// evaluated with `objective_fn`; a strictly smaller objective is accepted
/// and the surviving rate factor `v` carries forward in `state`. Candidates
/// that fail numerically (rank loss, saturation, conditioning) count as
/// rejections. After 60 shrinkages without a decrease the step stalls.
///
/// A zero gradient or zero direction is a fixed point: the current bank is
/// accepted unchanged.
pub fn adapt_step<F>(
    state: &mut TrainState,
    bank: &FilterBank,
    current_objective: f64,
    grad: &Array2<f64>,
    direction: &Array2<f64>,
    retraction: Retraction,
    mut objective_fn: F,
) -> Result<StepOutcome>
where
    F: FnMut(&FilterBank) -> Result<f64>,
{
    let k = kappa(bank.matrix(), grad);
    let dir_norm = direction.iter().map(|v| v * v).sum::<f64>();
    if k == 0.0 || dir_norm == 0.0 {
        state.step = 0.0;
        return Ok(StepOutcome {
            bank: bank.clone(),
            objective: current_objective,
            step: 0.0,
            backtracks: 0,
        });
    }

    let mut v = state.rate_factor;
    for backtracks in 0..=MAX_BACKTRACKS {
        let mu = v / k;
        let raw = bank.matrix() + &(mu * direction);
        let candidate = match retraction {
            Retraction::Orthonormalize => gram_schmidt_rows(&raw).and_then(FilterBank::new),
            Retraction::None => FilterBank::new(raw),
        };
        let evaluated = candidate.and_then(|cand| Ok((objective_fn(&cand)?, cand)));
        match evaluated {
            Ok((obj, cand)) if obj < current_objective => {
                state.rate_factor = v;
                state.step = mu;
                return Ok(StepOutcome { bank: cand, objective: obj, step: mu, backtracks });
            }
            Ok(_) => {}
            Err(e) if e.is_numerical() => {
                log::debug!("candidate rejected at backtrack {}: {}", backtracks, e);
            }
            Err(e) => return Err(e),
        }
        v *= state.tau;
    }
    state.rate_factor = v;
    Err(Error::Stall(format!(
        "no objective decrease after {} step reductions; objective {:.6e}",
        MAX_BACKTRACKS, current_objective
    )))
}
