//! Coefficient entropy (bits) and conditional entropy (nats).
//!
//! The coefficient entropy averages kernel-density entropy estimates of the
//! normalized display-filter responses on ZCA data; it tracks the coding cost
//! of the learned code. The conditional entropy evaluates, per sample, the
//! log-volume of the posterior ellipsoid `(N/K₀)·CΦ̂Cᵀ + I` left by a
//! population of `N` noisy units; it decreases as the population grows or as
//! the units' sensitivities `φ` rise.

use ndarray::{s, Array2};

use crate::analyze::dictionary::Dictionary;
use crate::analyze::entropy::kde_entropy;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, ln_det_from_chol};
use crate::model::{eval_nonlinearity, TuningParams};
use crate::parallel;
use crate::train::FilterBank;

/// Metric pair for one training epoch. The unit suffixes are part of the
/// field names on purpose: the two entropies use different logarithm bases.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    epoch: usize,
    cfe_bits: f64,
    cde_nats: f64,
    population_n: f64,
}

impl MetricsReport {
    pub fn new(epoch: usize, cfe_bits: f64, cde_nats: f64, population_n: f64) -> Result<Self> {
        if !(population_n > 0.0 && population_n.is_finite()) {
            return Err(Error::Domain(format!(
                "population N must be positive and finite, got {}",
                population_n
            )));
        }
        if !cfe_bits.is_finite() || !cde_nats.is_finite() {
            return Err(Error::Domain(format!(
                "entropies must be finite, got cfe {} and cde {}",
                cfe_bits, cde_nats
            )));
        }
        Ok(Self { epoch, cfe_bits, cde_nats, population_n })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn cfe_bits(&self) -> f64 {
        self.cfe_bits
    }

    pub fn cde_nats(&self) -> f64 {
        self.cde_nats
    }

    pub fn population_n(&self) -> f64 {
        self.population_n
    }
}

/// Coefficient entropy in bits: responses are taken through the display
/// filters `č_k` on ZCA data, jointly normalized by `ζ = K₁/Σ‖č_k‖` so the
/// estimate is invariant to uniform filter rescaling, then each coefficient's
/// entropy is estimated by [`kde_entropy`] and averaged.
pub fn coefficient_entropy(dict: &Dictionary, zca: &Array2<f64>) -> Result<f64> {
    if zca.nrows() != dict.dim() {
        return Err(Error::Shape(format!(
            "ZCA data has {} rows, dictionary expects {}",
            zca.nrows(),
            dict.dim()
        )));
    }
    let k1 = dict.outputs();
    let display = dict.display();
    let mut norm_sum = 0.0;
    for (k, col) in display.columns().into_iter().enumerate() {
        let norm = col.dot(&col).sqrt();
        if !(norm > 0.0) {
            return Err(Error::Degenerate(format!(
                "display filter {} has zero norm",
                k
            )));
        }
        norm_sum += norm;
    }
    let zeta = k1 as f64 / norm_sum;
    let responses = display.t().dot(zca) * zeta;
    let mut total = 0.0;
    for k in 0..k1 {
        let row = responses.row(k).to_vec();
        total += kde_entropy(&row)?;
    }
    Ok(total / k1 as f64)
}

/// Conditional entropy in nats over a population of `population_n` units:
///
/// `h₁ = −(1/2M) Σ_m ln det((1/2πe)·((N/K₀)·C Φ̂_m Cᵀ + I))`,
///
/// with `Φ̂_m = diag(φ(ŷ_{k,m})²)`. The per-sample matrix is the identity
/// plus a positive semidefinite term, so its factorization cannot fail on
/// finite input; samples are processed in fixed-size column chunks reduced in
/// order, keeping the result bitwise reproducible under any thread count.
pub fn conditional_entropy(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
    population_n: f64,
) -> Result<f64> {
    if !(population_n > 0.0 && population_n.is_finite()) {
        return Err(Error::Domain(format!(
            "population N must be positive and finite, got {}",
            population_n
        )));
    }
    let (k0, k1) = (bank.dim(), bank.outputs());
    if xhat.nrows() != k0 {
        return Err(Error::Shape(format!(
            "whitened data has {} rows, bank expects {}",
            xhat.nrows(),
            k0
        )));
    }
    if params.k0() != k0 || params.k1() != k1 {
        return Err(Error::Shape(format!(
            "tuning params are {}x{}, bank is {}x{}",
            params.k0(),
            params.k1(),
            k0,
            k1
        )));
    }
    let m = xhat.ncols();
    if m == 0 {
        return Err(Error::Domain("no samples".into()));
    }

    let c = bank.matrix();
    let sqrt_ratio = (population_n / k0 as f64).sqrt();
    let partials = parallel::map_chunks(m, |range| {
        let block = xhat.slice(s![.., range]).to_owned();
        let y = c.t().dot(&block);
        let (_g, phi, _omega) = eval_nonlinearity(params, &y);
        let mut scaled = Array2::<f64>::zeros((k0, k1));
        let mut sum = 0.0;
        for mm in 0..y.ncols() {
            for k in 0..k1 {
                let s = sqrt_ratio * phi[[k, mm]];
                for i in 0..k0 {
                    scaled[[i, k]] = c[[i, k]] * s;
                }
            }
            let mut gram = scaled.dot(&scaled.t());
            for i in 0..k0 {
                gram[[i, i]] += 1.0;
            }
            cholesky_in_place(&mut gram)
                .expect("positive definite by construction: identity added");
            sum += ln_det_from_chol(&gram);
        }
        sum
    });
    let total: f64 = partials.iter().sum();
    let prior = 0.5 * k0 as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    Ok(prior - total / (2.0 * m as f64))
}
