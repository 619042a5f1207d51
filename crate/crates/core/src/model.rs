//! Sigmoidal tuning nonlinearity, analytic initialization, and slope schedule.
//!
//! Each output neuron applies `g(ŷ) = logistic(β·ŷ + b)` to its projection.
//! The objective works with the scaled derivative `φ = a⁻¹·g′` and the
//! log-derivative ratio `ω = φ′/φ`, both available in closed form. All
//! evaluation goes through a numerically stable path that never forms
//! `exp(z)` for positive `z`, so saturated units degrade gracefully.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Slope coefficient of the analytic initialization `β₀ = 1.81·a`.
const BETA0_COEFF: f64 = 1.81;

/// Default epoch at which the slope schedule switches from `0.5β₀` to `β₀`.
const DEFAULT_T0: usize = 50;

/// Tuning-curve parameters for a bank of `k1` outputs over a `k0`-dimensional
/// whitened input.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningParams {
    beta: f64,
    bias: f64,
    scale: f64,
    k0: usize,
    k1: usize,
    beta0: f64,
    t0: usize,
}

impl TuningParams {
    /// Current slope β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Bias b.
    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Normalization `a = sqrt(k1/k0)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    /// Reference slope `β₀ = 1.81·a`.
    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// Schedule switch epoch.
    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    pub fn set_bias(&mut self, bias: f64) {
        self.bias = bias;
    }

    pub fn with_t0(mut self, t0: usize) -> Self {
        self.t0 = t0;
        self
    }
}

/// Analytic initialization: `b = 0`, `a = sqrt(k1/k0)`, `β₀ = 1.81·a`,
/// schedule switch at epoch 50. The current slope starts at the epoch-1
/// schedule value.
pub fn init_tuning(k0: usize, k1: usize) -> Result<TuningParams> {
    if k0 == 0 || k1 == 0 {
        return Err(Error::Domain(format!(
            "output and input counts must be positive, got k0={}, k1={}",
            k0, k1
        )));
    }
    let scale = (k1 as f64 / k0 as f64).sqrt();
    let beta0 = BETA0_COEFF * scale;
    let mut params = TuningParams {
        beta: beta0,
        bias: 0.0,
        scale,
        k0,
        k1,
        beta0,
        t0: DEFAULT_T0,
    };
    params.beta = beta_at_epoch(&params, 1);
    Ok(params)
}

/// Slope schedule: `0.5·β₀` through epoch `t0`, `β₀` afterwards.
pub fn beta_at_epoch(params: &TuningParams, t: usize) -> f64 {
    debug_assert!(t >= 1, "epochs are 1-based");
    if t <= params.t0 {
        0.5 * params.beta0
    } else {
        params.beta0
    }
}

/// Stable logistic pieces for `z = β·ŷ + b`: returns
/// `(G, G·(1−G), 1−2G)` without ever exponentiating a positive argument.
#[inline]
pub(crate) fn logistic_parts(z: f64) -> (f64, f64, f64) {
    let e = (-z.abs()).exp();
    let denom = 1.0 + e;
    let g_small = e / denom;
    let g1mg = g_small / denom;
    if z >= 0.0 {
        (1.0 / denom, g1mg, (e - 1.0) / denom)
    } else {
        (g_small, g1mg, (1.0 - e) / denom)
    }
}

/// Stable `ln φ(z) = ln(β/a) − |z| − 2·ln(1+e^{−|z|})`.
///
/// Finite for every finite `z`, even where `φ` itself underflows to zero.
#[inline]
pub(crate) fn ln_phi_from_z(beta: f64, scale: f64, z: f64) -> f64 {
    let az = z.abs();
    (beta / scale).ln() - az - 2.0 * (-az).exp().ln_1p()
}

/// Evaluates the tuning bank over a matrix of projections `Ŷ`.
///
/// Returns `(G, Φ, Ω)` elementwise: `G = logistic(βŷ+b)`,
/// `Φ = a⁻¹·β·G(1−G)`, and `Ω = β·(1−2G)`, the closed form of `φ′/φ`.
pub fn eval_nonlinearity(
    params: &TuningParams,
    yhat: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let beta = params.beta;
    let bias = params.bias;
    let inv_a = 1.0 / params.scale;
    let mut g = Array2::zeros(yhat.raw_dim());
    let mut phi = Array2::zeros(yhat.raw_dim());
    let mut omega = Array2::zeros(yhat.raw_dim());
    for (((y, g), phi), omega) in yhat
        .iter()
        .zip(g.iter_mut())
        .zip(phi.iter_mut())
        .zip(omega.iter_mut())
    {
        debug_assert!(y.is_finite(), "projection {} is not finite", y);
        let (gv, g1mg, one_m_2g) = logistic_parts(beta * y + bias);
        *g = gv;
        *phi = inv_a * beta * g1mg;
        *omega = beta * one_m_2g;
    }
    (g, phi, omega)
}

/// Stable elementwise `ln φ` over a matrix of projections.
pub fn eval_ln_phi(params: &TuningParams, yhat: &Array2<f64>) -> Array2<f64> {
    yhat.mapv(|y| ln_phi_from_z(params.beta, params.scale, params.beta * y + params.bias))
}
