//! Pixel-space dictionary extraction from a trained filter bank.
//!
//! A bank `C` lives in whitened coordinates; the dictionary maps it back:
//! basis vectors `B = a⁻¹·U₀·Σ₀^{1/2}·(CCᵀ)⁻¹·C`, analysis filters
//! `W = a·U₀·Σ₀^{−1/2}·C`, and display filters `Č = U₀·C`. `WᵀB` is then the
//! projection `Cᵀ(CCᵀ)⁻¹C`, so `B(Wᵀx)` reproduces the rank-K₀ part of `x`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{chol_solve_in_place, cholesky_in_place};
use crate::model::TuningParams;
use crate::train::FilterBank;
use crate::whiten::WhiteningModel;

/// Basis, analysis and display matrices extracted from one trained bank, all
/// `K x K₁` in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    basis: Array2<f64>,
    filters: Array2<f64>,
    display: Array2<f64>,
}

impl Dictionary {
    /// Wraps the three matrices, requiring matching nonempty shapes and
    /// finite entries.
    pub fn new(
        basis: Array2<f64>,
        filters: Array2<f64>,
        display: Array2<f64>,
    ) -> Result<Self> {
        let dim = basis.dim();
        if filters.dim() != dim || display.dim() != dim {
            return Err(Error::Shape(format!(
                "dictionary parts disagree: basis {}x{}, filters {}x{}, display {}x{}",
                basis.nrows(),
                basis.ncols(),
                filters.nrows(),
                filters.ncols(),
                display.nrows(),
                display.ncols()
            )));
        }
        if dim.0 == 0 || dim.1 == 0 {
            return Err(Error::Shape("dictionary must be nonempty".into()));
        }
        for m in [&basis, &filters, &display] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate(
                    "dictionary contains a non-finite entry".into(),
                ));
            }
        }
        Ok(Self { basis, filters, display })
    }

    /// Basis vectors `B`, one image-space generator per output.
    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    /// Analysis filters `W`; `Wᵀ(x − mean)` yields the code of a patch.
    pub fn filters(&self) -> &Array2<f64> {
        &self.filters
    }

    /// Display filters `Č`, the bank rotated into pixel coordinates.
    pub fn display(&self) -> &Array2<f64> {
        &self.display
    }

    /// Ambient patch dimension K.
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Output count K₁.
    pub fn outputs(&self) -> usize {
        self.basis.ncols()
    }
}

/// Extracts the pixel-space dictionary of a trained bank.
///
/// Requires the bank's gram `CCᵀ` to be nonsingular (full row rank); after
/// the orthonormal training phase this holds by construction.
pub fn extract_bases(
    model: &WhiteningModel,
    bank: &FilterBank,
    params: &TuningParams,
) -> Result<Dictionary> {
    let k0 = bank.dim();
    if model.retained_rank() != k0 {
        return Err(Error::Shape(format!(
            "bank has {} rows, whitening model retains rank {}",
            k0,
            model.retained_rank()
        )));
    }
    if params.k0() != k0 || params.k1() != bank.outputs() {
        return Err(Error::Shape(format!(
            "tuning params are {}x{}, bank is {}x{}",
            params.k0(),
            params.k1(),
            k0,
            bank.outputs()
        )));
    }

    let c = bank.matrix();
    let mut gram = c.dot(&c.t());
    cholesky_in_place(&mut gram).map_err(|_| {
        Error::Conditioning(
            "filter gram CCᵀ is singular: the bank's rows are linearly dependent".into(),
        )
    })?;
    let mut pseudo = c.to_owned();
    chol_solve_in_place(&gram, &mut pseudo);

    let u0 = model.u0();
    let a = params.scale();
    let mut scaled_pseudo = pseudo;
    for (mut row, &var) in scaled_pseudo.rows_mut().into_iter().zip(model.spectrum0().iter()) {
        row *= var.sqrt();
    }
    let basis = u0.dot(&scaled_pseudo) * (1.0 / a);

    let mut scaled_c = c.to_owned();
    for (mut row, &var) in scaled_c.rows_mut().into_iter().zip(model.spectrum0().iter()) {
        row *= 1.0 / var.sqrt();
    }
    let filters = u0.dot(&scaled_c) * a;

    let display = u0.dot(c);
    Dictionary::new(basis, filters, display)
}
