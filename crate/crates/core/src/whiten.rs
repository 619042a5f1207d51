//! Covariance eigendecomposition, rank selection, and whitening transforms.
//!
//! [`fit_whitening`] eigendecomposes the sample covariance of centered
//! patches, orders the spectrum descending, and retains the smallest leading
//! rank whose cumulative energy fraction reaches the threshold. The fitted
//! [`WhiteningModel`] then applies the whitening map, its ZCA variant, or the
//! low-rank reconstruction.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::ingest::PatchMatrix;
use crate::linalg::sym_eigh_desc;
use crate::parallel;

/// Eigenvalues at or below `RANK_FLOOR * largest` fail the fit.
const RANK_FLOOR: f64 = 1e-12;

/// Which linear map [`transform`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMode {
    /// `x̂ = Σ₀^{-1/2} U₀ᵀ (x − mean)`, a K₀-dimensional decorrelated vector.
    Whiten,
    /// `x̌ = U₀ x̂`, the same signal rotated back into pixel coordinates.
    Zca,
}

/// Fitted whitening model: dataset mean, full eigenbasis, spectrum, and the
/// retained rank for the stored threshold.
#[derive(Debug, Clone)]
pub struct WhiteningModel {
    mean: Array1<f64>,
    eigvecs_full: Array2<f64>,
    spectrum: Array1<f64>,
    retained_rank: usize,
    threshold: f64,
}

impl WhiteningModel {
    /// Assembles a model from parts, validating structural invariants.
    ///
    /// Orthogonality is checked against a tolerance that admits matrices
    /// round-tripped through 32-bit storage; a freshly fitted model is
    /// orthogonal to near machine precision.
    pub fn new(
        mean: Array1<f64>,
        eigvecs_full: Array2<f64>,
        spectrum: Array1<f64>,
        retained_rank: usize,
        threshold: f64,
    ) -> Result<Self> {
        let k = mean.len();
        if eigvecs_full.nrows() != k || eigvecs_full.ncols() != k || spectrum.len() != k {
            return Err(Error::Geometry(format!(
                "inconsistent model parts: mean {}, eigvecs {}x{}, spectrum {}",
                k,
                eigvecs_full.nrows(),
                eigvecs_full.ncols(),
                spectrum.len()
            )));
        }
        if k == 0 {
            return Err(Error::Domain("model dimension must be >= 1".into()));
        }
        if retained_rank == 0 || retained_rank > k {
            return Err(Error::Domain(format!(
                "retained rank {} outside 1..={}",
                retained_rank, k
            )));
        }
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::Domain(format!(
                "threshold {} outside (0,1]",
                threshold
            )));
        }
        for i in 1..spectrum.len() {
            if !(spectrum[i] <= spectrum[i - 1]) {
                return Err(Error::Domain(format!(
                    "spectrum increases at index {}: {} < {}",
                    i - 1,
                    spectrum[i - 1],
                    spectrum[i]
                )));
            }
        }
        if let Some((i, &v)) = spectrum.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::Domain(format!(
                "spectrum entry {} is {} (must be positive)",
                i, v
            )));
        }
        let gram = eigvecs_full.t().dot(&eigvecs_full);
        let mut ortho_err = 0.0f64;
        for ((i, j), v) in gram.indexed_iter() {
            let d = v - if i == j { 1.0 } else { 0.0 };
            ortho_err += d * d;
        }
        if ortho_err.sqrt() > 1e-4 * k as f64 {
            return Err(Error::Degenerate(format!(
                "eigenbasis is not orthogonal: ||UᵀU - I||_F = {:.3e}",
                ortho_err.sqrt()
            )));
        }
        Ok(Self { mean, eigvecs_full, spectrum, retained_rank, threshold })
    }

    /// Ambient patch dimension K.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Retained rank K₀.
    pub fn retained_rank(&self) -> usize {
        self.retained_rank
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn eigvecs_full(&self) -> &Array2<f64> {
        &self.eigvecs_full
    }

    pub fn spectrum(&self) -> &Array1<f64> {
        &self.spectrum
    }

    /// First K₀ eigenvector columns.
    pub fn u0(&self) -> ArrayView2<'_, f64> {
        self.eigvecs_full.slice(s![.., ..self.retained_rank])
    }

    /// First K₀ variances.
    pub fn spectrum0(&self) -> ArrayView1<'_, f64> {
        self.spectrum.slice(s![..self.retained_rank])
    }
}

/// Smallest rank whose cumulative energy fraction
/// `sqrt(Σ_{k≤K₀} σ_k² / Σ_k σ_k²)` reaches `threshold`.
///
/// A threshold of exactly 1 always selects the full rank.
pub fn select_rank(spectrum: ArrayView1<'_, f64>, threshold: f64) -> Result<usize> {
    if spectrum.is_empty() {
        return Err(Error::Domain("empty spectrum".into()));
    }
    if let Some((i, &v)) = spectrum.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!(
            "spectrum entry {} is {} (must be positive)",
            i, v
        )));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Domain(format!(
            "threshold {} outside (0,1]",
            threshold
        )));
    }
    let k = spectrum.len();
    if threshold == 1.0 {
        return Ok(k);
    }
    let total: f64 = spectrum.sum();
    let mut cum = 0.0;
    for (i, &v) in spectrum.iter().enumerate() {
        cum += v;
        if (cum / total).sqrt() >= threshold {
            return Ok(i + 1);
        }
    }
    Ok(k)
}

/// Fits the eigendecomposition of the sample covariance `XXᵀ/(M−1)` of
/// centered patches and selects the retained rank for `threshold`.
///
/// `mean` is the dataset mean removed from the patches (see
/// [`crate::ingest::center`]); it is stored so the model can be applied to
/// raw data later. Fails with a conditioning error when the covariance is
/// numerically rank-deficient (an eigenvalue at or below `1e-12` of the
/// largest).
pub fn fit_whitening(
    patches: &PatchMatrix,
    mean: Array1<f64>,
    threshold: f64,
) -> Result<WhiteningModel> {
    let k = patches.dim();
    let m = patches.sample_count();
    if m < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 samples to estimate covariance, got {}",
            m
        )));
    }
    if mean.len() != k {
        return Err(Error::Geometry(format!(
            "mean length {} does not match patch dimension {}",
            mean.len(),
            k
        )));
    }
    debug_assert!(
        patches
            .data()
            .mean_axis(Axis(1))
            .map(|rm| rm.iter().all(|v| v.abs() < 1e-8))
            .unwrap_or(false),
        "fit_whitening expects centered patches"
    );

    // Chunked Gram accumulation: parallel over fixed column blocks, summed in
    // block order so the result is identical for any thread count.
    let x = patches.data();
    let partials = parallel::map_chunks(m, |range| {
        let block = x.slice(s![.., range]);
        block.dot(&block.t())
    });
    let mut cov = Array2::<f64>::zeros((k, k));
    for p in partials {
        cov += &p;
    }
    cov /= (m - 1) as f64;

    let (mut spectrum, mut eigvecs) = sym_eigh_desc(&cov)?;

    // Sign convention: make each eigenvector's largest-magnitude entry
    // positive so fits are reproducible across platforms.
    for mut col in eigvecs.columns_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.map_inplace(|v| *v = -*v);
        }
    }

    let largest = spectrum[0];
    if !(largest > 0.0) {
        return Err(Error::Conditioning(format!(
            "largest covariance eigenvalue is {:.3e}; data has no variance",
            largest
        )));
    }
    let floor = RANK_FLOOR * largest;
    for (i, v) in spectrum.iter_mut().enumerate() {
        if !(*v > floor) {
            return Err(Error::Conditioning(format!(
                "covariance eigenvalue {} is {:.3e}, at or below {:.3e} \
                 ({:e} of the largest); reduce the patch dimension or add data",
                i, v, floor, RANK_FLOOR
            )));
        }
    }

    let retained = select_rank(spectrum.view(), threshold)?;
    WhiteningModel::new(mean, eigvecs, spectrum, retained, threshold)
}

/// Applies the whitening or ZCA map to raw (uncentered) patches.
///
/// `Whiten` returns a `K₀ x M` matrix, `Zca` a `K x M` matrix.
pub fn transform(
    model: &WhiteningModel,
    patches: &PatchMatrix,
    mode: TransformMode,
) -> Result<Array2<f64>> {
    let centered = subtract_mean(model, patches)?;
    let u0 = model.u0();
    let mut hat = u0.t().dot(&centered);
    for (mut row, &var) in hat.rows_mut().into_iter().zip(model.spectrum0().iter()) {
        let inv = 1.0 / var.sqrt();
        row.map_inplace(|v| *v *= inv);
    }
    match mode {
        TransformMode::Whiten => Ok(hat),
        TransformMode::Zca => Ok(u0.dot(&hat)),
    }
}

/// Rank-K₀ reconstruction `X̆ = U₀U₀ᵀ(X − mean) + mean`.
pub fn reconstruct_lowrank(model: &WhiteningModel, patches: &PatchMatrix) -> Result<Array2<f64>> {
    let centered = subtract_mean(model, patches)?;
    let u0 = model.u0();
    let mut out = u0.dot(&u0.t().dot(&centered));
    out += &model.mean().view().insert_axis(Axis(1));
    Ok(out)
}

fn subtract_mean(model: &WhiteningModel, patches: &PatchMatrix) -> Result<Array2<f64>> {
    if patches.dim() != model.dim() {
        return Err(Error::Geometry(format!(
            "patch dimension {} does not match model dimension {}",
            patches.dim(),
            model.dim()
        )));
    }
    Ok(patches.data() - &model.mean().view().insert_axis(Axis(1)))
}
