//! The four training objectives and their analytic gradients.
//!
//! All objectives see the data through `Ŷ = CᵀX̂` and the tuning response
//! `φ`. Sample sums are accumulated over fixed column chunks with an ordered
//! reduction, so values and gradients are bitwise identical for any worker
//! count. Values come per-sample-averaged where the objective sums over
//! samples, making histories comparable across dataset sizes.

use ndarray::{s, Array1, Array2};

use super::FilterBank;
use crate::error::{Error, Result};
use crate::linalg::{chol_solve_in_place, cholesky_in_place, ln_det_from_chol};
use crate::model::{logistic_parts, ln_phi_from_z, TuningParams};
use crate::parallel;

/// `ln(1e-300)`: the per-entry floor applied to `ln φ` inside objective sums.
/// Gradients are never floored.
const LN_FLOOR: f64 = -690.775_527_898_213_7;

/// Fraction of floored responses above which an evaluation fails.
const SATURATION_LIMIT: f64 = 0.01;

fn check_shapes(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<(usize, usize, usize)> {
    let (k0, k1) = (bank.dim(), bank.outputs());
    if xhat.nrows() != k0 {
        return Err(Error::Shape(format!(
            "whitened data has {} rows but the filter bank expects {}",
            xhat.nrows(),
            k0
        )));
    }
    if params.k0() != k0 || params.k1() != k1 {
        return Err(Error::Shape(format!(
            "tuning params are sized for {}x{}, filter bank is {}x{}",
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
    Ok((k0, k1, m))
}

fn require_square(bank: &FilterBank) -> Result<()> {
    if bank.dim() != bank.outputs() {
        return Err(Error::Shape(format!(
            "this objective requires a square filter bank, got {}x{}",
            bank.dim(),
            bank.outputs()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Q₁ (orthonormal-phase objective, square case)

struct LnPhiChunk {
    lnphi: f64,
    floored: usize,
    first_floored: Option<(usize, usize)>,
    grad: Option<Array2<f64>>,
}

/// Shared kernel: accumulates `Σ ln φ` (floored) and optionally `X̂Ωᵀ`.
fn lnphi_pass(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
    with_grad: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    let (_, k1, m) = check_shapes(bank, xhat, params)?;
    let c = bank.matrix();
    let (beta, bias, scale) = (params.beta(), params.bias(), params.scale());

    let chunks = parallel::map_chunks(m, |range| {
        let start = range.start;
        let xc = xhat.slice(s![.., range]);
        let y = c.t().dot(&xc);
        let mut lnphi = 0.0;
        let mut floored = 0;
        let mut first_floored = None;
        let mut omega = with_grad.then(|| Array2::zeros(y.raw_dim()));
        let mut omega_iter = omega.as_mut().map(|o| o.iter_mut());
        for ((k, mm), yv) in y.indexed_iter() {
            let z = beta * yv + bias;
            let mut lp = ln_phi_from_z(beta, scale, z);
            if lp < LN_FLOOR {
                lp = LN_FLOOR;
                floored += 1;
                if first_floored.is_none() {
                    first_floored = Some((k, start + mm));
                }
            }
            lnphi += lp;
            if let Some(iter) = omega_iter.as_mut() {
                let (_, _, one_m_2g) = logistic_parts(z);
                *iter.next().expect("omega matches y in shape") = beta * one_m_2g;
            }
        }
        LnPhiChunk {
            lnphi,
            floored,
            first_floored,
            grad: omega.map(|o| xc.dot(&o.t())),
        }
    });

    let mut lnphi = 0.0;
    let mut floored = 0;
    let mut first_floored = None;
    let mut grad = with_grad.then(|| Array2::zeros((bank.dim(), k1)));
    for chunk in chunks {
        lnphi += chunk.lnphi;
        floored += chunk.floored;
        if first_floored.is_none() {
            first_floored = chunk.first_floored;
        }
        if let (Some(total), Some(part)) = (grad.as_mut(), chunk.grad) {
            *total += &part;
        }
    }

    if floored > 0 {
        let total = k1 * m;
        let (k, mm) = first_floored.expect("floored implies a first index");
        if floored as f64 > SATURATION_LIMIT * total as f64 {
            return Err(Error::Saturation(format!(
                "{} of {} tuning responses underflowed (first at output {}, sample {}); \
                 the slope or the data scale is too large",
                floored, total, k, mm
            )));
        }
        log::warn!(
            "{} of {} tuning responses underflowed (first at output {}, sample {}); \
             objective floored at ln(1e-300)",
            floored,
            total,
            k,
            mm
        );
    }

    let q1 = -lnphi / m as f64;
    Ok((q1, grad.map(|g| g.mapv(|v| -v / m as f64))))
}

/// `Q₁ = −⟨Σ_k ln φ(ŷ_k)⟩` with gradient `−(1/M)X̂Ωᵀ`. Square banks only.
pub fn objective_grad_alg1(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<(f64, Array2<f64>)> {
    require_square(bank)?;
    let (q, grad) = lnphi_pass(bank, xhat, params, true)?;
    Ok((q, grad.expect("gradient requested")))
}

/// Value-only evaluation of `Q₁`.
pub fn objective_alg1(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<f64> {
    require_square(bank)?;
    lnphi_pass(bank, xhat, params, false).map(|(q, _)| q)
}

// ---------------------------------------------------------------------------
// Q₂ (unconstrained-phase objective, square case)

fn q2_logdet_correction(bank: &FilterBank, with_grad: bool) -> Result<(f64, Option<Array2<f64>>)> {
    let c = bank.matrix();
    let mut gram = c.t().dot(c);
    cholesky_in_place(&mut gram)?;
    let lndet = ln_det_from_chol(&gram);
    let correction = if with_grad {
        let mut rhs = c.t().to_owned();
        chol_solve_in_place(&gram, &mut rhs);
        Some(rhs.t().to_owned())
    } else {
        None
    };
    Ok((lndet, correction))
}

/// `Q₂ = Q₁ − ½ ln det(CᵀC)` with gradient `∇Q₁ − C(CᵀC)⁻¹`.
pub fn objective_grad_q2(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<(f64, Array2<f64>)> {
    require_square(bank)?;
    let (q1, grad1) = lnphi_pass(bank, xhat, params, true)?;
    let (lndet, correction) = q2_logdet_correction(bank, true)?;
    let grad = grad1.expect("gradient requested") - &correction.expect("gradient requested");
    Ok((q1 - 0.5 * lndet, grad))
}

/// Value-only evaluation of `Q₂`.
pub fn objective_q2(bank: &FilterBank, xhat: &Array2<f64>, params: &TuningParams) -> Result<f64> {
    require_square(bank)?;
    let (q1, _) = lnphi_pass(bank, xhat, params, false)?;
    let (lndet, _) = q2_logdet_correction(bank, false)?;
    Ok(q1 - 0.5 * lndet)
}

// ---------------------------------------------------------------------------
// Q̂ (determinant surrogate, rectangular case)

/// Shared kernel for the surrogate: mean responses `m_k = ⟨φ(ŷ_k)⟩` and
/// optionally `P = ⟨φ′(ŷ_k) x̂⟩` stacked over k.
fn response_means(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
    with_grad: bool,
) -> (Array1<f64>, Option<Array2<f64>>) {
    let c = bank.matrix();
    let (k0, k1) = (bank.dim(), bank.outputs());
    let m = xhat.ncols();
    let (beta, bias, inv_a) = (params.beta(), params.bias(), 1.0 / params.scale());

    let chunks = parallel::map_chunks(m, |range| {
        let xc = xhat.slice(s![.., range]);
        let y = c.t().dot(&xc);
        let mut phi_sum = Array1::<f64>::zeros(k1);
        let mut phi_prime = with_grad.then(|| Array2::zeros(y.raw_dim()));
        let mut prime_iter = phi_prime.as_mut().map(|p| p.iter_mut());
        for ((k, _), yv) in y.indexed_iter() {
            let z = beta * yv + bias;
            let (_, g1mg, one_m_2g) = logistic_parts(z);
            let phi = inv_a * beta * g1mg;
            phi_sum[k] += phi;
            if let Some(iter) = prime_iter.as_mut() {
                *iter.next().expect("phi_prime matches y in shape") = phi * beta * one_m_2g;
            }
        }
        (phi_sum, phi_prime.map(|p| xc.dot(&p.t())))
    });

    let mut phi_sum = Array1::<f64>::zeros(k1);
    let mut p = with_grad.then(|| Array2::zeros((k0, k1)));
    for (sum_part, p_part) in chunks {
        phi_sum += &sum_part;
        if let (Some(total), Some(part)) = (p.as_mut(), p_part) {
            *total += &part;
        }
    }
    let inv_m = 1.0 / m as f64;
    (
        phi_sum.mapv(|v| v * inv_m),
        p.map(|p| p.mapv(|v| v * inv_m)),
    )
}

fn qhat_pass(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
    with_grad: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    check_shapes(bank, xhat, params)?;
    let c = bank.matrix();
    let (means, p) = response_means(bank, xhat, params, with_grad);
    if let Some((k, _)) = means.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Saturation(format!(
            "mean response of output {} is zero; every sample saturated",
            k
        )));
    }

    // M_det = C·diag(m²)·Cᵀ, assembled as A·Aᵀ with A = C·diag(m).
    let mut a = c.clone();
    for (mut col, mk) in a.columns_mut().into_iter().zip(means.iter()) {
        col.map_inplace(|v| *v *= mk);
    }
    let mut m_det = a.dot(&a.t());
    cholesky_in_place(&mut m_det)?;
    let q = -0.5 * ln_det_from_chol(&m_det);
    if !with_grad {
        return Ok((q, None));
    }

    // S = M_det⁻¹ C; column k of the gradient is
    // −(S_{:,k}·m_k² + m_k·(c_kᵀ S_{:,k})·P_{:,k}).
    let mut s = c.clone();
    chol_solve_in_place(&m_det, &mut s);
    let p = p.expect("gradient requested");
    let mut grad = Array2::zeros(c.raw_dim());
    for k in 0..bank.outputs() {
        let mk = means[k];
        let sk = s.column(k);
        let csk = c.column(k).dot(&sk);
        let pk = p.column(k);
        for i in 0..bank.dim() {
            grad[[i, k]] = -(sk[i] * mk * mk + mk * csk * pk[i]);
        }
    }
    Ok((q, Some(grad)))
}

/// Surrogate objective `Q̂ = −½ ln det(C·diag(⟨φ⟩²)·Cᵀ)` and its gradient,
/// which needs a single K₀×K₀ factorization per evaluation.
pub fn objective_grad_alg2(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<(f64, Array2<f64>)> {
    let (q, grad) = qhat_pass(bank, xhat, params, true)?;
    Ok((q, grad.expect("gradient requested")))
}

/// Value-only evaluation of `Q̂`.
pub fn objective_alg2(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<f64> {
    qhat_pass(bank, xhat, params, false).map(|(q, _)| q)
}

// ---------------------------------------------------------------------------
// Exact reference objective (per-sample determinants)

fn exact_pass(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
    with_grad: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    let (k0, k1, m) = check_shapes(bank, xhat, params)?;
    let c = bank.matrix();
    let (beta, bias, inv_a) = (params.beta(), params.bias(), 1.0 / params.scale());

    let chunks: Vec<Result<(f64, Option<Array2<f64>>)>> = parallel::map_chunks(m, |range| {
        let start = range.start;
        let xc = xhat.slice(s![.., range]);
        let y = c.t().dot(&xc);
        let mut lndet_sum = 0.0;
        let mut grad = with_grad.then(|| Array2::<f64>::zeros((k0, k1)));
        let mut phi = vec![0.0; k1];
        let mut phi_prime = vec![0.0; k1];
        for mm in 0..y.ncols() {
            for k in 0..k1 {
                let z = beta * y[[k, mm]] + bias;
                let (_, g1mg, one_m_2g) = logistic_parts(z);
                phi[k] = inv_a * beta * g1mg;
                phi_prime[k] = phi[k] * beta * one_m_2g;
            }
            // M_m = C·diag(φ²)·Cᵀ via A = C·diag(φ).
            let mut a = c.clone();
            for (mut col, f) in a.columns_mut().into_iter().zip(phi.iter()) {
                col.map_inplace(|v| *v *= f);
            }
            let mut m_mat = a.dot(&a.t());
            if let Err(e) = cholesky_in_place(&mut m_mat) {
                return Err(Error::Conditioning(format!(
                    "per-sample matrix at sample {} is singular: {}",
                    start + mm,
                    e
                )));
            }
            lndet_sum += ln_det_from_chol(&m_mat);
            if let Some(grad) = grad.as_mut() {
                let mut s = c.clone();
                chol_solve_in_place(&m_mat, &mut s);
                for k in 0..k1 {
                    let sk = s.column(k);
                    let omega_k = phi[k] * phi_prime[k] * c.column(k).dot(&sk);
                    let f2 = phi[k] * phi[k];
                    for i in 0..k0 {
                        grad[[i, k]] += sk[i] * f2 + omega_k * xc[[i, mm]];
                    }
                }
            }
        }
        Ok((lndet_sum, grad))
    });

    let mut lndet_total = 0.0;
    let mut grad_total = with_grad.then(|| Array2::zeros((k0, k1)));
    for chunk in chunks {
        let (lndet, grad) = chunk?;
        lndet_total += lndet;
        if let (Some(total), Some(part)) = (grad_total.as_mut(), grad) {
            *total += &part;
        }
    }
    let q = -lndet_total / (2.0 * m as f64);
    Ok((q, grad_total.map(|g| g.mapv(|v| -v / m as f64))))
}

/// Reference objective `Q = −(1/2M) Σ_m ln det(C·diag(φ_m²)·Cᵀ)` with its
/// exact gradient. One K₀×K₀ factorization per sample: accurate and slow.
pub fn objective_grad_exact(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<(f64, Array2<f64>)> {
    let (q, grad) = exact_pass(bank, xhat, params, true)?;
    Ok((q, grad.expect("gradient requested")))
}

/// Value-only evaluation of the reference objective.
pub fn objective_exact(
    bank: &FilterBank,
    xhat: &Array2<f64>,
    params: &TuningParams,
) -> Result<f64> {
    exact_pass(bank, xhat, params, false).map(|(q, _)| q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_ln_phi, eval_nonlinearity, init_tuning};
    use crate::train::manifold::gram_schmidt_rows;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    fn params_for(k0: usize, k1: usize) -> TuningParams {
        let mut p = init_tuning(k0, k1).unwrap();
        p.set_beta(p.beta0());
        p
    }

    /// Central finite differences of a scalar objective over C entries.
    fn fd_gradient(
        c0: &Array2<f64>,
        f: impl Fn(&Array2<f64>) -> f64,
    ) -> Array2<f64> {
        let h = 1e-6;
        let mut grad = Array2::zeros(c0.raw_dim());
        for idx in 0..c0.len() {
            let (i, j) = (idx / c0.ncols(), idx % c0.ncols());
            let mut plus = c0.clone();
            plus[[i, j]] += h;
            let mut minus = c0.clone();
            minus[[i, j]] -= h;
            grad[[i, j]] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        grad
    }

    fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let num: f64 = (a - b).iter().map(|v| v * v).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn q1_identity_bank_single_sample() {
        let params = params_for(3, 3);
        let bank = FilterBank::new(Array2::eye(3)).unwrap();
        let x = array![[0.4], [-1.1], [0.7]];
        let (q, _) = objective_grad_alg1(&bank, &x, &params).unwrap();
        // Oracle: with C = I the projections are the sample itself.
        let want = -eval_ln_phi(&params, &x).sum();
        assert!((q - want).abs() < 1e-12);
    }

    #[test]
    fn q1_is_invariant_to_output_permutation() {
        let params = params_for(3, 3);
        let c = random_matrix(3, 3, 2);
        let mut perm = c.clone();
        let col0 = perm.column(0).to_owned();
        let col2 = perm.column(2).to_owned();
        perm.column_mut(0).assign(&col2);
        perm.column_mut(2).assign(&col0);
        let x = random_matrix(3, 10, 3);
        let (qa, _) = objective_grad_alg1(&FilterBank::new(c).unwrap(), &x, &params).unwrap();
        let (qb, _) = objective_grad_alg1(&FilterBank::new(perm).unwrap(), &x, &params).unwrap();
        assert!((qa - qb).abs() < 1e-12);
    }

    #[test]
    fn q1_gradient_matches_finite_differences() {
        let params = params_for(3, 3);
        let c0 = gram_schmidt_rows(&random_matrix(3, 3, 5)).unwrap();
        let x = random_matrix(3, 10, 6);
        let (_, grad) = objective_grad_alg1(&FilterBank::new(c0.clone()).unwrap(), &x, &params).unwrap();
        let fd = fd_gradient(&c0, |c| {
            objective_alg1(&FilterBank::new(c.clone()).unwrap(), &x, &params).unwrap()
        });
        assert!(rel_err(&grad, &fd) < 1e-5, "relative error {}", rel_err(&grad, &fd));
    }

    #[test]
    fn q1_rejects_rectangular_bank() {
        let params = params_for(2, 3);
        let bank = FilterBank::new(random_matrix(2, 3, 7)).unwrap();
        let x = random_matrix(2, 5, 8);
        assert!(matches!(
            objective_grad_alg1(&bank, &x, &params),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn q1_reports_saturation_with_location() {
        let params = params_for(3, 3);
        let bank = FilterBank::new(Array2::eye(3) * 1.0e6).unwrap();
        let x = Array2::from_elem((3, 4), 0.9);
        match objective_grad_alg1(&bank, &x, &params) {
            Err(Error::Saturation(msg)) => {
                assert!(msg.contains("output 0"));
                assert!(msg.contains("sample 0"));
            }
            other => panic!("expected saturation, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn q2_equals_q1_for_orthogonal_bank() {
        let params = params_for(4, 4);
        let c = gram_schmidt_rows(&random_matrix(4, 4, 9)).unwrap();
        let bank = FilterBank::new(c).unwrap();
        let x = random_matrix(4, 20, 10);
        let (q1, _) = objective_grad_alg1(&bank, &x, &params).unwrap();
        let (q2, _) = objective_grad_q2(&bank, &x, &params).unwrap();
        assert!((q1 - q2).abs() < 1e-12);
    }

    #[test]
    fn q2_logdet_term_scales_as_expected() {
        // Scaling C by s shifts the isolated −½ln det term by −K₁ ln s.
        let params = params_for(3, 3);
        let c = gram_schmidt_rows(&random_matrix(3, 3, 11)).unwrap();
        let x = random_matrix(3, 15, 12);
        let s = 1.7;
        let term = |cm: &Array2<f64>| {
            let bank = FilterBank::new(cm.clone()).unwrap();
            let q2 = objective_q2(&bank, &x, &params).unwrap();
            let q1 = objective_alg1(&bank, &x, &params).unwrap();
            q2 - q1
        };
        let shift = term(&(&c * s)) - term(&c);
        assert!((shift - (-3.0 * s.ln())).abs() < 1e-10);
    }

    #[test]
    fn q2_gradient_matches_finite_differences() {
        let params = params_for(3, 3);
        let c0 = gram_schmidt_rows(&random_matrix(3, 3, 13)).unwrap();
        let x = random_matrix(3, 10, 14);
        let (_, grad) = objective_grad_q2(&FilterBank::new(c0.clone()).unwrap(), &x, &params).unwrap();
        let fd = fd_gradient(&c0, |c| {
            objective_q2(&FilterBank::new(c.clone()).unwrap(), &x, &params).unwrap()
        });
        assert!(rel_err(&grad, &fd) < 1e-5, "relative error {}", rel_err(&grad, &fd));
    }

    #[test]
    fn qhat_reduces_to_mean_logs_for_square_orthogonal() {
        let params = params_for(3, 3);
        let c = gram_schmidt_rows(&random_matrix(3, 3, 15)).unwrap();
        let bank = FilterBank::new(c.clone()).unwrap();
        let x = random_matrix(3, 25, 16);
        let (qhat, _) = objective_grad_alg2(&bank, &x, &params).unwrap();
        // Oracle: mean responses computed through the model module.
        let y = c.t().dot(&x);
        let (_, phi, _) = eval_nonlinearity(&params, &y);
        let want: f64 = -(0..3)
            .map(|k| (phi.row(k).sum() / 25.0).ln())
            .sum::<f64>();
        assert!((qhat - want).abs() < 1e-12);
    }

    #[test]
    fn qhat_gradient_matches_finite_differences() {
        let params = params_for(2, 4);
        let c0 = gram_schmidt_rows(&random_matrix(2, 4, 17)).unwrap();
        let x = random_matrix(2, 20, 18);
        let (_, grad) = objective_grad_alg2(&FilterBank::new(c0.clone()).unwrap(), &x, &params).unwrap();
        let fd = fd_gradient(&c0, |c| {
            objective_alg2(&FilterBank::new(c.clone()).unwrap(), &x, &params).unwrap()
        });
        assert!(rel_err(&grad, &fd) < 1e-4, "relative error {}", rel_err(&grad, &fd));
    }

    #[test]
    fn qhat_duplicate_square_outputs_hit_conditioning() {
        let params = params_for(3, 3);
        let mut c = gram_schmidt_rows(&random_matrix(3, 3, 19)).unwrap();
        let col0 = c.column(0).to_owned();
        c.column_mut(1).assign(&col0);
        let bank = FilterBank::new(c).unwrap();
        let x = random_matrix(3, 12, 20);
        assert!(matches!(
            objective_grad_alg2(&bank, &x, &params),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn exact_equals_q1_for_square_orthogonal() {
        let params = params_for(3, 3);
        let c = gram_schmidt_rows(&random_matrix(3, 3, 21)).unwrap();
        let bank = FilterBank::new(c).unwrap();
        let x = random_matrix(3, 30, 22);
        let (q1, _) = objective_grad_alg1(&bank, &x, &params).unwrap();
        let (qe, _) = objective_grad_exact(&bank, &x, &params).unwrap();
        assert!((q1 - qe).abs() < 1e-10, "Q1 {} vs exact {}", q1, qe);
    }

    #[test]
    fn exact_single_sample_scalar_case() {
        let params = params_for(1, 3);
        let c = array![[0.6, -0.3, 0.8]];
        let bank = FilterBank::new(c.clone()).unwrap();
        let x = array![[1.2]];
        let (q, _) = objective_grad_exact(&bank, &x, &params).unwrap();
        // Oracle: 1×1 determinant evaluated directly.
        let y = c.t().dot(&x);
        let (_, phi, _) = eval_nonlinearity(&params, &y);
        let det: f64 = (0..3).map(|k| c[[0, k]] * c[[0, k]] * phi[[k, 0]] * phi[[k, 0]]).sum();
        assert!((q - (-0.5 * det.ln())).abs() < 1e-12);
    }

    #[test]
    fn exact_gradient_matches_finite_differences() {
        let params = params_for(2, 3);
        let c0 = gram_schmidt_rows(&random_matrix(2, 3, 23)).unwrap();
        let x = random_matrix(2, 5, 24);
        let (_, grad) = objective_grad_exact(&FilterBank::new(c0.clone()).unwrap(), &x, &params).unwrap();
        let fd = fd_gradient(&c0, |c| {
            objective_exact(&FilterBank::new(c.clone()).unwrap(), &x, &params).unwrap()
        });
        assert!(rel_err(&grad, &fd) < 1e-5, "relative error {}", rel_err(&grad, &fd));
    }

    #[test]
    fn value_paths_agree_with_gradient_paths() {
        let x2 = random_matrix(2, 18, 26);
        let x3 = random_matrix(3, 18, 25);
        let square = FilterBank::new(gram_schmidt_rows(&random_matrix(3, 3, 27)).unwrap()).unwrap();
        let wide = FilterBank::new(gram_schmidt_rows(&random_matrix(2, 5, 28)).unwrap()).unwrap();
        let p3 = params_for(3, 3);
        let p25 = params_for(2, 5);
        assert_eq!(
            objective_alg1(&square, &x3, &p3).unwrap(),
            objective_grad_alg1(&square, &x3, &p3).unwrap().0
        );
        assert_eq!(
            objective_q2(&square, &x3, &p3).unwrap(),
            objective_grad_q2(&square, &x3, &p3).unwrap().0
        );
        assert_eq!(
            objective_alg2(&wide, &x2, &p25).unwrap(),
            objective_grad_alg2(&wide, &x2, &p25).unwrap().0
        );
        assert_eq!(
            objective_exact(&wide, &x2, &p25).unwrap(),
            objective_grad_exact(&wide, &x2, &p25).unwrap().0
        );
    }
}
