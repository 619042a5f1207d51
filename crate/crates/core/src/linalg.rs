//! Small dense linear-algebra helpers.
//!
//! The symmetric eigendecomposition delegates to nalgebra (pure Rust, so the
//! crate carries no BLAS/LAPACK linkage). Cholesky factorization and the
//! associated solves are implemented in place on ndarray buffers because the
//! exact objective and the conditional-entropy metric factorize one small
//! SPD matrix per sample; per-call conversions would dominate there.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
/// Returns `(values, vectors)` with eigenvectors as columns, in matching order.
pub fn sym_eigh_desc(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let k = m.nrows();
    if k == 0 || m.ncols() != k {
        return Err(Error::Shape(format!(
            "symmetric eigendecomposition needs a square nonempty matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let na = nalgebra::DMatrix::from_fn(k, k, |i, j| m[[i, j]]);
    let eig = na.symmetric_eigen();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut values = Array1::zeros(k);
    let mut vectors = Array2::zeros((k, k));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        for i in 0..k {
            vectors[[i, dst]] = eig.eigenvectors[(i, src)];
        }
    }
    Ok((values, vectors))
}

/// In-place Cholesky factorization `A = L L^T`, lower triangle of `a`
/// overwritten with `L`. The upper triangle is left untouched and must be
/// ignored by callers. Fails when a pivot is not strictly positive.
pub fn cholesky_in_place(a: &mut Array2<f64>) -> Result<()> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        if !(d > 0.0) {
            return Err(Error::Conditioning(format!(
                "matrix not positive definite: pivot {} is {:.3e}",
                j, d
            )));
        }
        let dj = d.sqrt();
        a[[j, j]] = dj;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / dj;
        }
    }
    Ok(())
}

/// Log-determinant of the SPD matrix factored in `l` (as produced by
/// [`cholesky_in_place`]): `ln det A = 2 sum ln L_ii`.
pub fn ln_det_from_chol(l: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..l.nrows() {
        s += l[[i, i]].ln();
    }
    2.0 * s
}

/// Solves `A X = B` in place given the Cholesky factor `L` of `A`; `b` holds
/// the right-hand sides as columns and is overwritten with the solution.
pub fn chol_solve_in_place(l: &Array2<f64>, b: &mut Array2<f64>) {
    let n = l.nrows();
    debug_assert_eq!(n, b.nrows());
    let rhs = b.ncols();
    for c in 0..rhs {
        // forward: L y = b
        for i in 0..n {
            let mut s = b[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * b[[k, c]];
            }
            b[[i, c]] = s / l[[i, i]];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = b[[i, c]];
            for k in i + 1..n {
                s -= l[[k, i]] * b[[k, c]];
            }
            b[[i, c]] = s / l[[i, i]];
        }
    }
}
