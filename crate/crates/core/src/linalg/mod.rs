//! Dense complex linear algebra for the small systems this crate works with
//! (N up to roughly 16).
//!
//! Matrices and vectors are plain `nalgebra` containers over `Complex64`.
//! The eigensolver is a Hessenberg reduction followed by single-shift complex
//! QR sweeps; LU and SVD come from `nalgebra`.

mod eigen;
mod logm;
mod schur;

pub use eigen::{eig, EigenDecomposition};
pub use logm::{log_matrix, sqrt_upper_triangular};
pub use schur::{schur, Schur};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `sigma_min < SINGULAR_RATIO * sigma_max` is treated as exact singularity.
pub const SINGULAR_RATIO: f64 = 1e-10;

/// Default relative tolerance for eigen residuals and solvability checks.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Builds a complex matrix from row-major real/imaginary pairs.
pub fn cmatrix(rows: usize, cols: usize, entries: &[(f64, f64)]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_iterator(
        rows,
        cols,
        entries.iter().map(|&(re, im)| Complex64::new(re, im)),
    )
}

/// Builds a complex matrix from row-major real entries.
pub fn cmatrix_real(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_iterator(
        rows,
        cols,
        entries.iter().map(|&re| Complex64::new(re, 0.0)),
    )
}

pub fn cvector_real(entries: &[f64]) -> CVector {
    CVector::from_iterator(
        entries.len(),
        entries.iter().map(|&re| Complex64::new(re, 0.0)),
    )
}

pub(crate) fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    Ok(a.nrows())
}

pub(crate) fn ensure_finite_matrix(a: &CMatrix, what: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_vector(v: &CVector, what: &'static str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Biorthogonal inner product `sum_i conj(x_i) y_i`, conjugate-linear in `x`.
pub fn binner(x: &CVector, y: &CVector) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    Ok(x.dotc(y))
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let svd = a.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `sigma_min / sigma_max`, zero for the zero matrix.
pub fn inverse_condition(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

/// Solves `A x = b`, refusing numerically singular `A`.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let n = ensure_square(a)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    ensure_finite_matrix(a, "matrix")?;
    ensure_finite_vector(b, "right-hand side")?;
    let ratio = inverse_condition(a);
    if ratio < SINGULAR_RATIO {
        return Err(Error::SingularMatrix { ratio });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularMatrix { ratio })
}

/// Solves `A x = d` when `A` has a one-dimensional kernel spanned by
/// `null_right` (and `null_left` for `A^dagger`).
///
/// The returned solution has no component along `null_right` in the
/// biorthogonal sense, i.e. `<null_left, x> = 0`. The component of `d` along
/// `null_right` must already vanish to within `tol` (relative to
/// `|null_left| |d|`), otherwise the system has no solution.
pub fn solve_singular(
    a: &CMatrix,
    d: &CVector,
    null_left: &CVector,
    null_right: &CVector,
    tol: f64,
) -> Result<CVector> {
    let n = ensure_square(a)?;
    for v in [d, null_left, null_right] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let overlap = null_left.dotc(null_right);
    if overlap.norm() <= f64::EPSILON * null_left.norm() * null_right.norm() {
        return Err(Error::InvalidArgument(
            "left and right null vectors are orthogonal (defective kernel)".into(),
        ));
    }
    let solvability = null_left.dotc(d);
    let scale = null_left.norm() * d.norm().max(f64::MIN_POSITIVE);
    if solvability.norm() > tol * scale {
        return Err(Error::NotSolvable {
            residual: solvability.norm(),
        });
    }

    // Project the (tiny) unsolvable part out along the right null vector, then
    // solve the bordered system [[A, r], [l^dagger, 0]] [x; s] = [d'; 0].
    let d_proj = d - null_right * (solvability / overlap);
    let mut bordered = CMatrix::zeros(n + 1, n + 1);
    bordered.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        bordered[(i, n)] = null_right[i];
        bordered[(n, i)] = null_left[i].conj();
    }
    let mut rhs = CVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(&d_proj);
    let ratio = inverse_condition(&bordered);
    if ratio < SINGULAR_RATIO {
        return Err(Error::SingularMatrix { ratio });
    }
    let sol = bordered
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix { ratio })?;
    Ok(sol.rows(0, n).into_owned())
}

/// Index of the first entry whose modulus is within a relative `1e-10` of the
/// largest one. Used for deterministic gauge fixing.
pub(crate) fn leading_index(v: &CVector) -> usize {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    v.iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0)
}

/// Unit Euclidean norm with the leading entry made real-positive.
pub(crate) fn gauge_fix(v: &CVector) -> CVector {
    let norm = v.norm();
    if norm == 0.0 {
        return v.clone();
    }
    let k = leading_index(v);
    let phase = v[k] / v[k].norm();
    v.map(|z| z / (phase * norm))
}
