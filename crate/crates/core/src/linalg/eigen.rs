use std::cmp::Ordering;

use num_complex::Complex64;

use super::{gauge_fix, schur, singular_values, CMatrix, CVector, Schur, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues with right and left (adjoint) eigenvectors.
///
/// `left_vectors[n]` satisfies `A^dagger l = conj(lambda_n) l`, so for
/// distinct eigenvalues `<left_m, right_n> = 0` whenever `m != n`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right_vectors: Vec<CVector>,
    pub left_vectors: Vec<CVector>,
    /// 2-norm condition number of the matrix of unit right eigenvectors.
    pub condition: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Columns are the right eigenvectors.
    pub fn right_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.right_vectors)
    }
}

fn order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigendecomposition of a general complex matrix.
///
/// Eigenvalues are sorted by real part, then imaginary part. Right vectors
/// have unit norm with the leading entry real-positive; left vectors follow
/// the same gauge. Fails with `NonConvergence` if the residual
/// `|A v - lambda v|` exceeds `tol |A| |v|` for some pair.
pub fn eig(a: &CMatrix, tol: f64) -> Result<EigenDecomposition> {
    let Schur { q, t } = schur(a)?;
    let n = t.nrows();
    let tnorm = t.norm();
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);

    let mut values = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        values.push(lambda);

        // (T - lambda) x = 0 with x_k = 1, back-substitution above k.
        let mut x = CVector::zeros(n);
        x[k] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = ZERO;
            for m in j + 1..=k {
                acc += t[(j, m)] * x[m];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            x[j] = -acc / denom;
        }
        right.push(gauge_fix(&(&q * x)));

        // T^dagger z = conj(lambda) z with z_k = 1, forward-substitution below k.
        let mut z = CVector::zeros(n);
        z[k] = Complex64::new(1.0, 0.0);
        for j in k + 1..n {
            let mut acc = ZERO;
            for m in k..j {
                acc += t[(m, j)].conj() * z[m];
            }
            let mut denom = (t[(j, j)] - lambda).conj();
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            z[j] = -acc / denom;
        }
        left.push(gauge_fix(&(&q * z)));
    }

    let anorm = a.norm().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let r = (a * &right[k] - &right[k] * values[k]).norm();
        let l = (a.adjoint() * &left[k] - &left[k] * values[k].conj()).norm();
        if r > tol * anorm || l > tol * anorm {
            return Err(Error::NonConvergence(0));
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| order(&values[i], &values[j]));
    let values: Vec<Complex64> = idx.iter().map(|&i| values[i]).collect();
    let right_vectors: Vec<CVector> = idx.iter().map(|&i| right[i].clone()).collect();
    let left_vectors: Vec<CVector> = idx.iter().map(|&i| left[i].clone()).collect();

    let s = singular_values(&CMatrix::from_columns(&right_vectors));
    let condition = match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    };

    Ok(EigenDecomposition {
        values,
        right_vectors,
        left_vectors,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cmatrix_real, DEFAULT_TOL};
    use approx::assert_abs_diff_eq;

    #[test]
    fn longhi_static_spectrum() {
        let a = cmatrix_real(3, 3, &[0.0, 1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0]);
        let e = eig(&a, DEFAULT_TOL).unwrap();
        for (got, want) in e.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(got.re, want, epsilon = 1e-12);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_has_finite_condition() {
        let e = eig(&CMatrix::identity(2, 2), DEFAULT_TOL).unwrap();
        assert_eq!(e.values, vec![Complex64::new(1.0, 0.0); 2]);
        assert!(e.condition.is_finite());
        assert_abs_diff_eq!(e.condition, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn square_root_pair_vectors() {
        // [[0, 1], [Omega^2, 0]] with Omega = 1: lambda^2 = 1, v ~ (1, lambda).
        let a = cmatrix_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = eig(&a, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(e.values[0].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1].re, 1.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(e.right_vectors[0][0].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(e.right_vectors[0][1].re, -s, epsilon = 1e-14);
        assert_abs_diff_eq!(e.right_vectors[1][0].re, s, epsilon = 1e-14);
        assert_abs_diff_eq!(e.right_vectors[1][1].re, s, epsilon = 1e-14);
    }

    #[test]
    fn jordan_block_is_flagged_by_condition() {
        let a = cmatrix_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let e = eig(&a, DEFAULT_TOL).unwrap();
        assert!(e.condition > 1e12);
    }

    #[test]
    fn gauge_leading_entry_real_positive() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 1.0),
                Complex64::new(2.0, -1.0),
                Complex64::new(0.5, 0.5),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let e = eig(&a, DEFAULT_TOL).unwrap();
        for v in &e.right_vectors {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-14);
            let k = crate::linalg::leading_index(v);
            assert!(v[k].re > 0.0);
            assert_abs_diff_eq!(v[k].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            eig(&CMatrix::zeros(2, 3), DEFAULT_TOL),
            Err(Error::NotSquare { .. })
        ));
    }
}
