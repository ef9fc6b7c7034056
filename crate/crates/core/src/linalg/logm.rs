use num_complex::Complex64;

use super::{schur, CMatrix};
use crate::error::{Error, Result};

/// Principal square root of an upper-triangular matrix (Bjorck-Hammarling
/// recurrence). Well defined as long as no two diagonal square roots sum to zero.
pub fn sqrt_upper_triangular(t: &CMatrix) -> Result<CMatrix> {
    let n = t.nrows();
    let mut u = CMatrix::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for j in 0..n {
        for i in (0..j).rev() {
            let mut acc = t[(i, j)];
            for k in i + 1..j {
                acc -= u[(i, k)] * u[(k, j)];
            }
            let denom = u[(i, i)] + u[(j, j)];
            if denom.norm() <= f64::EPSILON * (u[(i, i)].norm() + u[(j, j)].norm()) {
                return Err(Error::InvalidArgument(
                    "eigenvalues straddle the branch cut of the principal square root".into(),
                ));
            }
            u[(i, j)] = acc / denom;
        }
    }
    Ok(u)
}

/// Principal matrix logarithm via Schur form and inverse scaling and squaring:
/// repeated triangular square roots bring `T` close to the identity, then the
/// Mercator series of `log(I + X)` is summed and scaled back by `2^k`.
///
/// Robust for clustered (near-defective) eigenvalues, unlike Parlett's recurrence.
pub fn log_matrix(a: &CMatrix) -> Result<CMatrix> {
    let s = schur(a)?;
    let n = s.t.nrows();
    for i in 0..n {
        if s.t[(i, i)].norm() == 0.0 {
            return Err(Error::SingularMatrix { ratio: 0.0 });
        }
    }
    let id = CMatrix::identity(n, n);
    let mut t = s.t.clone();
    let mut k = 0u32;
    while (&t - &id).norm() > 0.2 {
        if k >= 60 {
            return Err(Error::NonConvergence(k as usize));
        }
        t = sqrt_upper_triangular(&t)?;
        k += 1;
    }
    let x = &t - &id;
    let mut term = x.clone();
    let mut sum = CMatrix::zeros(n, n);
    for m in 1..=80 {
        let coef = if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64;
        sum += &term * Complex64::new(coef, 0.0);
        if term.norm() * (1.0 / m as f64) < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        term = &term * &x;
    }
    let scale = Complex64::new(2f64.powi(k as i32), 0.0);
    let log_t = sum * scale;
    Ok(&s.q * log_t * s.q.adjoint())
}
