use num_complex::Complex64;

use super::{ensure_finite_matrix, ensure_square, CMatrix, CVector, ZERO};
use crate::error::{Error, Result};

/// Complex Schur form `A = Q T Q^dagger` with `Q` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub q: CMatrix,
    pub t: CMatrix,
}

/// Complex Schur decomposition by Householder reduction to Hessenberg form and
/// implicit single-shift QR sweeps with Wilkinson shifts.
///
/// The total number of sweeps is capped at `100 * N`.
pub fn schur(a: &CMatrix) -> Result<Schur> {
    let n = ensure_square(a)?;
    ensure_finite_matrix(a, "matrix")?;
    let mut h = a.clone();
    let mut q = CMatrix::identity(n, n);
    if n == 1 {
        return Ok(Schur { q, t: h });
    }

    hessenberg(&mut h, &mut q);
    qr_sweeps(&mut h, &mut q, 100 * n)?;

    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { q, t: h })
}

fn hessenberg(h: &mut CMatrix, q: &mut CMatrix) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: CVector = h.view((k + 1, k), (n - k - 1, 1)).column(0).into_owned();
        let alpha_abs = x.norm();
        if alpha_abs == 0.0 {
            continue;
        }
        // v = x + e^{i arg x0} |x| e1 avoids cancellation.
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut v = x.clone();
        v[0] += phase * alpha_abs;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= Complex64::new(vnorm, 0.0);

        // H <- P H P with P = I - 2 v v^dagger acting on rows/cols k+1..n.
        for j in 0..n {
            let mut s = ZERO;
            for i in 0..v.len() {
                s += v[i].conj() * h[(k + 1 + i, j)];
            }
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * s * 2.0;
            }
        }
        for m in [&mut *h, &mut *q] {
            for i in 0..n {
                let mut s = ZERO;
                for j in 0..v.len() {
                    s += m[(i, k + 1 + j)] * v[j];
                }
                for j in 0..v.len() {
                    m[(i, k + 1 + j)] -= s * v[j].conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G (a, b)^T = (r, 0)^T`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let rho = an.hypot(bn);
    (an / rho, (a / an) * b.conj() / rho)
}

fn rotate_rows(m: &mut CMatrix, k: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = m[(k, j)];
        let y = m[(k + 1, j)];
        m[(k, j)] = x * c + s * y;
        m[(k + 1, j)] = -s.conj() * x + y * c;
    }
}

fn rotate_cols(m: &mut CMatrix, k: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    for i in rows {
        let x = m[(i, k)];
        let y = m[(i, k + 1)];
        m[(i, k)] = x * c + y * s.conj();
        m[(i, k + 1)] = -x * s + y * c;
    }
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_sweeps(h: &mut CMatrix, q: &mut CMatrix, max_sweeps: usize) -> Result<()> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let hnorm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let small = f64::MIN_POSITIVE * n as f64 / eps;
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut its = 0usize;

    while hi > 0 {
        // Find the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if diag == 0.0 {
                diag = hnorm;
            }
            if sub <= eps * diag || sub <= small {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }

        if sweeps >= max_sweeps {
            return Err(Error::NonConvergence(sweeps));
        }
        sweeps += 1;
        its += 1;

        let shift = if its.is_multiple_of(10) {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].re.abs(), 0.0)
        } else {
            wilkinson_shift(h, hi)
        };

        let (c, s) = givens(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        rotate_rows(h, lo, c, s, lo..n);
        rotate_cols(h, lo, c, s, 0..(lo + 3).min(hi + 1));
        rotate_cols(q, lo, c, s, 0..n);
        for k in lo + 1..hi {
            let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
            rotate_rows(h, k, c, s, k - 1..n);
            h[(k + 1, k - 1)] = ZERO;
            rotate_cols(h, k, c, s, 0..(k + 3).min(hi + 1));
            rotate_cols(q, k, c, s, 0..n);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cmatrix_real;

    fn assert_schur(a: &CMatrix) {
        let s = schur(a).unwrap();
        let n = a.nrows();
        let recon = &s.q * &s.t * s.q.adjoint();
        assert!((recon - a).norm() < 1e-12 * a.norm().max(1.0));
        assert!((s.q.adjoint() * &s.q - CMatrix::identity(n, n)).norm() < 1e-12);
        for j in 0..n {
            for i in j + 1..n {
                assert_eq!(s.t[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn triangularizes_real_and_complex_inputs() {
        assert_schur(&cmatrix_real(
            3,
            3,
            &[0.0, 1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0],
        ));
        // Cyclic permutation: unit-modulus eigenvalues, a classic stall case.
        assert_schur(&cmatrix_real(
            4,
            4,
            &[
                0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
            ],
        ));
        let mut a = CMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                a[(i, j)] = Complex64::new(
                    ((i * 7 + j * 3) % 5) as f64 - 2.0,
                    (i as f64 - j as f64) * 0.3,
                );
            }
        }
        assert_schur(&a);
        assert_schur(&CMatrix::identity(2, 2));
        assert_schur(&CMatrix::zeros(3, 3));
    }
}
