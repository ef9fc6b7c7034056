use std::f64::consts::PI;

use num_complex::Complex64;

use super::fourier::beta_coeffs;
use crate::error::{Error, Result};
use crate::linalg::{eig, log_matrix, CMatrix, CVector, I};

/// Floquet generator `R = (i/T) log M`, with the logarithm branch cut rotated
/// to `theta + pi` so eigenvalues of `M` near `exp(i theta)` stay off the cut.
pub fn generator(m: &CMatrix, omega: f64, theta: f64) -> Result<CMatrix> {
    let period = 2.0 * PI / omega.abs();
    let l = log_matrix(&(m * Complex64::from_polar(1.0, -theta)))?;
    let n = m.nrows();
    Ok(CMatrix::identity(n, n) * Complex64::new(-theta / period, 0.0) + l * (I / period))
}

/// Length-2 Jordan chain `(R - mu) q = 0`, `(R - mu) Q2 = q` of the generator
/// at its closest pair of quasi-energies.
#[derive(Debug, Clone)]
pub struct JordanChain {
    /// Mean of the clustered generator eigenvalues.
    pub mu: Complex64,
    pub theta: f64,
    pub generator: CMatrix,
    /// `[q, Q2]` with `|q| = 1` and `Q2` orthogonal to the numerical kernel.
    pub vectors: Vec<CVector>,
    /// `|Q2| / |q|`.
    pub ratio: f64,
    /// `|(R - mu) Q2 - q|`.
    pub residual: f64,
}

impl JordanChain {
    /// Generalized Floquet state `F^(n)` (`n = 1, 2`) at a stroboscopic time `t = mT`,
    /// where the periodic factor is the identity.
    pub fn stroboscopic_state(&self, n: usize, t: f64) -> Result<CVector> {
        if n == 0 || n > self.vectors.len() {
            return Err(Error::InvalidArgument(format!(
                "chain member {n} out of range"
            )));
        }
        let beta = beta_coeffs((n - 1) as u32)?;
        let dim = self.vectors[0].len();
        let mut out = CVector::zeros(dim);
        for k in 0..n {
            let b = beta
                .get((n - 1) as u32, k as u32)
                .expect("table covers k <= n");
            out += &self.vectors[k] * (b * t.powi((n - k - 1) as i32));
        }
        Ok(out * (-I * self.mu * t).exp())
    }
}

/// Extracts the Jordan chain of the closest pair of monodromy eigenvalues.
///
/// The kernel vector is the smallest right singular vector of `R - mu`; the
/// chain partner comes from the pseudo-inverse with that singular value
/// discarded, which is the minimum-norm solution.
pub fn jordan_chain(m: &CMatrix, omega: f64) -> Result<JordanChain> {
    let n = m.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a Jordan chain needs dimension >= 2".into(),
        ));
    }
    let rho = eig(m, 1e-6)?.values;
    let (mut bi, mut bj, mut best) = (0, 1, f64::INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = (rho[i] - rho[j]).norm();
            if d < best {
                (bi, bj, best) = (i, j, d);
            }
        }
    }
    let theta = ((rho[bi] + rho[bj]) * 0.5).arg();
    let r = generator(m, omega, theta)?;
    let period = 2.0 * PI / omega.abs();
    let mu_of = |z: Complex64| {
        Complex64::new(-theta / period, 0.0)
            + I / period * (z * Complex64::from_polar(1.0, -theta)).ln()
    };
    let mu = (mu_of(rho[bi]) + mu_of(rho[bj])) * 0.5;

    let a = &r - CMatrix::identity(n, n) * mu;
    let svd = a.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let s = &svd.singular_values;
    let kmin = (0..n)
        .min_by(|&x, &y| s[x].total_cmp(&s[y]))
        .expect("n >= 2");
    let q: CVector = v_t.row(kmin).adjoint();

    let mut q2 = CVector::zeros(n);
    for k in (0..n).filter(|&k| k != kmin) {
        let coef = u.column(k).dotc(&q) / s[k];
        q2 += v_t.row(k).adjoint() * coef;
    }
    let residual = (&a * &q2 - &q).norm();
    let ratio = q2.norm() / q.norm();
    Ok(JordanChain {
        mu,
        theta,
        generator: r,
        vectors: vec![q, q2],
        ratio,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generator_of_diagonal_monodromy() {
        let omega = 0.5;
        let t = 2.0 * PI / omega;
        let mus = [0.1, -0.2];
        let m = CMatrix::from_diagonal(&CVector::from_iterator(
            2,
            mus.iter().map(|&mu| Complex64::from_polar(1.0, -mu * t)),
        ));
        let r = generator(&m, omega, 0.0).unwrap();
        assert_abs_diff_eq!(r[(0, 0)].re, 0.1, epsilon = 1e-13);
        assert_abs_diff_eq!(r[(1, 1)].re, -0.2, epsilon = 1e-13);
        assert!(r[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn chain_of_exact_jordan_monodromy() {
        // M = exp(-i R T) for R = [[mu, 1], [0, mu]] is rho [[1, -i T], [0, 1]].
        let omega = 1.0;
        let t = 2.0 * PI;
        let mu = -0.3;
        let rho = Complex64::from_polar(1.0, -mu * t);
        let m = CMatrix::from_row_slice(2, 2, &[rho, rho * Complex64::new(0.0, -t), ZERO, rho]);
        let c = jordan_chain(&m, omega).unwrap();
        assert!((c.mu - Complex64::new(mu, 0.0)).norm() < 1e-12);
        let q = &c.vectors[0];
        assert_abs_diff_eq!(q[1].norm(), 0.0, epsilon = 1e-12);
        assert!(c.residual < 1e-10);
        assert_abs_diff_eq!(c.ratio, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn second_generalized_state_follows_stroboscopic_dynamics() {
        // F2(mT) = exp(-i R m T) (i Q2), checked against powers of M.
        let omega = 1.0;
        let m = {
            let rho = Complex64::from_polar(1.0, 0.4);
            CMatrix::from_row_slice(2, 2, &[rho, rho * Complex64::new(0.3, -0.5), ZERO, rho])
        };
        let c = jordan_chain(&m, omega).unwrap();
        let f0 = c.stroboscopic_state(2, 0.0).unwrap();
        let mut a = f0.clone();
        for k in 1..=5 {
            a = &m * a;
            let want = c.stroboscopic_state(2, k as f64 * 2.0 * PI).unwrap();
            assert!((&a - &want).norm() < 1e-10 * want.norm());
        }
        let f1 = c.stroboscopic_state(1, 0.0).unwrap();
        assert!((f1 - &c.vectors[0]).norm() < 1e-15);
        assert!(c.stroboscopic_state(3, 0.0).is_err());
    }
}
