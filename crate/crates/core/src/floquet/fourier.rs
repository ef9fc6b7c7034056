use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{fold, fold_shift, h0_real_spectrum, predict_ep, DEFAULT_EPS_RES};
use crate::error::{Error, Result};
use crate::linalg::{binner, leading_index, solve, solve_singular, CMatrix, CVector, I, ONE};
use crate::model::PeriodicHamiltonian;

/// Relative size of the trailing Fourier coefficients accepted as converged.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-10;
/// Largest harmonic index the recursion is allowed to reach.
pub const L_MAX_CAP: i64 = 512;

const RESIDUAL_SAMPLES: usize = 32;

/// Truncated Fourier representation
/// `f(t) = exp(-i mu t) sum_l (a_l + gamma t b_l) exp(i l omega t)`.
///
/// `mu` is folded into the principal zone; coefficient indices are shifted to match.
#[derive(Debug, Clone)]
pub struct FourierFloquetState {
    pub mu: Complex64,
    pub omega: f64,
    pub coeffs: BTreeMap<i64, CVector>,
    pub secular_coeffs: Option<BTreeMap<i64, CVector>>,
    pub gamma: Option<Complex64>,
    pub l_min: i64,
    pub l_max: i64,
    /// Largest relative residual `|i f' - H f| / |f|` found on a uniform grid.
    pub residual_bound: f64,
    /// `|<w_dag, d>|` after inserting `gamma` (generalized states only).
    pub solvability: Option<f64>,
}

impl FourierFloquetState {
    fn sum(
        map: &BTreeMap<i64, CVector>,
        omega: f64,
        t: f64,
        dim: usize,
        weight: impl Fn(i64) -> Complex64,
    ) -> CVector {
        let mut out = CVector::zeros(dim);
        for (&l, c) in map {
            out.axpy(
                weight(l) * Complex64::from_polar(1.0, l as f64 * omega * t),
                c,
                ONE,
            );
        }
        out
    }

    fn dim(&self) -> usize {
        self.coeffs.values().next().map_or(0, |v| v.len())
    }

    /// `f(t)`.
    pub fn eval(&self, t: f64) -> CVector {
        let n = self.dim();
        let mut f = Self::sum(&self.coeffs, self.omega, t, n, |_| ONE);
        if let (Some(b), Some(g)) = (&self.secular_coeffs, self.gamma) {
            f += Self::sum(b, self.omega, t, n, |_| g * t);
        }
        f * (-I * self.mu * t).exp()
    }

    /// `df/dt`, differentiated term by term.
    pub fn derivative(&self, t: f64) -> CVector {
        let n = self.dim();
        let w = self.omega;
        let mu = self.mu;
        let mut d = Self::sum(&self.coeffs, w, t, n, |l| I * (l as f64 * w) - I * mu);
        if let (Some(b), Some(g)) = (&self.secular_coeffs, self.gamma) {
            d += Self::sum(b, w, t, n, |l| {
                g * (ONE + t * (I * (l as f64 * w) - I * mu))
            });
        }
        d * (-I * mu * t).exp()
    }

    /// Relative residual of `i df/dt = H(t) f` at time `t`.
    pub fn residual(&self, h: &PeriodicHamiltonian, t: f64) -> f64 {
        let f = self.eval(t);
        let r = self.derivative(t) * I - h.assemble(t) * &f;
        r.norm() / f.norm().max(f64::MIN_POSITIVE)
    }

    /// Relative defect of `f(t + T) = f(t) exp(-i mu T)`.
    pub fn periodicity_defect(&self, t: f64) -> f64 {
        let period = 2.0 * PI / self.omega.abs();
        let f = self.eval(t);
        let g = self.eval(t + period);
        (g - &f * (-I * self.mu * period).exp()).norm() / f.norm().max(f64::MIN_POSITIVE)
    }

    /// Sum of the periodic coefficients, i.e. `f(0)` for non-secular states.
    pub fn coefficient_sum(&self) -> CVector {
        Self::sum(&self.coeffs, self.omega, 0.0, self.dim(), |_| ONE)
    }

    /// Sum of the secular coefficients, the direction along which the state grows.
    pub fn secular_sum(&self) -> Option<CVector> {
        self.secular_coeffs
            .as_ref()
            .map(|b| Self::sum(b, self.omega, 0.0, self.dim(), |_| ONE))
    }

    fn max_residual(&self, h: &PeriodicHamiltonian, span: f64) -> f64 {
        (0..RESIDUAL_SAMPLES)
            .map(|i| self.residual(h, span * i as f64 / RESIDUAL_SAMPLES as f64))
            .fold(0.0, f64::max)
    }
}

/// Scales `v` so its (first) largest-magnitude entry equals 1.
fn unit_max(v: &CVector) -> CVector {
    let k = leading_index(v);
    v / v[k]
}

fn level_matrix(h0: &CMatrix, mu: Complex64, l: i64, omega: f64) -> CMatrix {
    let n = h0.nrows();
    CMatrix::identity(n, n) * (mu - l as f64 * omega) - h0
}

fn source(
    blocks: &BTreeMap<u32, CMatrix>,
    coeffs: &BTreeMap<i64, CVector>,
    l: i64,
    dim: usize,
) -> CVector {
    let mut s = CVector::zeros(dim);
    for (&k, sk) in blocks {
        if let Some(prev) = coeffs.get(&(l - k as i64)) {
            s.gemv(ONE, sk, prev, ONE);
        }
    }
    s
}

fn solve_level(h0: &CMatrix, mu: Complex64, l: i64, omega: f64, rhs: &CVector) -> Result<CVector> {
    if rhs.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(rhs.clone());
    }
    solve(&level_matrix(h0, mu, l, omega), rhs).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularHarmonic { l },
        other => other,
    })
}

/// Regular recursion `a_0 = w`, `(mu - l omega - H0) a_l = sum_k S_k a_{l-k}` for `1 <= l <= l_max`.
fn regular_coeffs(
    h: &PeriodicHamiltonian,
    blocks: &BTreeMap<u32, CMatrix>,
    mu: Complex64,
    w: &CVector,
    l_max: i64,
) -> Result<BTreeMap<i64, CVector>> {
    let mut c = BTreeMap::from([(0i64, w.clone())]);
    for l in 1..=l_max {
        let rhs = source(blocks, &c, l, h.dim());
        let a = solve_level(h.h0(), mu, l, h.omega(), &rhs)?;
        c.insert(l, a);
    }
    Ok(c)
}

/// Tail of the series: largest norm among the last `width` coefficients relative to the largest overall.
fn tail_ratio(c: &BTreeMap<i64, CVector>, width: usize) -> f64 {
    let max = c.values().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    c.values()
        .rev()
        .take(width.max(1))
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        / max
}

fn shift_keys(c: BTreeMap<i64, CVector>, d: i64) -> BTreeMap<i64, CVector> {
    c.into_iter().map(|(l, v)| (l + d, v)).collect()
}

/// Index offset turning `exp(-i lambda t)` into `exp(-i fold(lambda) t)`.
fn zone_offset(lambda: f64, omega: f64) -> i64 {
    -fold_shift(lambda, omega) * omega.signum() as i64
}

fn default_l_max(h: &PeriodicHamiltonian) -> i64 {
    let g = h0_real_spectrum(h)
        .and_then(|(_, l)| predict_ep(&l, h.omega(), DEFAULT_EPS_RES))
        .map(|r| r.max_gap())
        .unwrap_or(0);
    8 * (1 + g)
}

fn validate_l_max(l_max: Option<i64>) -> Result<()> {
    match l_max {
        Some(l) if !(1..=L_MAX_CAP).contains(&l) => Err(Error::ParameterOutOfRange {
            name: "l_max",
            value: l as f64,
            reason: "must lie in [1, 512]",
        }),
        _ => Ok(()),
    }
}

/// Floquet eigenstate emanating from the `n`-th (0-based, ascending) eigenvalue of `H0`.
///
/// Fails with `SingularHarmonic` when `lambda_n - l omega` hits another
/// eigenvalue of `H0`, i.e. on the collapsing side of a Floquet EP.
pub fn build_floquet_state(
    h: &PeriodicHamiltonian,
    n: usize,
    l_max: Option<i64>,
    trunc_tol: f64,
) -> Result<FourierFloquetState> {
    validate_l_max(l_max)?;
    let e = crate::linalg::eig(h.h0(), crate::linalg::DEFAULT_TOL)?;
    if n >= e.dim() {
        return Err(Error::InvalidArgument(format!(
            "state index {n} out of range"
        )));
    }
    let lambda = e.values[n];
    let w = unit_max(&e.right_vectors[n]);
    let blocks = h.fourier_blocks();
    let width = h.max_harmonic() as usize;

    let mut lm = l_max.unwrap_or_else(|| default_l_max(h)).min(L_MAX_CAP);
    let coeffs = loop {
        let c = regular_coeffs(h, &blocks, lambda, &w, lm)?;
        let tail = tail_ratio(&c, width);
        if tail <= trunc_tol {
            break c;
        }
        if lm >= L_MAX_CAP {
            return Err(Error::TruncationNotConverged { l_max: lm, tail });
        }
        lm = (2 * lm).min(L_MAX_CAP);
    };

    let d = zone_offset(lambda.re, h.omega());
    let mut state = FourierFloquetState {
        mu: Complex64::new(fold(lambda.re, h.omega()), lambda.im),
        omega: h.omega(),
        coeffs: shift_keys(coeffs, d),
        secular_coeffs: None,
        gamma: None,
        l_min: d,
        l_max: lm + d,
        residual_bound: 0.0,
        solvability: None,
    };
    state.residual_bound = state.max_residual(h, h.period());
    Ok(state)
}

/// Secular (linearly growing) generalized Floquet state for a resonant pair
/// `(y1, y2)` of `H0` eigenvalue indices forming an order-2 Floquet EP.
///
/// The anchor is the eigenvalue whose regular state survives in the given
/// circulation direction (the higher one for `omega < 0`, the lower one for
/// `omega > 0`); its Floquet coefficients form `b_l`, while `a_{-G}` is seeded
/// with the partner eigenvector.
pub fn build_generalized_state(
    h: &PeriodicHamiltonian,
    y1: usize,
    y2: usize,
    l_max: Option<i64>,
    trunc_tol: f64,
) -> Result<FourierFloquetState> {
    validate_l_max(l_max)?;
    let (e, lambdas) = h0_real_spectrum(h)?;
    let n = lambdas.len();
    if y1 >= n || y2 >= n || y1 == y2 {
        return Err(Error::InvalidArgument(format!("invalid pair ({y1}, {y2})")));
    }
    let omega = h.omega();
    let x = (lambdas[y2] - lambdas[y1]) / omega.abs();
    if x.round() == 0.0 || (x - x.round()).abs() > DEFAULT_EPS_RES {
        return Err(Error::NotResonant(y1, y2));
    }
    let (lo, hi) = if lambdas[y1] < lambdas[y2] {
        (y1, y2)
    } else {
        (y2, y1)
    };
    let (anchor, partner) = if omega < 0.0 { (hi, lo) } else { (lo, hi) };
    let g = ((lambdas[partner] - lambdas[anchor]) / omega).round() as i64;
    debug_assert!(g > 0);

    let mu = e.values[anchor];
    let w = unit_max(&e.right_vectors[anchor]);
    let w_adj = e.left_vectors[anchor].clone();
    let blocks = h.fourier_blocks();
    let width = h.max_harmonic() as usize;
    let dim = h.dim();

    let mut lm = l_max
        .unwrap_or_else(|| default_l_max(h))
        .max(g)
        .min(L_MAX_CAP);
    let (a, b, gamma, solvability) = loop {
        let b = regular_coeffs(h, &blocks, mu, &w, lm)?;

        let mut a: BTreeMap<i64, CVector> = BTreeMap::new();
        a.insert(-g, unit_max(&e.right_vectors[partner]));
        for l in -g + 1..0 {
            let rhs = source(&blocks, &a, l, dim);
            a.insert(l, solve_level(h.h0(), mu, l, omega, &rhs)?);
        }

        let d0 = source(&blocks, &a, 0, dim);
        let gamma = -I * binner(&w_adj, &d0)? / binner(&w_adj, &w)?;
        let d = &d0 - &w * (I * gamma);
        let solvability = binner(&w_adj, &d)?.norm();
        let a0 = solve_singular(&level_matrix(h.h0(), mu, 0, omega), &d, &w_adj, &w, 1e-8)?;
        a.insert(0, a0);

        for l in 1..=lm {
            let rhs = source(&blocks, &a, l, dim) - &b[&l] * (I * gamma);
            a.insert(l, solve_level(h.h0(), mu, l, omega, &rhs)?);
        }

        let tail = tail_ratio(&a, width).max(tail_ratio(&b, width));
        if tail <= trunc_tol {
            break (a, b, gamma, solvability);
        }
        if lm >= L_MAX_CAP {
            return Err(Error::TruncationNotConverged { l_max: lm, tail });
        }
        lm = (2 * lm).min(L_MAX_CAP);
    };

    let d = zone_offset(mu.re, omega);
    let mut state = FourierFloquetState {
        mu: Complex64::new(fold(mu.re, omega), mu.im),
        omega,
        coeffs: shift_keys(a, d),
        secular_coeffs: Some(shift_keys(b, d)),
        gamma: Some(gamma),
        l_min: -g + d,
        l_max: lm + d,
        residual_bound: 0.0,
        solvability: Some(solvability),
    };
    state.residual_bound = state.max_residual(h, 3.0 * h.period());
    Ok(state)
}

/// Exact table `beta(n, k) = i^k n! / (n - k)!` for `0 <= k <= n <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedBasisCoeffs {
    pub beta: BTreeMap<(u32, u32), Complex64>,
}

impl GeneralizedBasisCoeffs {
    pub fn get(&self, n: u32, k: u32) -> Option<Complex64> {
        self.beta.get(&(n, k)).copied()
    }
}

/// Largest `n` for which the coefficient table is exact in double precision.
pub const BETA_CAP: u32 = 12;

pub fn beta_coeffs(n_max: u32) -> Result<GeneralizedBasisCoeffs> {
    if n_max > BETA_CAP {
        return Err(Error::Overflow(n_max));
    }
    let mut beta = BTreeMap::new();
    for n in 0..=n_max {
        let mut falling: u64 = 1;
        let mut ik = ONE;
        for k in 0..=n {
            beta.insert((n, k), ik * falling as f64);
            falling *= (n - k) as u64;
            ik *= I;
        }
    }
    Ok(GeneralizedBasisCoeffs { beta })
}

/// Least-squares slope of `log |a|` against `log t` over the trailing half of
/// the stroboscopic samples `(t, |a(t)|)`.
pub fn secular_exponent(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "need at least 10 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|&(t, a)| !(t > 0.0 && a > 0.0 && t.is_finite() && a.is_finite()))
    {
        return Err(Error::InsufficientData(
            "times and norms must be positive".into(),
        ));
    }
    let tail = &samples[samples.len() / 2..];
    let n = tail.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().map(|&(t, a)| (t.ln(), a.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "sample times are not distinct".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Secular rate `gamma` seen in sampled states of a generalized Floquet state:
/// `z(t) = a(t) exp(i mu t)` is fitted to `A + t C` and `C` is projected on `direction`.
pub fn fit_secular_rate(
    times: &[f64],
    states: &[CVector],
    mu: Complex64,
    direction: &CVector,
) -> Result<Complex64> {
    if times.len() != states.len() {
        return Err(Error::LengthMismatch(times.len(), states.len()));
    }
    if times.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 samples".into()));
    }
    let n = times.len() as f64;
    let z: Vec<CVector> = times
        .iter()
        .zip(states)
        .map(|(&t, a)| a * (I * mu * t).exp())
        .collect();
    let tm = times.iter().sum::<f64>() / n;
    let mut zm = CVector::zeros(direction.len());
    for v in &z {
        zm += v;
    }
    zm /= Complex64::new(n, 0.0);
    let mut c = CVector::zeros(direction.len());
    let mut stt = 0.0;
    for (&t, v) in times.iter().zip(&z) {
        c += (v - &zm) * Complex64::new(t - tm, 0.0);
        stt += (t - tm).powi(2);
    }
    c /= Complex64::new(stt, 0.0);
    Ok(binner(direction, &c)? / direction.norm_squared())
}
