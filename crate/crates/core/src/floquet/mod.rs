//! Quasi-energies, Floquet exceptional-point prediction and detection, and
//! Fourier construction of (generalized) Floquet eigenstates.

mod fourier;
mod jordan;

pub use fourier::{
    beta_coeffs, build_floquet_state, build_generalized_state, fit_secular_rate, secular_exponent,
    FourierFloquetState, GeneralizedBasisCoeffs, DEFAULT_TRUNC_TOL, L_MAX_CAP,
};
pub use jordan::{generator, jordan_chain, JordanChain};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig, singular_values, CMatrix, CVector, EigenDecomposition, DEFAULT_TOL};
use crate::model::PeriodicHamiltonian;
use crate::propagate::{monodromy, IntegratorSettings};

/// Default resonance tolerance on `(lambda_m - lambda_n) / omega`.
pub const DEFAULT_EPS_RES: f64 = 1e-9;
/// Detuning below which a non-resonant pair is reported as a near resonance.
pub const NEAR_RESONANCE: f64 = 1e-3;
/// EP flag threshold on the smallest singular value of the Floquet vectors.
pub const DEFECTIVITY_THRESHOLD: f64 = 1e-4;
/// Relative band (in units of |omega|) snapped onto the lower zone edge.
pub const BOUNDARY_SNAP: f64 = 1e-6;

/// Folds `lambda` into `[-|omega|/2, |omega|/2)`.
pub fn fold(lambda: f64, omega: f64) -> f64 {
    let w = omega.abs();
    let s = ((lambda + 0.5 * w) / w).floor();
    let mut x = lambda - s * w;
    let slack = 64.0 * f64::EPSILON * lambda.abs().max(w);
    if x >= 0.5 * w - slack {
        x -= w;
    } else if x < -0.5 * w - slack {
        x += w;
    }
    if x < -0.5 * w {
        x = -0.5 * w;
    }
    x
}

/// Integer `s` with `fold(lambda, omega) = lambda - s |omega|`.
pub(crate) fn fold_shift(lambda: f64, omega: f64) -> i64 {
    ((lambda - fold(lambda, omega)) / omega.abs()).round() as i64
}

#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    /// Sorted by real part, then imaginary part.
    pub quasi_energies: Vec<Complex64>,
    pub floquet_vectors: Vec<CVector>,
    /// Smallest singular value of the unit Floquet-vector matrix; near zero
    /// signals coalescing eigenvectors.
    pub defectivity: f64,
    pub omega: f64,
}

impl FloquetSpectrum {
    pub fn max_abs_imag(&self) -> f64 {
        self.quasi_energies
            .iter()
            .map(|m| m.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Quasi-energies `mu = (i/T) log rho` from the eigenvalues `rho` of the monodromy matrix.
pub fn quasi_energies(m: &CMatrix, omega: f64, tol: f64) -> Result<FloquetSpectrum> {
    let w = omega.abs();
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "omega",
            value: omega,
            reason: "must be finite and nonzero",
        });
    }
    let period = 2.0 * PI / w;
    let e = eig(m, tol)?;
    let mut pairs: Vec<(Complex64, CVector)> = e
        .values
        .iter()
        .zip(e.right_vectors)
        .map(|(rho, v)| {
            let mut re = -rho.arg() / period;
            if re.abs() >= 0.5 * w * (1.0 - 2.0 * BOUNDARY_SNAP) {
                re = -0.5 * w;
            }
            (Complex64::new(re, rho.norm().ln() / period), v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    let (quasi_energies, floquet_vectors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let defectivity = singular_values(&CMatrix::from_columns(&floquet_vectors))
        .last()
        .copied()
        .unwrap_or(0.0);
    Ok(FloquetSpectrum {
        quasi_energies,
        floquet_vectors,
        defectivity,
        omega,
    })
}

/// A connected set of mutually resonant `H0` eigenvalue indices (0-based,
/// ascending in eigenvalue).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonantSubset {
    pub indices: Vec<usize>,
    pub order: usize,
    /// Index whose Floquet state survives for `omega > 0` (lowest eigenvalue).
    pub dominant_cw: usize,
    /// Index whose Floquet state survives for `omega < 0` (highest eigenvalue).
    pub dominant_ccw: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicGap {
    pub lower: usize,
    pub upper: usize,
    /// `(lambda_upper - lambda_lower) / |omega|`.
    pub g: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearResonance {
    pub lower: usize,
    pub upper: usize,
    /// Distance of `(lambda_upper - lambda_lower) / |omega|` from the nearest nonzero integer.
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EPReport {
    pub subsets: Vec<ResonantSubset>,
    pub harmonic_table: Vec<HarmonicGap>,
    pub near_resonances: Vec<NearResonance>,
}

impl EPReport {
    pub fn max_gap(&self) -> i64 {
        self.harmonic_table.iter().map(|h| h.g).max().unwrap_or(0)
    }

    pub fn subset_of(&self, n: usize) -> Option<&ResonantSubset> {
        self.subsets.iter().find(|s| s.indices.contains(&n))
    }

    pub fn gap(&self, a: usize, b: usize) -> Option<i64> {
        let (lo, hi) = (a.min(b), a.max(b));
        self.harmonic_table
            .iter()
            .find(|h| (h.lower == lo && h.upper == hi) || (h.lower == hi && h.upper == lo))
            .map(|h| h.g)
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Groups real, distinct `H0` eigenvalues into multi-photon resonant subsets.
pub fn predict_ep(h0_eigs: &[f64], omega: f64, eps_res: f64) -> Result<EPReport> {
    let w = omega.abs();
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "omega",
            value: omega,
            reason: "must be finite and nonzero",
        });
    }
    let n = h0_eigs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| h0_eigs[a].total_cmp(&h0_eigs[b]));

    let mut parent: Vec<usize> = (0..n).collect();
    let mut harmonic_table = Vec::new();
    let mut near_resonances = Vec::new();
    for (p, &i) in order.iter().enumerate() {
        for &j in &order[p + 1..] {
            let diff = h0_eigs[j] - h0_eigs[i];
            if diff.abs() < eps_res * w {
                return Err(Error::DegenerateInput(i, j));
            }
            let x = diff / w;
            let r = x.round();
            let detuning = (x - r).abs();
            if r == 0.0 {
                continue;
            }
            if detuning < eps_res {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
                harmonic_table.push(HarmonicGap {
                    lower: i,
                    upper: j,
                    g: r as i64,
                });
            } else if detuning < NEAR_RESONANCE {
                near_resonances.push(NearResonance {
                    lower: i,
                    upper: j,
                    detuning,
                });
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut subsets: Vec<ResonantSubset> = groups
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|indices| ResonantSubset {
            order: indices.len(),
            dominant_cw: indices[0],
            dominant_ccw: indices[indices.len() - 1],
            indices,
        })
        .collect();
    subsets.sort_by_key(|s| s.indices[0]);
    Ok(EPReport {
        subsets,
        harmonic_table,
        near_resonances,
    })
}

/// Eigendecomposition of `H0` with the real parts of its eigenvalues, failing
/// if the spectrum is not real (the standing hypothesis for resonance analysis).
pub fn h0_real_spectrum(h: &PeriodicHamiltonian) -> Result<(EigenDecomposition, Vec<f64>)> {
    let e = eig(h.h0(), DEFAULT_TOL)?;
    let scale = e.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if e.values.iter().any(|z| z.im.abs() > 1e-9 * scale) {
        return Err(Error::InvalidArgument("H0 has non-real eigenvalues".into()));
    }
    let re = e.values.iter().map(|z| z.re).collect();
    Ok((e, re))
}

/// Monodromy-based spectrum together with the resonance prediction.
#[derive(Debug, Clone)]
pub struct FloquetAnalysis {
    pub spectrum: FloquetSpectrum,
    pub h0_eigenvalues: Vec<f64>,
    pub ep_report: EPReport,
    /// Defective Floquet vectors coinciding with a predicted resonance.
    pub ep_flag: bool,
}

pub fn floquet_spectrum(
    h: &PeriodicHamiltonian,
    s: &IntegratorSettings,
) -> Result<FloquetAnalysis> {
    let (_, lambdas) = h0_real_spectrum(h)?;
    let ep_report = predict_ep(&lambdas, h.omega(), DEFAULT_EPS_RES)?;
    let m = monodromy(h, s)?;
    let spectrum = quasi_energies(&m, h.omega(), 1e-6)?;
    let ep_flag = spectrum.defectivity < DEFECTIVITY_THRESHOLD && !ep_report.subsets.is_empty();
    Ok(FloquetAnalysis {
        spectrum,
        h0_eigenvalues: lambdas,
        ep_report,
        ep_flag,
    })
}
