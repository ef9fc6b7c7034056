//! Periodic Hamiltonians `H(t) = H0 + sum_k R_k(t) H_k` with one-sided Fourier
//! drives `R_k(t) = sum_{n>=1} R_k^(n) exp(i n omega t)`.
//!
//! The circulation direction lives in the sign of `omega`: harmonics are always
//! positive-indexed, so `omega < 0` realizes a purely negative-frequency drive.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cmatrix_real, ensure_finite_matrix, CMatrix, CVector};

/// One coupling matrix with its one-sided harmonic content.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    matrix: CMatrix,
    harmonics: BTreeMap<u32, Complex64>,
}

impl DriveTerm {
    pub fn new(matrix: CMatrix, harmonics: BTreeMap<u32, Complex64>) -> Result<Self> {
        if harmonics.contains_key(&0) {
            return Err(Error::InvalidArgument(
                "drive harmonics must be positive (zero-mean, one-sided drive)".into(),
            ));
        }
        if !harmonics.values().any(|c| c.norm() > 0.0) {
            return Err(Error::InvalidArgument(
                "drive needs at least one nonzero harmonic".into(),
            ));
        }
        if harmonics
            .values()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite("drive coefficient"));
        }
        ensure_finite_matrix(&matrix, "drive matrix")?;
        Ok(Self { matrix, harmonics })
    }

    /// A drive with a single harmonic `coefficient * exp(i n omega t)`.
    pub fn single(matrix: CMatrix, n: u32, coefficient: Complex64) -> Result<Self> {
        Self::new(matrix, BTreeMap::from([(n, coefficient)]))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn harmonics(&self) -> &BTreeMap<u32, Complex64> {
        &self.harmonics
    }

    /// `R(t)` for this term.
    pub fn parameter(&self, omega: f64, t: f64) -> Complex64 {
        self.harmonics
            .iter()
            .map(|(&n, &c)| c * Complex64::from_polar(1.0, n as f64 * omega * t))
            .sum()
    }

    /// `dR/dt` for this term.
    pub fn parameter_rate(&self, omega: f64, t: f64) -> Complex64 {
        self.harmonics
            .iter()
            .map(|(&n, &c)| {
                c * Complex64::new(0.0, n as f64 * omega)
                    * Complex64::from_polar(1.0, n as f64 * omega * t)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicHamiltonian {
    h0: CMatrix,
    drives: Vec<DriveTerm>,
    omega: f64,
}

impl PeriodicHamiltonian {
    pub fn new(h0: CMatrix, drives: Vec<DriveTerm>, omega: f64) -> Result<Self> {
        if h0.nrows() != h0.ncols() || h0.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: h0.nrows(),
                cols: h0.ncols(),
            });
        }
        ensure_finite_matrix(&h0, "H0")?;
        let n = h0.nrows();
        for d in &drives {
            if d.matrix.nrows() != n || d.matrix.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.matrix.nrows(),
                });
            }
        }
        if !omega.is_finite() || omega == 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "omega",
                value: omega,
                reason: "must be finite and nonzero",
            });
        }
        Ok(Self { h0, drives, omega })
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn drives(&self) -> &[DriveTerm] {
        &self.drives
    }

    /// Signed cycling frequency; positive is clockwise.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega.abs()
    }

    /// Same system cycled at a different (signed) frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.h0.clone(), self.drives.clone(), omega)
    }

    /// Same loop traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self {
            h0: self.h0.clone(),
            drives: self.drives.clone(),
            omega: -self.omega,
        }
    }

    /// `H(t)`.
    pub fn assemble(&self, t: f64) -> CMatrix {
        let mut h = self.h0.clone();
        for d in &self.drives {
            let r = d.parameter(self.omega, t);
            h += &d.matrix * r;
        }
        h
    }

    /// `dH/dt`.
    pub fn assemble_rate(&self, t: f64) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim(), self.dim());
        for d in &self.drives {
            h += &d.matrix * d.parameter_rate(self.omega, t);
        }
        h
    }

    /// Fourier blocks `S^(k) = sum_j R_j^(k) H_j` of `H(t) - H0`.
    pub fn fourier_blocks(&self) -> BTreeMap<u32, CMatrix> {
        let mut blocks: BTreeMap<u32, CMatrix> = BTreeMap::new();
        for d in &self.drives {
            for (&k, &c) in &d.harmonics {
                let term = &d.matrix * c;
                blocks.entry(k).and_modify(|b| *b += &term).or_insert(term);
            }
        }
        blocks
    }

    /// Highest harmonic index present in the drive.
    pub fn max_harmonic(&self) -> u32 {
        self.drives
            .iter()
            .filter_map(|d| d.harmonics.keys().next_back().copied())
            .max()
            .unwrap_or(0)
    }
}

/// Builtin model families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelPreset {
    /// The 3x3 model with `H0 = [[0,1,0],[W^2/2,0,1],[0,W^2/2,0]]`,
    /// `H1 = [[0,0,0],[1,0,0],[0,-1,0]]`, `R(t) = R0 exp(i omega t)`.
    Longhi3 { omega_cap: f64, r0: f64 },
    /// `H0 = [[0,1],[W^2,0]]`, `H1 = [[0,0],[1,0]]`: instantaneous eigenvalues
    /// `+-sqrt(W^2 + R(t))`, a nontrivially time-dependent pair.
    Sqrt2 { omega_cap: f64, r0: f64 },
}

impl ModelPreset {
    /// Looks a preset up by name, reading `Omega` and `R0` from `params`.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed = ["Omega", "R0"];
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown preset parameter '{k}'")));
        }
        let omega_cap = *params
            .get("Omega")
            .ok_or_else(|| Error::Config("preset parameter 'Omega' is required".into()))?;
        let r0 = *params
            .get("R0")
            .ok_or_else(|| Error::Config("preset parameter 'R0' is required".into()))?;
        match name {
            "longhi3" => Ok(Self::Longhi3 { omega_cap, r0 }),
            "sqrt2" => Ok(Self::Sqrt2 { omega_cap, r0 }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Longhi3 { .. } => "longhi3",
            Self::Sqrt2 { .. } => "sqrt2",
        }
    }

    pub fn omega_cap(&self) -> f64 {
        match *self {
            Self::Longhi3 { omega_cap, .. } | Self::Sqrt2 { omega_cap, .. } => omega_cap,
        }
    }

    pub fn r0(&self) -> f64 {
        match *self {
            Self::Longhi3 { r0, .. } | Self::Sqrt2 { r0, .. } => r0,
        }
    }
}

/// Instantiates a preset at the signed cycling frequency `omega`.
pub fn preset(p: ModelPreset, omega: f64) -> Result<PeriodicHamiltonian> {
    let w = p.omega_cap();
    let r0 = p.r0();
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "Omega",
            value: w,
            reason: "must be positive",
        });
    }
    if !r0.is_finite() {
        return Err(Error::NonFinite("R0"));
    }
    let (h0, h1) = match p {
        ModelPreset::Longhi3 { .. } => {
            let h = w * w / 2.0;
            (
                cmatrix_real(3, 3, &[0.0, 1.0, 0.0, h, 0.0, 1.0, 0.0, h, 0.0]),
                cmatrix_real(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0]),
            )
        }
        ModelPreset::Sqrt2 { .. } => {
            if r0.abs() >= w * w {
                return Err(Error::ParameterOutOfRange {
                    name: "R0",
                    value: r0,
                    reason: "|R0| must stay below Omega^2 so the loop avoids the static EP",
                });
            }
            (
                cmatrix_real(2, 2, &[0.0, 1.0, w * w, 0.0]),
                cmatrix_real(2, 2, &[0.0, 0.0, 1.0, 0.0]),
            )
        }
    };
    let drives = if r0 == 0.0 {
        Vec::new()
    } else {
        vec![DriveTerm::single(h1, 1, Complex64::new(r0, 0.0))?]
    };
    PeriodicHamiltonian::new(h0, drives, omega)
}

/// Closed-form instantaneous frame of the `longhi3` model at parameter `R`,
/// in the unnormalized gauge with first entry 1 (right) / last entry 1 (adjoint).
#[derive(Debug, Clone)]
pub struct Longhi3Frame {
    pub sigma: [f64; 3],
    pub e: [CVector; 3],
    pub e_adj: [CVector; 3],
}

pub fn analytic_frame_longhi3(omega_cap: f64, r: Complex64) -> Longhi3Frame {
    let w = omega_cap;
    let h = Complex64::new(w * w / 2.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let wc = Complex64::new(w, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let v = |a: Complex64, b: Complex64, c: Complex64| CVector::from_vec(vec![a, b, c]);
    Longhi3Frame {
        sigma: [-w, 0.0, w],
        e: [v(one, -wc, h - r), v(one, z, -h - r), v(one, wc, h - r)],
        e_adj: [
            v(h + r.conj(), -wc, one),
            v(-h + r.conj(), z, one),
            v(h + r.conj(), wc, one),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{binner, eig, DEFAULT_TOL};
    use approx::assert_abs_diff_eq;

    fn three_level(omega: f64) -> PeriodicHamiltonian {
        preset(
            ModelPreset::Longhi3 {
                omega_cap: 1.0,
                r0: 0.2,
            },
            omega,
        )
        .unwrap()
    }

    #[test]
    fn assemble_at_origin_adds_r0_h1() {
        let h = three_level(0.25);
        let a = h.assemble(0.0);
        let expected = cmatrix_real(3, 3, &[0.0, 1.0, 0.0, 0.7, 0.0, 1.0, 0.0, 0.3, 0.0]);
        assert!((a - expected).norm() < 1e-15);
    }

    #[test]
    fn assemble_is_periodic() {
        for omega in [0.25, -0.3] {
            let h = three_level(omega);
            let t = 1.234;
            let d = h.assemble(t) - h.assemble(t + h.period());
            assert!(d.norm() < 1e-14);
        }
    }

    #[test]
    fn undriven_assembles_to_h0() {
        let h = preset(
            ModelPreset::Longhi3 {
                omega_cap: 1.0,
                r0: 0.0,
            },
            0.3,
        )
        .unwrap();
        assert!(h.drives().is_empty());
        for t in [0.0, 1.0, 17.5] {
            assert_eq!(h.assemble(t), *h.h0());
        }
        assert!(h.fourier_blocks().is_empty());
    }

    #[test]
    fn fourier_blocks_sum_shared_harmonics() {
        let h = three_level(0.25);
        let blocks = h.fourier_blocks();
        assert_eq!(blocks.len(), 1);
        let h1 = h.drives()[0].matrix().clone();
        assert!((&blocks[&1] - &h1 * Complex64::new(0.2, 0.0)).norm() < 1e-15);

        let d1 = DriveTerm::single(h1.clone(), 1, Complex64::new(0.2, 0.0)).unwrap();
        let d2 = DriveTerm::single(h1.clone(), 1, Complex64::new(0.0, 0.5)).unwrap();
        let two = PeriodicHamiltonian::new(h.h0().clone(), vec![d1, d2], 0.25).unwrap();
        let b = two.fourier_blocks();
        assert!((&b[&1] - &h1 * Complex64::new(0.2, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn fourier_reconstruction_matches_assemble() {
        let h1 = cmatrix_real(2, 2, &[0.0, 1.0, 0.3, 0.0]);
        let h2 = cmatrix_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let d1 = DriveTerm::new(
            h1,
            BTreeMap::from([
                (1, Complex64::new(0.2, 0.1)),
                (3, Complex64::new(-0.05, 0.0)),
            ]),
        )
        .unwrap();
        let d2 = DriveTerm::single(h2, 2, Complex64::new(0.0, 0.4)).unwrap();
        let h = PeriodicHamiltonian::new(
            cmatrix_real(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            vec![d1, d2],
            -0.7,
        )
        .unwrap();
        let blocks = h.fourier_blocks();
        for t in [0.0, 0.3, 2.9, 11.0] {
            let mut s = CMatrix::zeros(2, 2);
            for (&k, b) in &blocks {
                s += b * Complex64::from_polar(1.0, k as f64 * h.omega() * t);
            }
            assert!((s - (h.assemble(t) - h.h0())).norm() < 1e-14);
        }
        assert_eq!(h.max_harmonic(), 3);
    }

    #[test]
    fn presets_have_expected_static_spectra() {
        let h = three_level(0.25);
        let e = eig(h.h0(), DEFAULT_TOL).unwrap();
        for (got, want) in e.values.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(got.re, want, epsilon = 1e-12);
        }
        let s = preset(
            ModelPreset::Sqrt2 {
                omega_cap: 1.0,
                r0: 0.3,
            },
            0.1,
        )
        .unwrap();
        let e = eig(s.h0(), DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(e.values[0].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn preset_guards() {
        let err = preset(
            ModelPreset::Sqrt2 {
                omega_cap: 1.0,
                r0: 1.5,
            },
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ParameterOutOfRange { name: "R0", .. }));
        let err = preset(
            ModelPreset::Longhi3 {
                omega_cap: 0.0,
                r0: 0.2,
            },
            0.1,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::ParameterOutOfRange { name: "Omega", .. }
        ));
        let params = BTreeMap::from([("Omega".to_string(), 1.0), ("R0".to_string(), 0.1)]);
        assert!(matches!(
            ModelPreset::from_name("cubic", &params),
            Err(Error::UnknownPreset(_))
        ));
        assert!(PeriodicHamiltonian::new(CMatrix::identity(2, 2), vec![], 0.0).is_err());
        assert!(DriveTerm::new(
            CMatrix::identity(2, 2),
            BTreeMap::from([(0, Complex64::new(1.0, 0.0))])
        )
        .is_err());
        assert!(DriveTerm::new(
            CMatrix::identity(2, 2),
            BTreeMap::from([(1, Complex64::new(0.0, 0.0))])
        )
        .is_err());
    }

    #[test]
    fn analytic_frame_values() {
        let f = analytic_frame_longhi3(1.0, Complex64::new(0.2, 0.0));
        assert_eq!(f.sigma, [-1.0, 0.0, 1.0]);
        let e2 = &f.e[1];
        assert_abs_diff_eq!(e2[0].re, 1.0);
        assert_abs_diff_eq!(e2[1].norm(), 0.0);
        assert_abs_diff_eq!(e2[2].re, -0.7, epsilon = 1e-15);
    }

    #[test]
    fn analytic_frame_biorthogonal_norms() {
        // <e1^dag, e1> = 2 W^2, <e2^dag, e2> = -W^2, <e1^dag, e2> = 0 for any R.
        for (w, r) in [
            (1.0, Complex64::new(0.2, 0.0)),
            (1.7, Complex64::new(-0.3, 0.8)),
        ] {
            let f = analytic_frame_longhi3(w, r);
            let n11 = binner(&f.e_adj[0], &f.e[0]).unwrap();
            let n22 = binner(&f.e_adj[1], &f.e[1]).unwrap();
            let n12 = binner(&f.e_adj[0], &f.e[1]).unwrap();
            assert_abs_diff_eq!(n11.re, 2.0 * w * w, epsilon = 1e-13);
            assert_abs_diff_eq!(n11.im, 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(n22.re, -w * w, epsilon = 1e-13);
            assert_abs_diff_eq!(n12.norm(), 0.0, epsilon = 1e-13);
        }
    }
}
