use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{frame_along, FrameMode, FrameSample};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::model::{preset, DriveTerm, ModelPreset, PeriodicHamiltonian};
use crate::propagate::IntegratorSettings;

/// Complex number written as `[re, im]`.
pub type JsonComplex = [f64; 2];

fn complex(z: JsonComplex) -> Complex64 {
    Complex64::new(z[0], z[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    /// Rows of `[re, im]` pairs.
    pub matrix: Vec<Vec<JsonComplex>>,
    /// Positive harmonic index to coefficient.
    pub harmonics: BTreeMap<u32, JsonComplex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub h0: Vec<Vec<JsonComplex>>,
    #[serde(default)]
    pub drives: Vec<DriveSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Preset(PresetSpec),
    Matrices(MatrixSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Cw,
    Ccw,
    Both,
}

/// A single circulation sense of the parameter loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Circulation {
    /// `omega > 0`.
    Cw,
    /// `omega < 0`.
    Ccw,
}

impl Circulation {
    pub fn sign(self) -> f64 {
        match self {
            Self::Cw => 1.0,
            Self::Ccw => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Cw => "cw",
            Self::Ccw => "ccw",
        }
    }
}

impl Direction {
    pub fn circulations(self) -> Vec<Circulation> {
        match self {
            Self::Cw => vec![Circulation::Cw],
            Self::Ccw => vec![Circulation::Ccw],
            Self::Both => vec![Circulation::Cw, Circulation::Ccw],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// 1-based index of the instantaneous eigenvector `e_n(0)`.
    AdiabaticIndex(usize),
    Vector(Vec<JsonComplex>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

fn default_direction() -> Direction {
    Direction::Both
}

fn default_cycles() -> u32 {
    1
}

fn default_samples() -> usize {
    200
}

fn default_initial() -> InitialState {
    InitialState::AdiabaticIndex(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub omega_abs: f64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_cycles")]
    pub cycles: u32,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    #[serde(default = "default_samples")]
    pub samples_per_cycle: usize,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega_grid: Vec<f64>,
}

fn matrix_from_rows(rows: &[Vec<JsonComplex>], what: &str) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Config(format!("{what} is empty")));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Config(format!(
            "{what} is not square: row of length {} in {n} rows",
            r.len()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| complex(rows[i][j])))
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_abs > 0.0 && self.omega_abs.is_finite()) {
            return Err(Error::Config(format!(
                "omega_abs must be positive, got {}",
                self.omega_abs
            )));
        }
        if self.cycles == 0 {
            return Err(Error::Config("cycles must be at least 1".into()));
        }
        if self.samples_per_cycle < 2 {
            return Err(Error::Config("samples_per_cycle must be at least 2".into()));
        }
        if let Some(w) = self
            .omega_grid
            .iter()
            .find(|w| !(**w > 0.0 && w.is_finite()))
        {
            return Err(Error::Config(format!(
                "omega_grid entries must be positive, got {w}"
            )));
        }
        self.integrator.validate()?;
        let n = self.hamiltonian(1.0)?.dim();
        match &self.initial {
            InitialState::AdiabaticIndex(k) if *k == 0 || *k > n => Err(Error::Config(format!(
                "adiabatic_index {k} outside 1..={n}"
            ))),
            InitialState::Vector(v) if v.len() != n => Err(Error::Config(format!(
                "initial vector has length {}, model has {n}",
                v.len()
            ))),
            InitialState::Vector(v) if v.iter().all(|z| z[0] == 0.0 && z[1] == 0.0) => {
                Err(Error::Config("initial vector is zero".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn preset(&self) -> Result<Option<ModelPreset>> {
        match &self.model {
            ModelSpec::Preset(p) => ModelPreset::from_name(&p.name, &p.parameters).map(Some),
            ModelSpec::Matrices(_) => Ok(None),
        }
    }

    /// The model at the given signed frequency.
    pub fn hamiltonian(&self, omega: f64) -> Result<PeriodicHamiltonian> {
        match &self.model {
            ModelSpec::Preset(_) => preset(self.preset()?.expect("preset model"), omega),
            ModelSpec::Matrices(m) => {
                let h0 = matrix_from_rows(&m.h0, "h0")?;
                let drives = m
                    .drives
                    .iter()
                    .enumerate()
                    .map(|(k, d)| {
                        let matrix = matrix_from_rows(&d.matrix, &format!("drives[{k}].matrix"))?;
                        let harmonics =
                            d.harmonics.iter().map(|(&n, &z)| (n, complex(z))).collect();
                        DriveTerm::new(matrix, harmonics)
                    })
                    .collect::<Result<_>>()?;
                PeriodicHamiltonian::new(h0, drives, omega)
            }
        }
    }

    /// Signed frequency of a circulation.
    pub fn omega(&self, c: Circulation) -> f64 {
        c.sign() * self.omega_abs
    }

    pub fn frame_mode(&self) -> FrameMode {
        match self.preset() {
            Ok(Some(ModelPreset::Longhi3 { omega_cap, .. })) => {
                FrameMode::AnalyticLonghi3 { omega_cap }
            }
            _ => FrameMode::Numeric,
        }
    }

    /// Frames over one period sampled at `samples_per_cycle + 1` points.
    pub fn cycle_frames(&self, h: &PeriodicHamiltonian) -> Result<Vec<FrameSample>> {
        let times = crate::propagate::sample_times((0.0, h.period()), self.samples_per_cycle + 1)?;
        frame_along(h, &times, self.frame_mode())
    }

    /// Initial state vector and, for adiabatic initial conditions, its 0-based index.
    pub fn initial_state(&self, frame0: &FrameSample) -> Result<(CVector, Option<usize>)> {
        match &self.initial {
            InitialState::AdiabaticIndex(k) => {
                let e = frame0
                    .e
                    .get(k.wrapping_sub(1))
                    .ok_or_else(|| Error::Config(format!("adiabatic_index {k} out of range")))?;
                Ok((e.clone(), Some(k - 1)))
            }
            InitialState::Vector(v) => Ok((
                CVector::from_iterator(v.len(), v.iter().map(|&z| complex(z))),
                None,
            )),
        }
    }
}
