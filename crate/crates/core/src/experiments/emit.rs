//! CSV and JSON emission. Output is a pure function of the results, so
//! identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use super::{
    ChiralityResult, Circulation, EvolveRun, ExperimentConfig, JsonComplex, SingleCycleRun,
    SweepRow, TrajectoryRow,
};
use crate::error::Result;
use crate::floquet::{EPReport, FloquetAnalysis, FourierFloquetState, ResonantSubset};
use crate::linalg::CVector;

pub const TOOL: &str = "floquet-ep";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn c(z: Complex64) -> JsonComplex {
    [z.re, z.im]
}

fn cv(v: &CVector) -> Vec<JsonComplex> {
    v.iter().map(|&z| c(z)).collect()
}

fn one_based(i: Option<usize>) -> Option<usize> {
    i.map(|i| i + 1)
}

/// Trajectory table `t,f1_sq,...,fN_sq,norm_scale` with 15 significant digits.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let n = rows.first().map_or(0, |r| r.populations.len());
    let mut out = String::from("t");
    for k in 1..=n {
        let _ = write!(out, ",f{k}_sq");
    }
    out.push_str(",norm_scale\n");
    for r in rows {
        let _ = write!(out, "{:.14e}", r.t);
        for p in &r.populations {
            let _ = write!(out, ",{p:.14e}");
        }
        let _ = writeln!(out, ",{:.14e}", r.norm_scale);
    }
    out
}

fn fmt_opt(i: Option<usize>) -> String {
    i.map_or_else(String::new, |i| (i + 1).to_string())
}

/// Sweep table, one row per grid point; failed points carry the error text.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "omega_abs,max_imag,defectivity,ep_flag,subsets,dominant_cw,dominant_ccw,chiral,error\n",
    );
    for r in rows {
        let _ = write!(out, "{:.14e},", r.omega_abs);
        match &r.outcome {
            Ok(p) => {
                let subsets: Vec<String> = p
                    .subsets
                    .iter()
                    .map(|s| {
                        s.indices
                            .iter()
                            .map(|i| (i + 1).to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{:.14e},{:.14e},{},{},{},{},{},",
                    p.max_imag,
                    p.defectivity,
                    p.ep_flag,
                    subsets.join(";"),
                    fmt_opt(p.dominant_cw),
                    fmt_opt(p.dominant_ccw),
                    p.chiral
                );
            }
            Err(e) => {
                let _ = writeln!(out, ",,,,,,,\"{}\"", e.replace('"', "'"));
            }
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    result: &'a T,
}

/// Pretty-printed summary document with tool version and config echo.
pub fn summary_json<T: Serialize>(
    command: &str,
    cfg: &ExperimentConfig,
    result: &T,
) -> Result<String> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        config: cfg,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

/// Resonant subset with 1-based labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetJson {
    pub indices: Vec<usize>,
    pub order: usize,
    pub dominant_cw: usize,
    pub dominant_ccw: usize,
}

impl From<&ResonantSubset> for SubsetJson {
    fn from(s: &ResonantSubset) -> Self {
        Self {
            indices: s.indices.iter().map(|i| i + 1).collect(),
            order: s.order,
            dominant_cw: s.dominant_cw + 1,
            dominant_ccw: s.dominant_ccw + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairJson {
    pub lower: usize,
    pub upper: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceJson {
    pub subsets: Vec<SubsetJson>,
    /// Harmonic gaps `G` of resonant pairs.
    pub harmonic_table: Vec<PairJson>,
    /// Detunings of nearly resonant pairs.
    pub near_resonances: Vec<PairJson>,
}

impl From<&EPReport> for ResonanceJson {
    fn from(r: &EPReport) -> Self {
        Self {
            subsets: r.subsets.iter().map(SubsetJson::from).collect(),
            harmonic_table: r
                .harmonic_table
                .iter()
                .map(|h| PairJson {
                    lower: h.lower + 1,
                    upper: h.upper + 1,
                    value: h.g as f64,
                })
                .collect(),
            near_resonances: r
                .near_resonances
                .iter()
                .map(|h| PairJson {
                    lower: h.lower + 1,
                    upper: h.upper + 1,
                    value: h.detuning,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumJson {
    pub omega: f64,
    pub quasi_energies: Vec<JsonComplex>,
    pub max_abs_imag: f64,
    pub defectivity: f64,
    pub ep_flag: bool,
}

impl From<&FloquetAnalysis> for SpectrumJson {
    fn from(a: &FloquetAnalysis) -> Self {
        Self {
            omega: a.spectrum.omega,
            quasi_energies: a.spectrum.quasi_energies.iter().map(|&z| c(z)).collect(),
            max_abs_imag: a.spectrum.max_abs_imag(),
            defectivity: a.spectrum.defectivity,
            ep_flag: a.ep_flag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub h0_eigenvalues: Vec<f64>,
    pub quasi_energies: BTreeMap<&'static str, Vec<JsonComplex>>,
    pub spectra: BTreeMap<&'static str, SpectrumJson>,
    pub resonance: ResonanceJson,
    pub subsets: Vec<SubsetJson>,
}

impl SpectrumSummary {
    pub fn new(runs: &[(Circulation, FloquetAnalysis)]) -> Self {
        let spectra: BTreeMap<_, _> = runs
            .iter()
            .map(|(c, a)| (c.name(), SpectrumJson::from(a)))
            .collect();
        let first = &runs[0].1;
        Self {
            h0_eigenvalues: first.h0_eigenvalues.clone(),
            quasi_energies: spectra
                .iter()
                .map(|(k, s)| (*k, s.quasi_energies.clone()))
                .collect(),
            spectra,
            resonance: ResonanceJson::from(&first.ep_report),
            subsets: first
                .ep_report
                .subsets
                .iter()
                .map(SubsetJson::from)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiralitySummary {
    pub initial_index: Option<usize>,
    pub dominant_cw: Option<usize>,
    pub dominant_ccw: Option<usize>,
    pub chiral: bool,
    pub subsets: Vec<SubsetJson>,
    pub quasi_energies: BTreeMap<&'static str, Vec<JsonComplex>>,
    pub spectra: BTreeMap<&'static str, SpectrumJson>,
    pub final_fractions: BTreeMap<&'static str, Vec<f64>>,
    pub window_fractions: BTreeMap<&'static str, Vec<f64>>,
    /// Cumulative natural-log rescaling of the raw state at the final time.
    pub norm_scale: BTreeMap<&'static str, f64>,
}

impl From<&ChiralityResult> for ChiralitySummary {
    fn from(r: &ChiralityResult) -> Self {
        let both = [&r.cw, &r.ccw];
        let per =
            |f: &dyn Fn(&super::DirectionOutcome) -> Vec<f64>| -> BTreeMap<&'static str, Vec<f64>> {
                both.iter().map(|o| (o.circulation.name(), f(o))).collect()
            };
        let spectra: BTreeMap<_, _> = both
            .iter()
            .map(|o| (o.circulation.name(), SpectrumJson::from(&o.analysis)))
            .collect();
        Self {
            initial_index: one_based(r.initial_index),
            dominant_cw: one_based(r.dominant_cw),
            dominant_ccw: one_based(r.dominant_ccw),
            chiral: r.chiral,
            subsets: r.ep_report.subsets.iter().map(SubsetJson::from).collect(),
            quasi_energies: spectra
                .iter()
                .map(|(k, s)| (*k, s.quasi_energies.clone()))
                .collect(),
            spectra,
            final_fractions: per(&|o| o.final_fractions.clone()),
            window_fractions: per(&|o| o.window_fractions.clone()),
            norm_scale: both
                .iter()
                .map(|o| {
                    (
                        o.circulation.name(),
                        o.rows.last().map_or(0.0, |r| r.norm_scale),
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveJson {
    pub circulation: Circulation,
    pub initial_index: usize,
    pub samples: usize,
    pub final_populations: Vec<f64>,
    pub final_fractions: Vec<f64>,
    pub norm_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leakage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mid_cycle_populations: Option<Vec<f64>>,
}

impl From<&SingleCycleRun> for EvolveJson {
    fn from(r: &SingleCycleRun) -> Self {
        let last = r.rows.last().expect("non-empty run");
        Self {
            circulation: r.circulation,
            initial_index: r.initial_index + 1,
            samples: r.rows.len(),
            final_populations: last.populations.clone(),
            final_fractions: last.fractions(),
            norm_scale: last.norm_scale,
            fidelity: Some(r.fidelity),
            leakage: Some(r.leakage),
            mid_cycle_populations: Some(r.mid_cycle_populations.clone()),
        }
    }
}

impl From<&EvolveRun> for EvolveJson {
    fn from(r: &EvolveRun) -> Self {
        let last = r.rows.last().expect("non-empty run");
        Self {
            circulation: r.circulation,
            initial_index: r.initial_index + 1,
            samples: r.rows.len(),
            final_populations: last.populations.clone(),
            final_fractions: r.final_fractions.clone(),
            norm_scale: last.norm_scale,
            fidelity: None,
            leakage: None,
            mid_cycle_populations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSummary {
    pub runs: Vec<EvolveJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetStateSummary {
    /// 1-based eigenvalue labels of the state (one) or resonant pair (two).
    pub labels: Vec<usize>,
    pub omega: f64,
    pub mu: JsonComplex,
    pub l_min: i64,
    pub l_max: i64,
    pub residual_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<JsonComplex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solvability: Option<f64>,
    pub coefficients: BTreeMap<i64, Vec<JsonComplex>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secular_coefficients: Option<BTreeMap<i64, Vec<JsonComplex>>>,
}

impl FloquetStateSummary {
    pub fn new(labels: &[usize], s: &FourierFloquetState) -> Self {
        let table = |m: &BTreeMap<i64, CVector>| m.iter().map(|(&l, v)| (l, cv(v))).collect();
        Self {
            labels: labels.iter().map(|i| i + 1).collect(),
            omega: s.omega,
            mu: c(s.mu),
            l_min: s.l_min,
            l_max: s.l_max,
            residual_bound: s.residual_bound,
            gamma: s.gamma.map(c),
            solvability: s.solvability,
            coefficients: table(&s.coeffs),
            secular_coefficients: s.secular_coeffs.as_ref().map(table),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRowJson {
    pub omega_abs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_imag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defectivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ep_flag: Option<bool>,
    pub subsets: Vec<SubsetJson>,
    pub dominant_cw: Option<usize>,
    pub dominant_ccw: Option<usize>,
    pub chiral: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRowJson>,
}

impl From<&[SweepRow]> for SweepSummary {
    fn from(rows: &[SweepRow]) -> Self {
        let rows = rows
            .iter()
            .map(|r| match &r.outcome {
                Ok(p) => SweepRowJson {
                    omega_abs: r.omega_abs,
                    max_imag: Some(p.max_imag),
                    defectivity: Some(p.defectivity),
                    ep_flag: Some(p.ep_flag),
                    subsets: p.subsets.iter().map(SubsetJson::from).collect(),
                    dominant_cw: one_based(p.dominant_cw),
                    dominant_ccw: one_based(p.dominant_ccw),
                    chiral: p.chiral,
                    error: None,
                },
                Err(e) => SweepRowJson {
                    omega_abs: r.omega_abs,
                    max_imag: None,
                    defectivity: None,
                    ep_flag: None,
                    subsets: Vec::new(),
                    dominant_cw: None,
                    dominant_ccw: None,
                    chiral: false,
                    error: Some(e.clone()),
                },
            })
            .collect();
        Self { rows }
    }
}
