//! Multi-cycle runs, chirality determination and frequency sweeps driven by an
//! [`ExperimentConfig`].
//!
//! Library results use 0-based state indices; the JSON summaries written by
//! [`emit`] use 1-based labels.

mod config;
pub mod emit;

pub use config::{
    Circulation, Direction, DriveSpec, ExperimentConfig, InitialState, JsonComplex, MatrixSpec,
    ModelSpec, Outputs, PresetSpec,
};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::adiabatic::{amplitudes_at, project, AdiabaticTrajectory, FrameSample};
use crate::error::{Error, Result};
use crate::floquet::{floquet_spectrum, EPReport, FloquetAnalysis, ResonantSubset};
use crate::linalg::CVector;
use crate::model::PeriodicHamiltonian;
use crate::propagate::{evolve, IntegratorSettings};

/// Raw state norm above (or below the inverse of) which the state is rescaled.
pub const RENORM_THRESHOLD: f64 = 1e6;
/// Minimum averaged population fraction of a dominant state.
pub const DOMINANCE_THRESHOLD: f64 = 0.6;
/// Number of trailing cycles averaged when deciding dominance.
pub const DOMINANCE_WINDOW: usize = 10;

/// One output sample: `|f_n|^2` of the rescaled state and the cumulative
/// natural-log rescaling factor (`|f_n|^2 exp(2 norm_scale)` is the raw value).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub populations: Vec<f64>,
    pub norm_scale: f64,
}

impl TrajectoryRow {
    /// Populations normalized to unit sum.
    pub fn fractions(&self) -> Vec<f64> {
        normalize(&self.populations)
    }
}

fn normalize(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter().map(|x| x / total).collect()
    } else {
        vec![0.0; p.len()]
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

/// Frame of cycle `m` at in-cycle sample `k`: identical vectors, phase advanced by `m` periods.
fn shifted_frame(frames: &[FrameSample], k: usize, m: u32, period: f64) -> FrameSample {
    let last = frames.last().expect("frames cover one period");
    let mut f = frames[k].clone();
    f.t += m as f64 * period;
    for (p, pt) in f.phase_accum.iter_mut().zip(&last.phase_accum) {
        *p += *pt * m as f64;
    }
    f
}

/// Integrates `cycles` periods from `a0`, rescaling between cycles, and projects
/// every sample (`dense`) or every period boundary on the adiabatic frame.
fn run_cycles(
    h: &PeriodicHamiltonian,
    frames: &[FrameSample],
    a0: &CVector,
    cycles: u32,
    dense: bool,
    s: &IntegratorSettings,
) -> Result<Vec<TrajectoryRow>> {
    let period = h.period();
    let per_cycle = frames.len() - 1;
    let mut a = a0.clone();
    let mut log_scale = 0.0;
    let row = |a: &CVector, f: &FrameSample, log_scale: f64| -> Result<TrajectoryRow> {
        let amps = amplitudes_at(f, a)?;
        Ok(TrajectoryRow {
            t: f.t,
            populations: amps.iter().map(|z| z.norm_sqr()).collect(),
            norm_scale: log_scale,
        })
    };
    let mut rows = vec![row(&a, &frames[0], 0.0)?];
    for m in 0..cycles {
        let t0 = m as f64 * period;
        let samples = if dense { per_cycle + 1 } else { 2 };
        let tr = evolve(h, &a, (t0, t0 + period), samples, s)?;
        for (j, state) in tr.states.iter().enumerate().skip(1) {
            let k = if dense { j } else { per_cycle };
            rows.push(row(state, &shifted_frame(frames, k, m, period), log_scale)?);
        }
        a = tr.final_state().clone();
        let norm = a.norm();
        if norm > RENORM_THRESHOLD || (norm > 0.0 && norm < 1.0 / RENORM_THRESHOLD) {
            a /= Complex64::new(norm, 0.0);
            log_scale += norm.ln();
        }
    }
    Ok(rows)
}

/// Index carrying the largest initial population, used as the reference state.
fn reference_index(rows: &[TrajectoryRow], initial: Option<usize>) -> usize {
    initial.unwrap_or_else(|| argmax(&rows[0].populations))
}

#[derive(Debug, Clone)]
pub struct SingleCycleRun {
    pub circulation: Circulation,
    pub adiabatic: AdiabaticTrajectory,
    pub rows: Vec<TrajectoryRow>,
    /// 0-based reference state (the prepared adiabatic state, or the most populated one).
    pub initial_index: usize,
    /// `|f_init(T)|^2 / |f_init(0)|^2`.
    pub fidelity: f64,
    /// `max_{m != init} |f_m(T)|^2 / |f_init(0)|^2`.
    pub leakage: f64,
    /// `|f_n|^2` at the sample closest to `T/2`.
    pub mid_cycle_populations: Vec<f64>,
}

/// One cycle of evolution projected on the adiabatic frame.
pub fn run_single_cycle(cfg: &ExperimentConfig, c: Circulation) -> Result<SingleCycleRun> {
    if cfg.cycles != 1 {
        return Err(Error::Config(format!(
            "single-cycle run needs cycles = 1, got {}",
            cfg.cycles
        )));
    }
    let h = cfg.hamiltonian(cfg.omega(c))?;
    let frames = cfg.cycle_frames(&h)?;
    let (a0, init) = cfg.initial_state(&frames[0])?;
    let traj = evolve(&h, &a0, (0.0, h.period()), frames.len(), &cfg.integrator)?;
    let adiabatic = project(&traj, &frames)?;
    let rows: Vec<TrajectoryRow> = adiabatic
        .frames
        .iter()
        .zip(adiabatic.populations())
        .map(|(f, populations)| TrajectoryRow {
            t: f.t,
            populations,
            norm_scale: 0.0,
        })
        .collect();
    let initial_index = reference_index(&rows, init);
    let p0 = rows[0].populations[initial_index];
    let last = &rows[rows.len() - 1].populations;
    let fidelity = last[initial_index] / p0;
    let leakage = last
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != initial_index)
        .map(|(_, p)| p / p0)
        .fold(0.0, f64::max);
    let mid = rows.len() / 2;
    Ok(SingleCycleRun {
        circulation: c,
        mid_cycle_populations: rows[mid].populations.clone(),
        adiabatic,
        rows,
        initial_index,
        fidelity,
        leakage,
    })
}

#[derive(Debug, Clone)]
pub struct EvolveRun {
    pub circulation: Circulation,
    pub rows: Vec<TrajectoryRow>,
    pub initial_index: usize,
    pub final_fractions: Vec<f64>,
}

/// Densely sampled multi-cycle run in one direction.
pub fn run_evolve(cfg: &ExperimentConfig, c: Circulation) -> Result<EvolveRun> {
    let h = cfg.hamiltonian(cfg.omega(c))?;
    let frames = cfg.cycle_frames(&h)?;
    let (a0, init) = cfg.initial_state(&frames[0])?;
    let rows = run_cycles(&h, &frames, &a0, cfg.cycles, true, &cfg.integrator)?;
    Ok(EvolveRun {
        circulation: c,
        initial_index: reference_index(&rows, init),
        final_fractions: rows[rows.len() - 1].fractions(),
        rows,
    })
}

/// Stroboscopic multi-cycle outcome in one direction.
#[derive(Debug, Clone)]
pub struct DirectionOutcome {
    pub circulation: Circulation,
    pub omega: f64,
    /// One row per period boundary, starting at `t = 0`.
    pub rows: Vec<TrajectoryRow>,
    pub final_fractions: Vec<f64>,
    /// Fractions averaged over the trailing dominance window.
    pub window_fractions: Vec<f64>,
    /// 0-based dominant state, `None` when undecided.
    pub dominant: Option<usize>,
    pub analysis: FloquetAnalysis,
}

fn window_average(rows: &[TrajectoryRow], end: usize, window: usize) -> Vec<f64> {
    let start = (end + 1).saturating_sub(window).max(1).min(end);
    let n = rows[0].populations.len();
    let mut acc = vec![0.0; n];
    for r in &rows[start..=end] {
        for (a, f) in acc.iter_mut().zip(r.fractions()) {
            *a += f;
        }
    }
    let count = (end - start + 1) as f64;
    acc.iter().map(|a| a / count).collect()
}

fn dominant_of(fractions: &[f64]) -> Option<usize> {
    let k = argmax(fractions);
    (fractions[k] >= DOMINANCE_THRESHOLD).then_some(k)
}

impl DirectionOutcome {
    /// Earliest cycle count at which state `n` holds the trailing-window
    /// average fraction required for dominance.
    pub fn first_dominance(&self, n: usize) -> Option<usize> {
        (DOMINANCE_WINDOW.min(self.rows.len() - 1).max(1)..self.rows.len())
            .find(|&m| dominant_of(&window_average(&self.rows, m, DOMINANCE_WINDOW)) == Some(n))
    }

    /// Dominant state after `m` cycles, using the window ending there.
    pub fn dominant_at(&self, m: usize) -> Option<usize> {
        dominant_of(&window_average(
            &self.rows,
            m.min(self.rows.len() - 1),
            DOMINANCE_WINDOW,
        ))
    }
}

fn run_direction(cfg: &ExperimentConfig, c: Circulation) -> Result<DirectionOutcome> {
    let omega = cfg.omega(c);
    let h = cfg.hamiltonian(omega)?;
    let frames = cfg.cycle_frames(&h)?;
    let (a0, _) = cfg.initial_state(&frames[0])?;
    let rows = run_cycles(&h, &frames, &a0, cfg.cycles, false, &cfg.integrator)?;
    let analysis = floquet_spectrum(&h, &cfg.integrator)?;
    let end = rows.len() - 1;
    let window_fractions = window_average(&rows, end, DOMINANCE_WINDOW);
    Ok(DirectionOutcome {
        circulation: c,
        omega,
        final_fractions: rows[end].fractions(),
        dominant: dominant_of(&window_fractions),
        window_fractions,
        rows,
        analysis,
    })
}

#[derive(Debug, Clone)]
pub struct ChiralityResult {
    pub initial_index: Option<usize>,
    pub cw: DirectionOutcome,
    pub ccw: DirectionOutcome,
    pub dominant_cw: Option<usize>,
    pub dominant_ccw: Option<usize>,
    /// Both directions decided and different.
    pub chiral: bool,
    pub ep_report: EPReport,
}

impl ChiralityResult {
    pub fn outcome(&self, c: Circulation) -> &DirectionOutcome {
        match c {
            Circulation::Cw => &self.cw,
            Circulation::Ccw => &self.ccw,
        }
    }
}

/// Runs both circulation directions from the same initial state.
pub fn run_chirality(cfg: &ExperimentConfig) -> Result<ChiralityResult> {
    let (cw, ccw) = rayon::join(
        || run_direction(cfg, Circulation::Cw),
        || run_direction(cfg, Circulation::Ccw),
    );
    let (cw, ccw) = (cw?, ccw?);
    let initial_index = match cfg.initial {
        InitialState::AdiabaticIndex(k) => Some(k - 1),
        InitialState::Vector(_) => None,
    };
    let (dominant_cw, dominant_ccw) = (cw.dominant, ccw.dominant);
    let chiral = matches!((dominant_cw, dominant_ccw), (Some(a), Some(b)) if a != b);
    Ok(ChiralityResult {
        initial_index,
        ep_report: cw.analysis.ep_report.clone(),
        cw,
        ccw,
        dominant_cw,
        dominant_ccw,
        chiral,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Largest `|Im mu|` over both directions.
    pub max_imag: f64,
    /// Smallest Floquet-vector singular value over both directions.
    pub defectivity: f64,
    pub ep_flag: bool,
    pub subsets: Vec<ResonantSubset>,
    pub dominant_cw: Option<usize>,
    pub dominant_ccw: Option<usize>,
    pub chiral: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega_abs: f64,
    pub outcome: std::result::Result<SweepPoint, String>,
}

/// Spectral diagnostics and dominance outcome at one grid point.
pub fn sweep_point(cfg: &ExperimentConfig, omega_abs: f64) -> SweepRow {
    let run = || -> Result<SweepPoint> {
        let cfg = ExperimentConfig {
            omega_abs,
            ..cfg.clone()
        };
        cfg.validate()?;
        let r = run_chirality(&cfg)?;
        let (a, b) = (&r.cw.analysis, &r.ccw.analysis);
        Ok(SweepPoint {
            max_imag: a.spectrum.max_abs_imag().max(b.spectrum.max_abs_imag()),
            defectivity: a.spectrum.defectivity.min(b.spectrum.defectivity),
            ep_flag: a.ep_flag || b.ep_flag,
            subsets: r.ep_report.subsets.clone(),
            dominant_cw: r.dominant_cw,
            dominant_ccw: r.dominant_ccw,
            chiral: r.chiral,
        })
    };
    SweepRow {
        omega_abs,
        outcome: run().map_err(|e| e.to_string()),
    }
}

/// Evaluates every grid point concurrently; rows keep the grid order.
pub fn run_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> Vec<SweepRow> {
    grid.par_iter().map(|&w| sweep_point(cfg, w)).collect()
}
