//! Instantaneous eigenframes along the cycle, complex Berry phases, and the
//! adiabatic amplitudes `f_n(t)` of a sampled trajectory.
//!
//! Numeric frames use a fixed-component gauge: each right eigenvector keeps
//! the component that is largest at the first sample equal to 1 throughout.
//! This gauge is single valued on loops that do not encircle a static EP and
//! coincides with the closed-form gauge of the `longhi3` preset.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{binner, eig, leading_index, CVector, DEFAULT_TOL, I, ZERO};
use crate::model::{analytic_frame_longhi3, PeriodicHamiltonian};
use crate::propagate::{integrate, IntegratorSettings, Trajectory};

/// Relative eigenvalue gap below which the frame is considered collapsed.
pub const GAP_TOL: f64 = 1e-6;
/// Overlap margin below which a frame matching is considered ambiguous.
pub const MATCH_MARGIN: f64 = 0.01;
/// Maximum number of bisections between two requested samples when tracking.
const MAX_REFINE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameMode {
    /// Closed-form eigenvectors of the `longhi3` preset with the given `Omega`.
    AnalyticLonghi3 { omega_cap: f64 },
    /// Numerical eigendecomposition with continuity tracking.
    Numeric,
}

#[derive(Debug, Clone)]
pub struct FrameSample {
    pub t: f64,
    pub sigma: Vec<Complex64>,
    pub e: Vec<CVector>,
    pub e_adj: Vec<CVector>,
    /// `int_{t0}^t sigma_n` by the trapezoidal rule.
    pub phase_accum: Vec<Complex64>,
    /// Complex Berry phase `phi_n(t)` accumulated from the first sample.
    pub berry_accum: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct RawFrame {
    t: f64,
    sigma: Vec<Complex64>,
    e: Vec<CVector>,
    e_adj: Vec<CVector>,
}

fn numeric_frame(h: &PeriodicHamiltonian, t: f64) -> Result<RawFrame> {
    let d = eig(&h.assemble(t), DEFAULT_TOL)?;
    let scale = d.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = d.dim();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (d.values[i] - d.values[j]).norm();
            if gap <= GAP_TOL * scale || scale == 0.0 {
                return Err(Error::GapCollapse { t, gap });
            }
        }
    }
    Ok(RawFrame {
        t,
        sigma: d.values,
        e: d.right_vectors,
        e_adj: d.left_vectors,
    })
}

fn analytic_frame(h: &PeriodicHamiltonian, omega_cap: f64, t: f64) -> Result<RawFrame> {
    if h.dim() != 3 || h.drives().len() > 1 {
        return Err(Error::InvalidArgument(
            "analytic frames need a 3x3 model with a single drive".into(),
        ));
    }
    let r = h
        .drives()
        .first()
        .map_or(ZERO, |d| d.parameter(h.omega(), t));
    let f = analytic_frame_longhi3(omega_cap, r);
    Ok(RawFrame {
        t,
        sigma: f.sigma.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
        e: f.e.to_vec(),
        e_adj: f.e_adj.to_vec(),
    })
}

/// Scales `v` so that `v[c] = 1`.
fn pin(v: &CVector, c: usize, n: usize, t: f64) -> Result<CVector> {
    if v[c].norm() <= 1e-8 * v.norm() {
        return Err(Error::VanishingNorm { n, t });
    }
    Ok(v / v[c])
}

/// Reorders `next` to follow `prev` by maximal normalized biorthogonal overlap.
fn match_frame(prev: &RawFrame, next: RawFrame) -> Result<RawFrame> {
    let n = prev.sigma.len();
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (slot, l) in perm.iter_mut().zip(&prev.e_adj) {
        let mut scores: Vec<(f64, usize)> = (0..n)
            .map(|j| {
                let r = &next.e[j];
                let s = binner(l, r).map(|z| z.norm()).unwrap_or(0.0) / (l.norm() * r.norm());
                (s, j)
            })
            .collect();
        scores.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (best, j) = scores[0];
        if n > 1 && scores[1].0 >= best * (1.0 - MATCH_MARGIN) {
            return Err(Error::AmbiguousMatching { t: next.t });
        }
        if taken[j] {
            return Err(Error::AmbiguousMatching { t: next.t });
        }
        taken[j] = true;
        *slot = j;
    }
    Ok(RawFrame {
        t: next.t,
        sigma: perm.iter().map(|&j| next.sigma[j]).collect(),
        e: perm.iter().map(|&j| next.e[j].clone()).collect(),
        e_adj: perm.iter().map(|&j| next.e_adj[j].clone()).collect(),
    })
}

/// Tracks the frame from `prev` to time `t`, bisecting the interval when the
/// matching is ambiguous.
fn track(h: &PeriodicHamiltonian, prev: &RawFrame, t: f64, depth: u32) -> Result<RawFrame> {
    let next = numeric_frame(h, t)?;
    match match_frame(prev, next) {
        Err(Error::AmbiguousMatching { .. }) if depth < MAX_REFINE => {
            let mid = track(h, prev, 0.5 * (prev.t + t), depth + 1)?;
            track(h, &mid, t, depth + 1)
        }
        other => other,
    }
}

/// Midpoint Berry increments `-i <l, de> / <l, e>` between two frames, with
/// both vectors averaged over the interval.
fn midpoint_berry(
    t: f64,
    a: (&[CVector], &[CVector]),
    b: (&[CVector], &[CVector]),
) -> Result<Vec<Complex64>> {
    let half = Complex64::new(0.5, 0.0);
    (0..a.0.len())
        .map(|m| {
            let eb = (&a.0[m] + &b.0[m]) * half;
            let lb = (&a.1[m] + &b.1[m]) * half;
            let de = &b.0[m] - &a.0[m];
            let norm = binner(&lb, &eb)?;
            if norm.norm() <= 1e-12 * lb.norm() * eb.norm() {
                return Err(Error::VanishingNorm { n: m, t });
            }
            Ok(-I * binner(&lb, &de)? / norm)
        })
        .collect()
}

/// Instantaneous eigenframe of `H(t)` at each of `times`, with accumulated
/// dynamical phases and Berry phases.
pub fn frame_along(
    h: &PeriodicHamiltonian,
    times: &[f64],
    mode: FrameMode,
) -> Result<Vec<FrameSample>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let raw: Vec<RawFrame> = match mode {
        FrameMode::AnalyticLonghi3 { omega_cap } => times
            .iter()
            .map(|&t| analytic_frame(h, omega_cap, t))
            .collect::<Result<_>>()?,
        FrameMode::Numeric => {
            let first = numeric_frame(h, times[0])?;
            let pins: Vec<usize> = first.e.iter().map(leading_index).collect();
            let mut out = vec![first];
            for &t in &times[1..] {
                let next = track(h, out.last().expect("non-empty"), t, 0)?;
                out.push(next);
            }
            for f in &mut out {
                for (n, &c) in pins.iter().enumerate() {
                    f.e[n] = pin(&f.e[n], c, n, f.t)?;
                    let ca = leading_index(&f.e_adj[n]);
                    f.e_adj[n] = &f.e_adj[n] / f.e_adj[n][ca];
                }
            }
            out
        }
    };

    let n = raw[0].sigma.len();
    let inc = (0..raw.len() - 1)
        .map(|k| {
            midpoint_berry(
                raw[k + 1].t,
                (&raw[k].e, &raw[k].e_adj),
                (&raw[k + 1].e, &raw[k + 1].e_adj),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let span = (raw[raw.len() - 1].t - raw[0].t).abs();
    let mut frames: Vec<FrameSample> = Vec::with_capacity(raw.len());
    for (k, r) in raw.into_iter().enumerate() {
        let (phase_accum, berry_accum) = match frames.last() {
            None => (vec![ZERO; n], vec![ZERO; n]),
            Some(p) => {
                let dt = r.t - p.t;
                let phase = (0..n)
                    .map(|m| p.phase_accum[m] + (p.sigma[m] + r.sigma[m]) * (0.5 * dt))
                    .collect();
                // Close each pair of equal intervals with one Richardson step;
                // the midpoint rule is symmetric, so this cancels its h^2 term.
                let paired = k >= 2 && k % 2 == 0 && {
                    let (t0, t1) = (frames[k - 2].t, frames[k - 1].t);
                    ((t1 - t0) - (r.t - t1)).abs() <= 1e-9 * span
                };
                let berry = if paired {
                    let whole = midpoint_berry(
                        r.t,
                        (&frames[k - 2].e, &frames[k - 2].e_adj),
                        (&r.e, &r.e_adj),
                    )?;
                    (0..n)
                        .map(|m| {
                            let halves = inc[k - 2][m] + inc[k - 1][m];
                            frames[k - 2].berry_accum[m] + halves + (halves - whole[m]) / 3.0
                        })
                        .collect()
                } else {
                    (0..n).map(|m| p.berry_accum[m] + inc[k - 1][m]).collect()
                };
                (phase, berry)
            }
        };
        frames.push(FrameSample {
            t: r.t,
            sigma: r.sigma,
            e: r.e,
            e_adj: r.e_adj,
            phase_accum,
            berry_accum,
        });
    }
    Ok(frames)
}

fn check_one_period(frames: &[FrameSample], period: f64) -> Result<()> {
    let (first, last) = match (frames.first(), frames.last()) {
        (Some(a), Some(b)) if frames.len() >= 2 => (a, b),
        _ => return Err(Error::BadSpan("need at least two frames".into())),
    };
    let span = last.t - first.t;
    if (span.abs() - period).abs() > 1e-9 * period {
        return Err(Error::BadSpan(format!(
            "frames span {span}, period is {period}"
        )));
    }
    Ok(())
}

/// Period average `(1/T) int sigma_n dt` by the trapezoidal rule.
pub fn mean_sigma(frames: &[FrameSample], period: f64) -> Result<Vec<Complex64>> {
    check_one_period(frames, period)?;
    let span = frames[frames.len() - 1].t - frames[0].t;
    let last = frames.last().expect("checked");
    Ok(last.phase_accum.iter().map(|p| p / span).collect())
}

/// Closed-loop Berry phase `phi_n(T)` of state `n`.
pub fn berry_phase(frames: &[FrameSample], period: f64, n: usize) -> Result<Complex64> {
    check_one_period(frames, period)?;
    frames
        .last()
        .and_then(|f| f.berry_accum.get(n).copied())
        .ok_or_else(|| Error::InvalidArgument(format!("state index {n} out of range")))
}

/// A trajectory expressed in the adiabatic basis.
#[derive(Debug, Clone)]
pub struct AdiabaticTrajectory {
    pub frames: Vec<FrameSample>,
    /// `amplitudes[k][n] = f_n(t_k)`.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub source: Trajectory,
    /// Largest relative error of `a(t) = sum_n f_n e_n exp(-i int sigma_n)`.
    pub reconstruction_error: f64,
}

impl AdiabaticTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.source.times
    }

    /// `|f_n(t_k)|^2` per sample.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.amplitudes
            .iter()
            .map(|row| row.iter().map(|f| f.norm_sqr()).collect())
            .collect()
    }
}

/// Adiabatic amplitudes of a single state at one frame.
pub fn amplitudes_at(frame: &FrameSample, a: &CVector) -> Result<Vec<Complex64>> {
    let n = frame.sigma.len();
    (0..n)
        .map(|m| {
            let norm = binner(&frame.e_adj[m], &frame.e[m])?;
            if norm.norm() <= 1e-12 * frame.e_adj[m].norm() * frame.e[m].norm() {
                return Err(Error::VanishingNorm { n: m, t: frame.t });
            }
            Ok(binner(&frame.e_adj[m], a)? / norm * (I * frame.phase_accum[m]).exp())
        })
        .collect()
}

/// Projects every sample of `traj` on the frame taken at the same time.
pub fn project(traj: &Trajectory, frames: &[FrameSample]) -> Result<AdiabaticTrajectory> {
    if traj.times.len() != frames.len() {
        return Err(Error::LengthMismatch(traj.times.len(), frames.len()));
    }
    let mut amplitudes = Vec::with_capacity(frames.len());
    let mut reconstruction_error: f64 = 0.0;
    for (k, (a, f)) in traj.states.iter().zip(frames).enumerate() {
        let scale = traj.times[k].abs().max(1.0);
        if (traj.times[k] - f.t).abs() > 1e-12 * scale {
            return Err(Error::Misaligned(k));
        }
        let amps = amplitudes_at(f, a)?;
        let mut rebuilt = CVector::zeros(a.len());
        for (m, fm) in amps.iter().enumerate() {
            rebuilt += &f.e[m] * (fm * (-I * f.phase_accum[m]).exp());
        }
        let an = a.norm();
        if an > 0.0 {
            reconstruction_error = reconstruction_error.max((rebuilt - a).norm() / an);
        }
        amplitudes.push(amps);
    }
    Ok(AdiabaticTrajectory {
        frames: frames.to_vec(),
        amplitudes,
        source: traj.clone(),
        reconstruction_error,
    })
}

fn longhi_r(r0: f64, omega: f64, t: f64) -> Complex64 {
    Complex64::from_polar(r0, omega * t)
}

/// Rotating-wave prediction `f_n(t) = f_n(0) exp(-i phi_n(t))` for `longhi3`,
/// with `phi_1 = phi_3 = -phi_2 / 2 = i (R(t) - R0) / (2 Omega^2)`.
pub fn rwa_predict_longhi3(
    omega_cap: f64,
    r0: f64,
    omega: f64,
    f0: [Complex64; 3],
    times: &[f64],
) -> Vec<[Complex64; 3]> {
    let w2 = omega_cap * omega_cap;
    times
        .iter()
        .map(|&t| {
            let phi1 = I * (longhi_r(r0, omega, t) - r0) / (2.0 * w2);
            let phi = [phi1, -2.0 * phi1, phi1];
            [
                f0[0] * (-I * phi[0]).exp(),
                f0[1] * (-I * phi[1]).exp(),
                f0[2] * (-I * phi[2]).exp(),
            ]
        })
        .collect()
}

/// Right-hand side of the exact adiabatic amplitude equations of `longhi3`.
pub fn exact_amplitude_rhs_longhi3(
    omega_cap: f64,
    r0: f64,
    omega: f64,
    t: f64,
    f: [Complex64; 3],
) -> [Complex64; 3] {
    let w2 = omega_cap * omega_cap;
    let r_dot = I * omega * longhi_r(r0, omega, t);
    let p1 = Complex64::from_polar(1.0, omega_cap * t);
    let p2 = p1 * p1;
    let m1 = p1.conj();
    let m2 = p2.conj();
    let c = r_dot / (2.0 * w2);
    [
        c * (f[0] + f[1] * m1 + f[2] * m2),
        -2.0 * c * (f[0] * p1 + f[1] + f[2] * m1),
        c * (f[0] * p2 + f[1] * p1 + f[2]),
    ]
}

/// Integrates the exact amplitude equations of `longhi3` through `times`.
pub fn integrate_amplitudes_longhi3(
    omega_cap: f64,
    r0: f64,
    omega: f64,
    f0: [Complex64; 3],
    times: &[f64],
    s: &IntegratorSettings,
) -> Result<Vec<[Complex64; 3]>> {
    let y0 = CVector::from_row_slice(&f0);
    let rhs = |t: f64, y: &CVector, dy: &mut CVector| {
        let d = exact_amplitude_rhs_longhi3(omega_cap, r0, omega, t, [y[0], y[1], y[2]]);
        dy.copy_from_slice(&d);
    };
    let period = 2.0 * std::f64::consts::PI / omega.abs();
    let tr = integrate(rhs, &y0, times, period, s)?;
    Ok(tr.states.iter().map(|v| [v[0], v[1], v[2]]).collect())
}
