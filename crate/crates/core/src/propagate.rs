//! Adaptive Dormand-Prince 5(4) integration of `i da/dt = H(t) a` and the
//! one-period propagator (monodromy matrix).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite_vector, CMatrix, CVector, ONE, ZERO};
use crate::model::PeriodicHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step as a fraction of the drive period.
    pub max_step: f64,
    /// First trial step as a fraction of the drive period.
    pub initial_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            initial_step: 1e-3,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| {
            Err(Error::ParameterOutOfRange {
                name,
                value,
                reason,
            })
        };
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol", self.rel_tol, "must be positive");
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad("abs_tol", self.abs_tol, "must be positive");
        }
        if !(self.max_step > 0.0 && self.max_step <= 1.0) {
            return bad("max_step", self.max_step, "must lie in (0, 1]");
        }
        if !(self.initial_step > 0.0 && self.initial_step <= self.max_step) {
            return bad(
                "initial_step",
                self.initial_step,
                "must lie in (0, max_step]",
            );
        }
        Ok(())
    }

    /// Both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

/// Sampled solution of a linear ODE.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    pub step_count: usize,
    /// Largest accepted scaled error norm (1.0 = exactly at tolerance).
    pub max_local_error_estimate: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &CVector {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dy/dt = rhs(t, y)` through the monotone sequence `times`,
/// landing exactly on every entry. `time_scale` converts the fractional step
/// limits in `s` to absolute times.
///
/// `rhs(t, y, dy)` must overwrite `dy`.
pub fn integrate<F>(
    mut rhs: F,
    y0: &CVector,
    times: &[f64],
    time_scale: f64,
    s: &IntegratorSettings,
) -> Result<Trajectory>
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    s.validate()?;
    ensure_finite_vector(y0, "initial state")?;
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(
            "sample times must be finite and non-empty".into(),
        ));
    }
    let dir = if times.len() > 1 && times[times.len() - 1] < times[0] {
        -1.0
    } else {
        1.0
    };
    if times.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
        return Err(Error::InvalidArgument(
            "sample times must be strictly monotone".into(),
        ));
    }

    let n = y0.len();
    let h_max = s.max_step * time_scale;
    let mut h = (s.initial_step * time_scale).min(h_max);
    let mut t = times[0];
    let mut y = y0.clone();
    let mut k: Vec<CVector> = vec![CVector::zeros(n); 7];
    let mut stage = CVector::zeros(n);
    let mut y_new = CVector::zeros(n);
    let mut traj = Trajectory {
        times: vec![t],
        states: vec![y.clone()],
        step_count: 0,
        max_local_error_estimate: 0.0,
    };

    rhs(t, &y, &mut k[0]);
    for &target in &times[1..] {
        while (target - t) * dir > 0.0 {
            let remaining = (target - t).abs();
            let hitting = h >= remaining;
            let step = if hitting { remaining } else { h };
            let floor = 1e-14 * t.abs().max(time_scale);
            if step < floor && !hitting {
                return Err(Error::StepSizeUnderflow { t, h: step });
            }
            let hs = step * dir;

            for i in 1..7 {
                stage.copy_from(&y);
                for (j, a) in A[i][..i].iter().enumerate() {
                    if *a != 0.0 {
                        stage.axpy(Complex64::new(hs * a, 0.0), &k[j], ONE);
                    }
                }
                rhs(t + C[i] * hs, &stage, &mut k[i]);
                if i == 6 {
                    y_new.copy_from(&stage);
                }
            }

            let mut acc = 0.0;
            for m in 0..n {
                let mut err = ZERO;
                for (j, e) in E.iter().enumerate() {
                    if *e != 0.0 {
                        err += k[j][m] * *e;
                    }
                }
                let sc = s.abs_tol + s.rel_tol * y[m].norm().max(y_new[m].norm());
                acc += (err.norm() * step / sc).powi(2);
            }
            let err_norm = (acc / n as f64).sqrt();
            if !err_norm.is_finite() {
                return Err(Error::NonFiniteState { t });
            }

            if err_norm <= 1.0 {
                t = if hitting { target } else { t + hs };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                traj.step_count += 1;
                traj.max_local_error_estimate = traj.max_local_error_estimate.max(err_norm);
                if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFiniteState { t });
                }
                let fac = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A boundary-clipped step says nothing about the natural step size.
                if !hitting || (fac < 1.0 && step > 0.5 * h) {
                    h = (step * fac).min(h_max);
                }
            } else {
                h = step * (0.9 * err_norm.powf(-0.2)).max(0.1);
                if h < floor {
                    return Err(Error::StepSizeUnderflow { t, h });
                }
            }
        }
        traj.times.push(target);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

/// In-place right-hand side `dy = -i H(t) y`, allocation free.
pub fn schrodinger_rhs(h: &PeriodicHamiltonian) -> impl Fn(f64, &CVector, &mut CVector) + '_ {
    let minus_i = Complex64::new(0.0, -1.0);
    let omega = h.omega();
    move |t, y, dy| {
        dy.gemv(minus_i, h.h0(), y, ZERO);
        for d in h.drives() {
            let r = d.parameter(omega, t);
            dy.gemv(minus_i * r, d.matrix(), y, ONE);
        }
    }
}

/// Uniform sample grid of `samples >= 2` points including both endpoints.
pub fn sample_times(t_span: (f64, f64), samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(Error::BadSpan(format!("({t0}, {t1})")));
    }
    let last = samples - 1;
    Ok((0..samples)
        .map(|i| {
            if i == last {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / last as f64
            }
        })
        .collect())
}

/// Solves `i da/dt = H(t) a` from `a0` at `t_span.0`, sampled uniformly.
pub fn evolve(
    h: &PeriodicHamiltonian,
    a0: &CVector,
    t_span: (f64, f64),
    samples: usize,
    s: &IntegratorSettings,
) -> Result<Trajectory> {
    if a0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: a0.len(),
        });
    }
    let times = sample_times(t_span, samples)?;
    integrate(schrodinger_rhs(h), a0, &times, h.period(), s)
}

/// Propagator `U(t1, t0)`; columns are integrated concurrently.
pub fn propagator(
    h: &PeriodicHamiltonian,
    t0: f64,
    t1: f64,
    s: &IntegratorSettings,
) -> Result<CMatrix> {
    let n = h.dim();
    let cols: Vec<CVector> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = CVector::zeros(n);
            e[j] = ONE;
            evolve(h, &e, (t0, t1), 2, s).map(|tr| tr.final_state().clone())
        })
        .collect::<Result<_>>()?;
    Ok(CMatrix::from_columns(&cols))
}

/// One-period propagator `M = U(T, 0) = exp(-i R T)`.
pub fn monodromy(h: &PeriodicHamiltonian, s: &IntegratorSettings) -> Result<CMatrix> {
    propagator(h, 0.0, h.period(), s)
}
