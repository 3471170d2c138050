//! Continuous-time accelerated flow in first-order form.
//!
//! The state is the primal point `X` and the dual variable `W = grad h(Z)`:
//!
//! ```text
//! dX/dt = beta'(t) (Z - X),     Z = inverse_mirror(W)
//! dW/dt = -beta'(t) e^beta(t) grad Phi(X)
//! ```
//!
//! Integration is classical RK4 with step halving whenever a stage leaves the
//! barrier's domain.

use crate::error::{Error, Result};
use crate::geometry::{DualPoint, MirrorGeometry};
use crate::oracle::{self, DEFAULT_TOL};
use crate::problem::{BarrierMode, BarrierObjective, BarrierParams, ConvexProblem};
use crate::trajectory::{
    unix_now, DynamicsRow, ReferenceValues, RunMetadata, Termination, TrajectoryRecord,
};
use crate::vecops::{all_finite, axpy, combine};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousSchedule {
    /// `beta = 2p log t`, defined for `t > 0`.
    Polynomial { p: f64 },
    /// `beta = 2p t`.
    Exponential { p: f64 },
}

impl ContinuousSchedule {
    pub fn polynomial(p: f64) -> Result<Self> {
        check_rate(p)?;
        Ok(Self::Polynomial { p })
    }

    pub fn exponential(p: f64) -> Result<Self> {
        check_rate(p)?;
        Ok(Self::Exponential { p })
    }

    /// Conventional start time: 1 for the polynomial schedule, 0 otherwise.
    pub fn default_start(&self) -> f64 {
        match self {
            Self::Polynomial { .. } => 1.0,
            Self::Exponential { .. } => 0.0,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        match self {
            Self::Polynomial { .. } if !(t > 0.0) => Err(Error::InvalidArgument(format!(
                "polynomial schedule needs t > 0, got {t}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn beta(&self, t: f64) -> f64 {
        match *self {
            Self::Polynomial { p } => 2.0 * p * t.ln(),
            Self::Exponential { p } => 2.0 * p * t,
        }
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        match *self {
            Self::Polynomial { p } => 2.0 * p / t,
            Self::Exponential { p } => 2.0 * p,
        }
    }

    /// `e^beta(t)`, computed without the intermediate logarithm where possible.
    pub fn exp_beta(&self, t: f64) -> f64 {
        match *self {
            Self::Polynomial { p } => t.powf(2.0 * p),
            Self::Exponential { p } => (2.0 * p * t).exp(),
        }
    }
}

fn check_rate(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rate p must be positive, got {p}")))
    }
}

/// Barrier in force at time `t`.
pub fn barrier_at(mode: &BarrierMode, schedule: &ContinuousSchedule, t: f64) -> Result<BarrierParams> {
    mode.params_for_weight(schedule.exp_beta(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsState {
    pub t: f64,
    pub x: Vec<f64>,
    pub w: DualPoint,
}

impl DynamicsState {
    /// State with zero velocity: `Z = X`.
    pub fn at_rest(t: f64, x: &[f64], geometry: &MirrorGeometry) -> Result<Self> {
        Ok(Self {
            t,
            x: x.to_vec(),
            w: geometry.mirror_map(x)?,
        })
    }

    pub fn z(&self, geometry: &MirrorGeometry) -> Result<Vec<f64>> {
        geometry.inverse_mirror(&self.w)
    }
}

/// Time derivatives `(dX, dW)` at `state`.
pub fn vector_field(
    state: &DynamicsState,
    schedule: &ContinuousSchedule,
    mode: &BarrierMode,
    geometry: &MirrorGeometry,
    problem: &ConvexProblem,
) -> Result<(Vec<f64>, Vec<f64>)> {
    schedule.check_time(state.t)?;
    let params = barrier_at(mode, schedule, state.t)?;
    let grad = BarrierObjective::new(problem, params).gradient(&state.x)?;
    let z = state.z(geometry)?;
    let bd = schedule.beta_dot(state.t);
    let weight = bd * schedule.exp_beta(state.t);
    let dx: Vec<f64> = z.iter().zip(&state.x).map(|(zi, xi)| bd * (zi - xi)).collect();
    let dw: Vec<f64> = grad.iter().map(|g| -weight * g).collect();
    if !all_finite(&dx) || !all_finite(&dw) {
        return Err(Error::Overflow(format!("vector field not finite at t = {}", state.t)));
    }
    Ok((dx, dw))
}

fn rk4_step(
    state: &DynamicsState,
    h: f64,
    schedule: &ContinuousSchedule,
    mode: &BarrierMode,
    geometry: &MirrorGeometry,
    problem: &ConvexProblem,
) -> Result<DynamicsState> {
    let stage = |base: &DynamicsState, dt: f64, k: &(Vec<f64>, Vec<f64>)| DynamicsState {
        t: state.t + dt,
        x: axpy(&base.x, dt, &k.0),
        w: DualPoint(axpy(&base.w.0, dt, &k.1)),
    };
    let f = |s: &DynamicsState| vector_field(s, schedule, mode, geometry, problem);
    let k1 = f(state)?;
    let k2 = f(&stage(state, 0.5 * h, &k1))?;
    let k3 = f(&stage(state, 0.5 * h, &k2))?;
    let k4 = f(&stage(state, h, &k3))?;
    let blend = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        let ad = combine(1.0, a, 1.0, d);
        let bc = combine(1.0, b, 1.0, c);
        combine(h / 6.0, &ad, h / 3.0, &bc)
    };
    let dx = blend(&k1.0, &k2.0, &k3.0, &k4.0);
    let dw = blend(&k1.1, &k2.1, &k3.1, &k4.1);
    Ok(DynamicsState {
        t: state.t + h,
        x: combine(1.0, &state.x, 1.0, &dx),
        w: DualPoint(combine(1.0, &state.w.0, 1.0, &dw)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Smallest step tried before giving up.
    pub min_step: f64,
    /// Scheduled mode: refresh the barrier minimizer every this many accepted steps.
    pub refresh_every: usize,
    pub oracle_tol: f64,
    /// Keep every n-th accepted step (the first and last are always kept).
    pub record_every: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            min_step: 1e-12,
            refresh_every: 50,
            oracle_tol: DEFAULT_TOL,
            record_every: 1,
        }
    }
}

/// Comparator used for the gap and energy columns.
struct Comparator {
    params: BarrierParams,
    point: Vec<f64>,
    value: f64,
}

impl Comparator {
    fn solve(
        problem: &ConvexProblem,
        geometry: &MirrorGeometry,
        params: BarrierParams,
        tol: f64,
        warm: Option<&[f64]>,
    ) -> Result<Self> {
        let r = oracle::solve_barrier_from(problem, geometry, params, tol, warm)?;
        Ok(Self {
            params,
            point: r.point,
            value: r.value,
        })
    }

    fn gap(&self, problem: &ConvexProblem, x: &[f64]) -> Option<f64> {
        BarrierObjective::new(problem, self.params)
            .value(x)
            .ok()
            .map(|v| v - self.value)
    }

    fn energy(
        &self,
        problem: &ConvexProblem,
        geometry: &MirrorGeometry,
        weight: f64,
        x: &[f64],
        z: &[f64],
    ) -> Option<f64> {
        let gap = self.gap(problem, x)?;
        let dist = geometry.bregman(&self.point, z).ok()?;
        let e = weight * gap + dist;
        e.is_finite().then_some(e)
    }
}

/// Integrates from `init` at rest over `[t0, t1]` with nominal step `dt`.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    init: &[f64],
    schedule: &ContinuousSchedule,
    mode: &BarrierMode,
    geometry: &MirrorGeometry,
    problem: &ConvexProblem,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<TrajectoryRecord<DynamicsRow>> {
    integrate_with(init, schedule, mode, geometry, problem, t0, t1, dt, &IntegrationOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_with(
    init: &[f64],
    schedule: &ContinuousSchedule,
    mode: &BarrierMode,
    geometry: &MirrorGeometry,
    problem: &ConvexProblem,
    t0: f64,
    t1: f64,
    dt: f64,
    opts: &IntegrationOptions,
) -> Result<TrajectoryRecord<DynamicsRow>> {
    let started = unix_now();
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t1 > t0 and dt > 0, got [{t0}, {t1}] with dt = {dt}"
        )));
    }
    if opts.refresh_every == 0 || opts.record_every == 0 {
        return Err(Error::InvalidArgument("refresh and record intervals must be positive".into()));
    }
    schedule.check_time(t0)?;
    if geometry.outer_set() != problem.outer() {
        return Err(Error::InvalidArgument("geometry set differs from problem set".into()));
    }
    if !problem.outer().contains(init) {
        return Err(Error::InvalidArgument("start point is outside the outer set".into()));
    }
    let params0 = barrier_at(mode, schedule, t0)?;
    let g0 = problem.g_max(init);
    if !(params0.s - g0 > 0.0) {
        return Err(Error::InfeasibleStart {
            g_max: g0,
            slack: params0.s,
        });
    }

    let truth = oracle::solve_true(problem, DEFAULT_TOL).ok();
    let frozen = Comparator::solve(problem, geometry, params0, opts.oracle_tol, Some(init))?;
    let mut current = Comparator::solve(problem, geometry, params0, opts.oracle_tol, Some(init))?;
    let scheduled = matches!(mode, BarrierMode::Scheduled);

    let row = |state: &DynamicsState, current: &Comparator| -> Result<DynamicsRow> {
        let z = state.z(geometry)?;
        let weight = schedule.exp_beta(state.t);
        let lyapunov = current.energy(problem, geometry, weight, &state.x, &z);
        let lyapunov_frozen = if scheduled {
            frozen.energy(problem, geometry, weight, &state.x, &z)
        } else {
            lyapunov
        };
        Ok(DynamicsRow {
            t: state.t,
            phi_gap: current.gap(problem, &state.x),
            f_gap: truth.as_ref().map(|r| problem.objective(&state.x) - r.f_value),
            g_max: problem.g_max(&state.x),
            slack: barrier_at(mode, schedule, state.t)?.s,
            lyapunov,
            lyapunov_frozen,
            z,
            x: state.x.clone(),
        })
    };

    let mut state = DynamicsState::at_rest(t0, init, geometry)?;
    let mut rows = vec![row(&state, &current)?];
    let mut accepted = 0usize;
    let mut termination = Termination::EndTime;
    let end_slop = 1e-12 * t1.abs().max(1.0);

    while state.t < t1 - end_slop {
        let mut h = dt.min(t1 - state.t);
        let next = loop {
            let attempt = rk4_step(&state, h, schedule, mode, geometry, problem).and_then(|s| {
                let params = barrier_at(mode, schedule, s.t)?;
                if BarrierObjective::new(problem, params).in_domain(&s.x) && all_finite(&s.w.0) {
                    Ok(s)
                } else {
                    Err(Error::DomainViolation("step left the domain".into()))
                }
            });
            match attempt {
                Ok(s) => break Some(s),
                Err(Error::DomainViolation(_)) | Err(Error::Overflow(_)) => {
                    h *= 0.5;
                    log::debug!("t = {}: halving step to {h:e}", state.t);
                    if h < opts.min_step {
                        break None;
                    }
                }
                Err(e) => {
                    termination = Termination::Failed(e);
                    break None;
                }
            }
        };
        let Some(next) = next else {
            if termination == Termination::EndTime {
                termination = Termination::Failed(Error::StepCollapse {
                    t: state.t,
                    min_step: opts.min_step,
                });
            }
            break;
        };
        state = next;
        accepted += 1;
        if scheduled && accepted % opts.refresh_every == 0 {
            let params = barrier_at(mode, schedule, state.t)?;
            match Comparator::solve(problem, geometry, params, opts.oracle_tol, Some(&current.point)) {
                Ok(c) => current = c,
                Err(e) => log::warn!("t = {}: comparator refresh failed: {e}", state.t),
            }
        }
        let last = state.t >= t1 - end_slop;
        if accepted % opts.record_every == 0 || last {
            rows.push(row(&state, &current)?);
        }
    }

    Ok(TrajectoryRecord {
        meta: RunMetadata {
            config: Vec::new(),
            started_unix: started,
            finished_unix: unix_now(),
            reference: ReferenceValues {
                xhat: Some(frozen.point.clone()),
                phi_hat: Some(frozen.value),
                xstar: truth.as_ref().map(|r| r.point.clone()),
                fstar: truth.as_ref().map(|r| r.f_value),
            },
            barrier_mode: *mode,
            delta: None,
        },
        rows,
        termination,
    })
}
