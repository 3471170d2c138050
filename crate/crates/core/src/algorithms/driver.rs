//! Run loop and Lyapunov audit for the discrete methods.

use super::{
    agm1_step, agm2_step, gm_step, Algorithm, AlgorithmParams, DiscreteSchedule, IterateState,
    ScheduleKind, StepContext, StepRule, StopRule,
};
use crate::error::{Error, Result};
use crate::geometry::MirrorGeometry;
use crate::oracle::{self, OracleResult};
use crate::problem::{BarrierMode, BarrierObjective, BarrierParams, ConvexProblem};
use crate::trajectory::{
    unix_now, IterationRow, ReferenceValues, RunMetadata, Termination, TrajectoryRecord,
};
use crate::vecops::norm;

struct Comparator {
    params: BarrierParams,
    point: Vec<f64>,
    value: f64,
}

/// Runs `algorithm` from `start` until the stop rule fires, `max_iters` steps
/// are taken, or a step fails. A failing step ends the run but keeps its rows.
pub fn run(
    algorithm: Algorithm,
    problem: &ConvexProblem,
    geometry: &MirrorGeometry,
    schedule: &DiscreteSchedule,
    params: &AlgorithmParams,
    start: &[f64],
) -> Result<TrajectoryRecord<IterationRow>> {
    let started = unix_now();
    params.validate()?;
    if geometry.outer_set() != problem.outer() {
        return Err(Error::InvalidArgument("geometry set differs from problem set".into()));
    }
    if start.len() != problem.dim() || !problem.outer().contains(start) {
        return Err(Error::InvalidArgument("start point is outside the outer set".into()));
    }
    if algorithm == Algorithm::Agm2 && params.step_rule == StepRule::Theory {
        let cap = geometry.mu() / (4.0 * problem.constants().barrier_smoothness);
        match schedule.kind() {
            ScheduleKind::QuadC { scale } if scale <= cap * (1.0 + 1e-12) => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "theory step rule needs a quad-c schedule with scale <= {cap}, got {other:?}"
                )))
            }
        }
    }

    let mode = params.barrier_mode;
    let k0 = schedule.first_index();
    let barrier0 = mode.params_for_weight(schedule.weight(k0)?)?;
    let g0 = problem.g_max(start);
    if !(barrier0.s - g0 > 0.0) {
        return Err(Error::InfeasibleStart {
            g_max: g0,
            slack: barrier0.s,
        });
    }

    let truth: Option<OracleResult> = oracle::solve_true(problem, oracle::DEFAULT_TOL).ok();
    if params.stop_rule == StopRule::FunctionGap && truth.is_none() {
        return Err(Error::InvalidArgument(
            "objective-gap stopping needs a reference solution".into(),
        ));
    }
    let solve = |p: BarrierParams, warm: Option<&[f64]>| -> Result<Comparator> {
        let r = oracle::solve_barrier_from(problem, geometry, p, params.oracle_tol, warm)?;
        Ok(Comparator {
            params: p,
            point: r.point,
            value: r.value,
        })
    };
    let initial = solve(barrier0, Some(start))?;
    let xhat0 = initial.point.clone();
    let phi_hat0 = initial.value;
    let mut cmp = initial;

    let ctx = StepContext {
        problem,
        geometry,
        schedule,
        mode,
    };

    let make_row = |state: &IterateState,
                    generating: BarrierParams,
                    cmp: &Comparator,
                    damping: usize|
     -> Result<IterationRow> {
        let obj = BarrierObjective::new(problem, cmp.params);
        let w = state.y.as_ref().unwrap_or(&state.x);
        let a_k = schedule.weight(state.k)?;
        let phi_hat = cmp.value;
        let phi_gap = obj.value(&state.x).ok().map(|v| v - phi_hat);
        let lyapunov = match (obj.value(w), geometry.bregman(&cmp.point, &state.z)) {
            (Ok(v), Ok(d)) => Some(a_k * (v - phi_hat) + d),
            _ => None,
        };
        let grad_norm = BarrierObjective::new(problem, generating)
            .gradient(&state.x)
            .ok()
            .map(|g| norm(&g));
        Ok(IterationRow {
            k: state.k,
            x: state.x.clone(),
            y: w.clone(),
            z: state.z.clone(),
            f_gap: truth.as_ref().map(|t| problem.objective(&state.x) - t.f_value),
            phi_gap,
            g_max: problem.g_max(&state.x),
            slack: state.barrier.s,
            a_k,
            lyapunov,
            grad_norm,
            damping_events: damping,
        })
    };

    let stop_met = |row: &IterationRow| match params.stop_rule {
        StopRule::FunctionGap => row.f_gap.is_some_and(|g| g <= params.stop_tol),
        StopRule::GradientNorm => row.grad_norm.is_some_and(|g| g <= params.stop_tol),
        StopRule::Never => false,
    };

    let mut state = IterateState {
        k: k0,
        x: start.to_vec(),
        y: (algorithm == Algorithm::Agm2).then(|| start.to_vec()),
        z: start.to_vec(),
        barrier: barrier0,
    };
    let first = make_row(&state, barrier0, &cmp, 0)?;
    let mut termination = if stop_met(&first) {
        Some(Termination::Converged)
    } else {
        None
    };
    let mut rows = vec![first];
    let mut steps = 0usize;

    while termination.is_none() {
        if steps >= params.max_iters {
            termination = Some(Termination::IterationLimit);
            break;
        }
        let report = match algorithm {
            Algorithm::Agm1 => agm1_step(&state, &ctx, params.fp_tol, params.fp_max),
            Algorithm::Agm2 => agm2_step(&state, &ctx, params),
            Algorithm::Gm => gm_step(&state, &ctx),
        };
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{algorithm} stopped at k = {}: {e}", state.k);
                termination = Some(Termination::Failed(e));
                break;
            }
        };
        let generating = state.barrier;
        state = report.state;
        steps += 1;
        if matches!(mode, BarrierMode::Scheduled)
            && steps % params.refresh_every == 0
            && cmp.params != generating
        {
            match solve(generating, Some(&cmp.point)) {
                Ok(c) => cmp = c,
                Err(e) => log::warn!("k = {}: comparator refresh failed: {e}", state.k),
            }
        }
        let row = make_row(&state, generating, &cmp, report.damping_events)?;
        if stop_met(&row) {
            termination = Some(Termination::Converged);
        }
        rows.push(row);
    }

    Ok(TrajectoryRecord {
        meta: RunMetadata {
            config: Vec::new(),
            started_unix: started,
            finished_unix: unix_now(),
            reference: ReferenceValues {
                xhat: Some(xhat0),
                phi_hat: Some(phi_hat0),
                xstar: truth.as_ref().map(|t| t.point.clone()),
                fstar: truth.as_ref().map(|t| t.f_value),
            },
            barrier_mode: mode,
            delta: Some(schedule.delta()),
        },
        rows,
        termination: termination.expect("loop exits with a reason"),
    })
}

/// Steps taken when the stop rule fired, if it did.
pub fn iterations_to_tol(record: &TrajectoryRecord<IterationRow>) -> Option<usize> {
    match record.termination {
        Termination::Converged => {
            let first = record.rows.first()?.k;
            Some(record.last().k - first)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSeries {
    pub energy: Vec<f64>,
    /// `(E_{k+1} - E_k) / delta`
    pub residual: Vec<f64>,
}

/// Energy `A_k (Phi(w_k) - Phi(xhat)) + V_h(xhat, z_k)` along a fixed-barrier
/// trajectory, with `w = y` for AGM2 and `w = x` otherwise.
pub fn lyapunov_series(
    record: &TrajectoryRecord<IterationRow>,
    algorithm: Algorithm,
    geometry: &MirrorGeometry,
    problem: &ConvexProblem,
    xhat: &[f64],
) -> Result<LyapunovSeries> {
    let BarrierMode::Fixed(params) = record.meta.barrier_mode else {
        return Err(Error::ModeMismatch);
    };
    let delta = record.meta.delta.unwrap_or(1.0);
    let obj = BarrierObjective::new(problem, params);
    let phi_hat = obj.value(xhat)?;
    let energy = record
        .rows
        .iter()
        .map(|row| {
            let w = if algorithm == Algorithm::Agm2 { &row.y } else { &row.x };
            Ok(row.a_k * (obj.value(w)? - phi_hat) + geometry.bregman(xhat, &row.z)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let residual = energy.windows(2).map(|e| (e[1] - e[0]) / delta).collect();
    Ok(LyapunovSeries { energy, residual })
}
