//! Single steps of the three methods.

use super::{AlgorithmParams, DiscreteSchedule, IterateState};
use crate::error::{Error, Result};
use crate::geometry::MirrorGeometry;
use crate::problem::{BarrierMode, BarrierObjective, ConvexProblem};
use crate::vecops::{combine, dist, dot, sub};

/// Largest number of halvings tried when a trial point leaves the domain.
const MAX_DAMPING: usize = 30;

/// Everything a step needs besides the iterate.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub problem: &'a ConvexProblem,
    pub geometry: &'a MirrorGeometry,
    pub schedule: &'a DiscreteSchedule,
    pub mode: BarrierMode,
}

impl StepContext<'_> {
    fn next_state(&self, k: usize, x: Vec<f64>, y: Option<Vec<f64>>, z: Vec<f64>) -> Result<IterateState> {
        let barrier = self.mode.params_for_weight(self.schedule.weight(k + 1)?)?;
        Ok(IterateState {
            k: k + 1,
            x,
            y,
            z,
            barrier,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub state: IterateState,
    /// Halvings applied because a trial point left the domain.
    pub damping_events: usize,
    /// Inner iterations of the implicit solve (zero for explicit steps).
    pub fp_iterations: usize,
    /// Final change of the implicit solve.
    pub fp_change: f64,
}

/// Implicit step: solves
///
/// ```text
/// x' = (dtau z' + x) / (1 + dtau)
/// z' = mirror_step(z, grad Phi(x'), dalpha)
/// ```
///
/// The pair is the stationarity condition of the strongly convex problem
/// `min_z Phi(x(z)) + V(z, z_k) / kappa'` with `kappa' = dalpha (1 + dtau) / dtau`,
/// which is solved by mirror descent with a backtracking step. Each inner
/// iteration first probes the plain fixed-point map and stops once it moves
/// `x` by at most `fp_tol`.
///
/// The step is accepted when `<grad Phi(x') - grad Phi(x), x' - x>` is at most
/// `(1/theta - 1) V(z', z) / kappa'`. That bounds the descent-lemma remainder
/// without differencing function values, so it stays meaningful down to
/// round-off.
pub fn agm1_step(
    state: &IterateState,
    ctx: &StepContext,
    fp_tol: f64,
    fp_max: usize,
) -> Result<StepReport> {
    if !(fp_tol > 0.0) || fp_max == 0 {
        return Err(Error::InvalidArgument("fp_tol and fp_max must be positive".into()));
    }
    let w = ctx.schedule.weights(state.k)?;
    let (dalpha, dtau) = (w.delta_alpha(), w.delta_tau());
    let obj = BarrierObjective::new(ctx.problem, state.barrier);
    let geo = ctx.geometry;
    let couple = |z: &[f64]| combine(dtau / (1.0 + dtau), z, 1.0 / (1.0 + dtau), &state.x);
    let inv_kappa = dtau / (dalpha * (1.0 + dtau));
    let divergence = |a: &[f64], b: &[f64]| -> Result<f64> {
        let floor = 0.5 * dist(a, b).powi(2);
        Ok(geo.bregman(a, b)?.max(floor))
    };

    let mut theta: f64 = 0.5;
    let mut x_in = state.x.clone();
    let mut z_in = state.x.clone();
    let mut grad = obj.gradient(&x_in)?;
    let mut damping = 0;
    let mut change = f64::INFINITY;

    for it in 1..=fp_max {
        let z_plain = geo.mirror_step(&state.z, &grad, dalpha)?;
        let x_plain = couple(&z_plain);
        change = dist(&x_plain, &x_in);
        if change <= fp_tol {
            // z is the exact mirror step at x; the coupling line is off by `change`.
            return Ok(StepReport {
                state: ctx.next_state(state.k, x_in, None, z_plain)?,
                damping_events: damping,
                fp_iterations: it,
                fp_change: change,
            });
        }

        let mut step = theta;
        let mut moved = None;
        for _ in 0..=2 * MAX_DAMPING {
            let z_try = geo.relaxed_mirror_step(&state.z, &z_in, &grad, dalpha, step)?;
            let x_try = couple(&z_try);
            if obj.in_domain(&x_try) {
                let g_try = obj.gradient(&x_try)?;
                let curvature = dot(&sub(&g_try, &grad), &sub(&x_try, &x_in));
                let allowance = inv_kappa * (1.0 / step - 1.0) * divergence(&z_try, &z_in)?;
                if curvature <= allowance {
                    moved = Some((x_try, z_try, g_try));
                    break;
                }
            }
            step *= 0.5;
            damping += 1;
        }
        let Some((x_next, z_next, g_next)) = moved else {
            break;
        };
        log::trace!("k = {}: inner step {step:e}, change {change:e}", state.k);
        theta = (2.0 * step).min(0.5);
        x_in = x_next;
        z_in = z_next;
        grad = g_next;
    }

    if change <= 1e3 * fp_tol {
        log::warn!("k = {}: implicit step accepted with change {change:e}", state.k);
        let z_plain = geo.mirror_step(&state.z, &grad, dalpha)?;
        Ok(StepReport {
            state: ctx.next_state(state.k, x_in, None, z_plain)?,
            damping_events: damping,
            fp_iterations: fp_max,
            fp_change: change,
        })
    } else {
        Err(Error::FixedPointDivergence {
            iterations: fp_max,
            change,
        })
    }
}

/// Moves from `base` toward `target` by `weight`, halving the move until the
/// point is inside the barrier domain.
fn damped_coupling(
    obj: &BarrierObjective,
    target: &[f64],
    base: &[f64],
    weight: f64,
    k: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut lam = weight;
    for attempt in 0..=MAX_DAMPING {
        let x = combine(lam, target, 1.0 - lam, base);
        if obj.in_domain(&x) {
            return Ok((x, attempt));
        }
        lam *= 0.5;
        log::debug!("k = {k}: coupling damped to {lam:e}");
    }
    Err(Error::DomainViolation(format!(
        "coupled point at k = {k} stays outside the domain after {MAX_DAMPING} halvings"
    )))
}

/// Explicit accelerated step with a separate gradient sequence `y`.
pub fn agm2_step(
    state: &IterateState,
    ctx: &StepContext,
    params: &AlgorithmParams,
) -> Result<StepReport> {
    let y = state
        .y
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("AGM2 needs the y sequence".into()))?;
    let w = ctx.schedule.weights(state.k)?;
    let obj = BarrierObjective::new(ctx.problem, state.barrier);
    let (x, damping) = damped_coupling(&obj, &state.z, y, w.delta_tau(), state.k)?;
    let grad = obj.gradient(&x)?;
    let eta = params.eta_at(state.k, ctx.problem.constants().barrier_smoothness);
    let y_next = ctx
        .geometry
        .project(&combine(1.0, &x, -eta, &grad));
    let z_next = ctx.geometry.mirror_step(&state.z, &grad, w.delta_alpha())?;
    Ok(StepReport {
        state: ctx.next_state(state.k, x, Some(y_next), z_next)?,
        damping_events: damping,
        fp_iterations: 0,
        fp_change: 0.0,
    })
}

/// Explicit non-accelerated step.
pub fn gm_step(state: &IterateState, ctx: &StepContext) -> Result<StepReport> {
    let w = ctx.schedule.weights(state.k)?;
    let obj = BarrierObjective::new(ctx.problem, state.barrier);
    let (x, damping) = damped_coupling(&obj, &state.z, &state.x, w.delta_tau(), state.k)?;
    let grad = obj.gradient(&x)?;
    let z_next = ctx.geometry.mirror_step(&state.z, &grad, w.delta_alpha())?;
    Ok(StepReport {
        state: ctx.next_state(state.k, x, None, z_next)?,
        damping_events: damping,
        fp_iterations: 0,
        fp_change: 0.0,
    })
}
