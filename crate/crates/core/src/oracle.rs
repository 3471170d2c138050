//! High-accuracy reference solutions used as comparators and in tests.
//!
//! `solve_barrier` minimizes the barrier surrogate by projected gradient with
//! backtracking, `solve_true` returns the constrained minimizer either from a
//! registered KKT point or by successive grid refinement.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{project_onto, MirrorGeometry};
use crate::problem::{BarrierObjective, BarrierParams, ConvexProblem, OuterSet};
use crate::vecops::{axpy, dist, dot, norm, sub};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;
const ARMIJO: f64 = 1e-4;

/// Grid search: points per axis and number of refinement rounds after the first grid.
pub const GRID_POINTS: usize = 201;
pub const GRID_REFINEMENTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub point: Vec<f64>,
    /// Value of the minimized function (barrier surrogate or objective).
    pub value: f64,
    /// Objective `f` at the point.
    pub f_value: f64,
    /// Projected-gradient residual; for the grid path, the final grid spacing.
    pub grad_norm: f64,
    pub dual_norm_estimate: f64,
    pub certificate: String,
    pub iterations: usize,
}

/// Minimizer of the barrier surrogate for `(c, s)`, started from the problem's witness.
pub fn solve_barrier(
    problem: &ConvexProblem,
    geometry: &MirrorGeometry,
    c: f64,
    s: f64,
    tol: f64,
) -> Result<OracleResult> {
    solve_barrier_from(problem, geometry, BarrierParams::new(c, s)?, tol, None)
}

/// As [`solve_barrier`], warm-started from `start` when it lies in the domain.
pub fn solve_barrier_from(
    problem: &ConvexProblem,
    geometry: &MirrorGeometry,
    params: BarrierParams,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<OracleResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if geometry.outer_set() != problem.outer() {
        return Err(Error::InvalidArgument(format!(
            "geometry set {:?} differs from problem set {:?}",
            geometry.outer_set(),
            problem.outer()
        )));
    }
    let obj = BarrierObjective::new(problem, params);
    let set = problem.outer();
    let mut x = match start {
        Some(p) if obj.in_domain(p) => p.to_vec(),
        _ => problem.witness().to_vec(),
    };
    let mut phi = obj.value(&x)?;
    let mut grad = obj.gradient(&x)?;
    let mut step: f64 = 1.0;
    let mut residual = f64::INFINITY;

    for it in 0..DEFAULT_MAX_ITERS {
        residual = dist(&x, &project_onto(set, &sub(&x, &grad)));
        if residual <= tol {
            let multipliers = obj.multipliers(&x)?;
            return Ok(OracleResult {
                f_value: problem.objective(&x),
                point: x,
                value: phi,
                grad_norm: residual,
                dual_norm_estimate: multipliers.iter().sum(),
                certificate: "projected-gradient-armijo".into(),
                iterations: it,
            });
        }
        step = (2.0 * step).min(1e12);
        let mut accepted = None;
        while step > 1e-20 {
            let cand = project_onto(set, &axpy(&x, -step, &grad));
            if cand != x && obj.in_domain(&cand) {
                let phi_c = obj.value(&cand)?;
                let grad_c = obj.gradient(&cand)?;
                let moved = sub(&cand, &x);
                let required = ARMIJO * dot(&grad, &moved).abs();
                let resolvable = required > 1e-14 * phi.abs().max(1.0);
                let armijo = resolvable && phi_c <= phi - required;
                // Near the optimum function differences drown in round-off. By
                // convexity this curvature bound still forces a decrease of
                // |moved|^2 / (2 step).
                let curvature = 2.0 * step * dot(&sub(&grad_c, &grad), &moved) <= dot(&moved, &moved);
                if armijo || (!resolvable && curvature) {
                    accepted = Some((cand, phi_c, grad_c));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, phi_c, grad_c)) => {
                x = cand;
                phi = phi_c;
                grad = grad_c;
            }
            None => {
                return Err(Error::MaxItersExceeded {
                    iterations: it,
                    residual,
                    best: x,
                })
            }
        }
    }
    Err(Error::MaxItersExceeded {
        iterations: DEFAULT_MAX_ITERS,
        residual,
        best: x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrueSolveMethod {
    /// Registered KKT point if present, grid otherwise.
    Auto,
    Analytic,
    Grid,
}

/// Constrained minimizer of the original problem.
pub fn solve_true(problem: &ConvexProblem, tol: f64) -> Result<OracleResult> {
    solve_true_with(problem, tol, TrueSolveMethod::Auto)
}

pub fn solve_true_with(
    problem: &ConvexProblem,
    tol: f64,
    method: TrueSolveMethod,
) -> Result<OracleResult> {
    match (method, problem.kkt()) {
        (TrueSolveMethod::Auto | TrueSolveMethod::Analytic, Some(_)) => analytic(problem, tol),
        (TrueSolveMethod::Analytic, None) => Err(Error::InvalidArgument(format!(
            "no analytic solution registered for `{}` on this set",
            problem.name()
        ))),
        _ => grid(problem),
    }
}

fn analytic(problem: &ConvexProblem, tol: f64) -> Result<OracleResult> {
    let kkt = problem.kkt().expect("checked by caller");
    let x = &kkt.point;
    let mut stationarity = problem.objective_gradient(x);
    for (i, lambda) in kkt.multipliers.iter().enumerate() {
        stationarity = axpy(&stationarity, *lambda, &problem.constraint_gradient(i, x));
    }
    let residual = norm(&stationarity);
    if residual > tol.max(1e-12) || problem.g_max(x) > tol.max(1e-12) {
        return Err(Error::InvalidArgument(format!(
            "registered KKT point fails verification (stationarity {residual:e})"
        )));
    }
    let f = problem.objective(x);
    Ok(OracleResult {
        point: x.clone(),
        value: f,
        f_value: f,
        grad_norm: residual,
        dual_norm_estimate: kkt.multipliers.iter().map(|l| l.abs()).sum(),
        certificate: "analytic-kkt".into(),
        iterations: 0,
    })
}

/// Grid coordinates: the free coordinates of a point and how to complete them.
struct GridFrame {
    set: OuterSet,
    free: usize,
}

impl GridFrame {
    fn point(&self, free: &[f64]) -> Option<Vec<f64>> {
        match self.set {
            OuterSet::EuclideanBall { radius } => {
                (norm(free) <= radius).then(|| free.to_vec())
            }
            OuterSet::Simplex { .. } => {
                if free.iter().any(|&v| v < 0.0) {
                    return None;
                }
                let last = 1.0 - free.iter().sum::<f64>();
                if last < -1e-12 {
                    return None;
                }
                let mut p = free.to_vec();
                p.push(last.max(0.0));
                Some(p)
            }
        }
    }
}

fn grid(problem: &ConvexProblem) -> Result<OracleResult> {
    let n = problem.dim();
    if n > 3 {
        return Err(Error::DimensionTooLarge(n));
    }
    let set = problem.outer();
    let (frame, mut center, mut half) = match set {
        OuterSet::EuclideanBall { radius } => (GridFrame { set, free: n }, vec![0.0; n], radius),
        OuterSet::Simplex { .. } => (GridFrame { set, free: n - 1 }, vec![0.5; n - 1], 0.5),
    };
    let spacing_of = |h: f64| 2.0 * h / (GRID_POINTS - 1) as f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut spacing = spacing_of(half);

    for _round in 0..=GRID_REFINEMENTS {
        spacing = spacing_of(half);
        let total = GRID_POINTS.pow(frame.free as u32);
        let axis = |c: f64, j: usize| c - half + spacing * j as f64;
        let round_best = (0..total)
            .into_par_iter()
            .filter_map(|idx| {
                let mut rem = idx;
                let mut free = Vec::with_capacity(frame.free);
                for c in &center {
                    free.push(axis(*c, rem % GRID_POINTS));
                    rem /= GRID_POINTS;
                }
                let p = frame.point(&free)?;
                if problem.constraint_values(&p).iter().any(|&g| g > 0.0) {
                    return None;
                }
                Some((problem.objective(&p), idx, p))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((f, _, p)) = round_best {
            if best.as_ref().is_none_or(|(bf, _)| f <= *bf) {
                best = Some((f, p));
            }
        }
        let Some((_, p)) = &best else {
            return Err(Error::InvalidArgument(
                "grid search found no feasible point".into(),
            ));
        };
        center = p[..frame.free].to_vec();
        half /= 10.0;
    }

    let (f, point) = best.expect("set above");
    Ok(OracleResult {
        dual_norm_estimate: active_multipliers(problem, &point, spacing),
        point,
        value: f,
        f_value: f,
        grad_norm: spacing,
        certificate: "grid-refinement".into(),
        iterations: GRID_REFINEMENTS + 1,
    })
}

/// Least-squares multipliers of the nearly-active constraints, clipped at zero.
fn active_multipliers(problem: &ConvexProblem, x: &[f64], spacing: f64) -> f64 {
    let grad_f = problem.objective_gradient(x);
    let active: Vec<Vec<f64>> = problem
        .constraint_values(x)
        .iter()
        .enumerate()
        .filter(|(i, &g)| g >= -spacing * norm(&problem.constraint_gradient(*i, x)).max(1.0))
        .map(|(i, _)| problem.constraint_gradient(i, x))
        .collect();
    let k = active.len();
    if k == 0 {
        return 0.0;
    }
    // Normal equations G G^T lambda = -G grad_f.
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| dot(&active[i], &active[j])).collect();
            row.push(-dot(&active[i], &grad_f));
            row
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        if a[col][col].abs() < 1e-14 {
            continue;
        }
        for r in 0..k {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    (0..k)
        .map(|i| if a[i][i].abs() < 1e-14 { 0.0 } else { (a[i][k] / a[i][i]).max(0.0) })
        .sum()
}

/// Bound on `|f(barrier minimizer) - f(true minimizer)|`: `m / c + s * dual_norm`.
pub fn gap_certificate(problem: &ConvexProblem, c: f64, s: f64, dual_norm: f64) -> f64 {
    problem.num_constraints() as f64 / c + s * dual_norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, Constraint, ProblemConstants, PAPER_QUADRATIC};
    use approx::assert_abs_diff_eq;

    fn ball(r: f64) -> (ConvexProblem, MirrorGeometry) {
        (
            builtin(PAPER_QUADRATIC, OuterSet::EuclideanBall { radius: r }).unwrap(),
            MirrorGeometry::euclidean_ball(r).unwrap(),
        )
    }

    fn shifted_quadratic(x0: Vec<f64>, outer: OuterSet, witness: Vec<f64>) -> ConvexProblem {
        let x1 = x0.clone();
        ConvexProblem::new(
            "shifted",
            x0.len(),
            move |x| 0.5 * x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            move |x| x.iter().zip(&x1).map(|(a, b)| a - b).collect(),
            vec![Constraint::new(|_| -1.0, |x| vec![0.0; x.len()])],
            outer,
            ProblemConstants::new(1.0, 1.0, 1.0).unwrap(),
            witness,
        )
        .unwrap()
    }

    #[test]
    fn barrier_minimizer_is_stationary() {
        let (p, g) = ball(3.0);
        let r = solve_barrier(&p, &g, 1.0, 1.0, 1e-10).unwrap();
        assert!(r.grad_norm <= 1e-10);
        let obj = BarrierObjective::new(&p, BarrierParams::new(1.0, 1.0).unwrap());
        assert!(norm(&obj.gradient(&r.point).unwrap()) <= 1e-8);
    }

    #[test]
    fn large_weight_approaches_true_solution() {
        let (p, g) = ball(3.0);
        let r = solve_barrier(&p, &g, 1e8, 1e-8, 1e-10).unwrap();
        assert!(dist(&r.point, &[0.0, 1.0]) <= 1e-4);
    }

    #[test]
    fn unconstrained_barrier_is_plain_minimization() {
        let p = ConvexProblem::new(
            "free",
            2,
            |x| 0.5 * ((x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.2).powi(2)),
            |x| vec![x[0] - 0.3, 2.0 * (x[1] + 0.2)],
            vec![],
            OuterSet::EuclideanBall { radius: 1.0 },
            ProblemConstants::new(1.0, 2.0, 2.0).unwrap(),
            vec![0.0, 0.0],
        )
        .unwrap();
        let g = MirrorGeometry::euclidean_ball(1.0).unwrap();
        let r = solve_barrier(&p, &g, 1.0, 0.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r.point[0], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(r.point[1], -0.2, epsilon = 1e-9);
        assert_eq!(r.dual_norm_estimate, 0.0);
    }

    #[test]
    fn geometry_must_match_problem() {
        let (p, _) = ball(3.0);
        let g = MirrorGeometry::neg_entropy(2).unwrap();
        assert!(solve_barrier(&p, &g, 1.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn true_solution_paths_agree() {
        let (p, _) = ball(3.0);
        let a = solve_true_with(&p, 1e-10, TrueSolveMethod::Analytic).unwrap();
        let g = solve_true_with(&p, 1e-10, TrueSolveMethod::Grid).unwrap();
        assert_eq!(a.point, vec![0.0, 1.0]);
        assert_eq!(a.value, 0.0);
        assert!(dist(&a.point, &g.point) <= 1e-6, "grid gave {:?}", g.point);
    }

    #[test]
    fn simplex_true_solution() {
        let p = builtin(PAPER_QUADRATIC, OuterSet::Simplex { dim: 2 }).unwrap();
        let a = solve_true(&p, 1e-10).unwrap();
        assert_eq!(a.point, vec![0.0, 1.0]);
        let g = solve_true_with(&p, 1e-10, TrueSolveMethod::Grid).unwrap();
        assert!(dist(&a.point, &g.point) <= 1e-6, "grid gave {:?}", g.point);
    }

    #[test]
    fn inactive_constraint_gives_projection() {
        let p = shifted_quadratic(vec![2.0, 0.0], OuterSet::EuclideanBall { radius: 1.0 }, vec![0.0, 0.0]);
        let r = solve_true(&p, 1e-10).unwrap();
        assert!(dist(&r.point, &[1.0, 0.0]) <= 1e-6);

        let p = shifted_quadratic(vec![0.9, 0.6, -0.5], OuterSet::Simplex { dim: 3 }, vec![1.0 / 3.0; 3]);
        let r = solve_true(&p, 1e-10).unwrap();
        assert!(dist(&r.point, &[0.65, 0.35, 0.0]) <= 1e-6, "got {:?}", r.point);
    }

    #[test]
    fn grid_rejects_high_dimension() {
        let p = shifted_quadratic(vec![0.0; 4], OuterSet::EuclideanBall { radius: 1.0 }, vec![0.0; 4]);
        assert_eq!(solve_true(&p, 1e-10).unwrap_err(), Error::DimensionTooLarge(4));
    }

    #[test]
    fn certificate_examples() {
        let (p, _) = ball(3.0);
        assert_abs_diff_eq!(gap_certificate(&p, 10.0, 0.1, 0.0), 0.1);
        assert_abs_diff_eq!(gap_certificate(&p, 1e300, 0.0, 5.0), 0.0, epsilon = 1e-299);
        let three = ConvexProblem::new(
            "three",
            1,
            |x| x[0] * x[0],
            |x| vec![2.0 * x[0]],
            (0..3).map(|_| Constraint::new(|x| x[0] - 0.5, |_| vec![1.0])).collect(),
            OuterSet::EuclideanBall { radius: 1.0 },
            ProblemConstants::new(2.0, 2.0, 2.0).unwrap(),
            vec![0.0],
        )
        .unwrap();
        assert_abs_diff_eq!(gap_certificate(&three, 100.0, 0.01, 2.0), 0.05, epsilon = 1e-15);
    }
}
