//! Constrained convex problems and their log-barrier surrogates.
//!
//! A problem is `min f(x)` over an outer set `X` subject to `g_i(x) <= 0`.
//! The surrogate replaces the constraints with `-(1/c) sum log(s - g_i(x))`,
//! which is finite only on the enlarged set `{x in X : g_i(x) < s}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vecops::{axpy, norm, sub};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Relative tolerance for set membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct Constraint {
    pub value: ScalarFn,
    pub gradient: VectorFn,
}

impl Constraint {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterSet {
    EuclideanBall { radius: f64 },
    Simplex { dim: usize },
}

impl OuterSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            OuterSet::EuclideanBall { radius } => {
                x.iter().all(|v| v.is_finite()) && norm(x) <= radius * (1.0 + MEMBERSHIP_TOL)
            }
            OuterSet::Simplex { dim } => {
                x.len() == dim
                    && x.iter().all(|&v| v >= 0.0 && v.is_finite())
                    && (x.iter().sum::<f64>() - 1.0).abs() <= MEMBERSHIP_TOL
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            OuterSet::EuclideanBall { radius } if !(radius > 0.0 && radius.is_finite()) => Err(
                Error::InvalidArgument(format!("ball radius must be positive, got {radius}")),
            ),
            OuterSet::Simplex { dim: d } if d != dim => Err(Error::InvalidArgument(format!(
                "simplex dimension {d} does not match problem dimension {dim}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Regularity constants: strong convexity and smoothness of `f`, plus a
/// smoothness estimate for the barrier surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub strong_convexity: f64,
    pub smoothness: f64,
    pub barrier_smoothness: f64,
}

impl ProblemConstants {
    pub fn new(strong_convexity: f64, smoothness: f64, barrier_smoothness: f64) -> Result<Self> {
        if !(strong_convexity > 0.0 && strong_convexity <= smoothness) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < m_f <= L_f, got m_f = {strong_convexity}, L_f = {smoothness}"
            )));
        }
        if !(barrier_smoothness >= smoothness && barrier_smoothness.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "barrier smoothness {barrier_smoothness} must be finite and at least L_f = {smoothness}"
            )));
        }
        Ok(Self {
            strong_convexity,
            smoothness,
            barrier_smoothness,
        })
    }
}

/// Known primal-dual solution, used by the reference solver instead of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub point: Vec<f64>,
    pub multipliers: Vec<f64>,
}

#[derive(Clone)]
pub struct ConvexProblem {
    name: String,
    dim: usize,
    objective: ScalarFn,
    objective_gradient: VectorFn,
    constraints: Vec<Constraint>,
    outer: OuterSet,
    constants: ProblemConstants,
    witness: Vec<f64>,
    kkt: Option<KktSolution>,
}

impl fmt::Debug for ConvexProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constraints", &self.constraints.len())
            .field("outer", &self.outer)
            .field("constants", &self.constants)
            .finish()
    }
}

impl ConvexProblem {
    /// Builds a problem; `witness` must lie in `X` with every `g_i < 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        objective_gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        constraints: Vec<Constraint>,
        outer: OuterSet,
        constants: ProblemConstants,
        witness: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        outer.validate(dim)?;
        let problem = Self {
            name: name.into(),
            dim,
            objective: Arc::new(objective),
            objective_gradient: Arc::new(objective_gradient),
            constraints,
            outer,
            constants,
            witness,
            kkt: None,
        };
        if problem.witness.len() != dim || !outer.contains(&problem.witness) {
            return Err(Error::InvalidArgument(
                "witness point is not in the outer set".into(),
            ));
        }
        if problem.constraint_values(&problem.witness).iter().any(|&g| g >= 0.0) {
            return Err(Error::InvalidArgument(
                "witness point is not strictly feasible".into(),
            ));
        }
        Ok(problem)
    }

    pub fn with_kkt(mut self, kkt: KktSolution) -> Self {
        self.kkt = Some(kkt);
        self
    }

    pub fn with_constants(mut self, constants: ProblemConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }
    pub fn outer(&self) -> OuterSet {
        self.outer
    }
    pub fn constants(&self) -> ProblemConstants {
        self.constants
    }
    pub fn witness(&self) -> &[f64] {
        &self.witness
    }
    pub fn kkt(&self) -> Option<&KktSolution> {
        self.kkt.as_ref()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    pub fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.objective_gradient)(x)
    }

    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| (c.value)(x)).collect()
    }

    pub fn constraint_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        (self.constraints[i].gradient)(x)
    }

    /// Largest constraint value, or `-inf` when there are no constraints.
    pub fn g_max(&self, x: &[f64]) -> f64 {
        self.constraint_values(x)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub g_values: Vec<f64>,
    pub in_khat: bool,
    pub in_x: bool,
}

/// Constraint values at `x` and membership in `X` and in the enlarged set for slack `s`.
pub fn feasibility_report(problem: &ConvexProblem, x: &[f64], s: f64) -> FeasibilityReport {
    let g_values = problem.constraint_values(x);
    let in_x = problem.outer.contains(x);
    let in_khat = in_x && g_values.iter().all(|&g| s - g > 0.0);
    FeasibilityReport {
        g_values,
        in_khat,
        in_x,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub c: f64,
    pub s: f64,
}

impl BarrierParams {
    pub fn new(c: f64, s: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "barrier needs c > 0 and s >= 0, got c = {c}, s = {s}"
            )));
        }
        Ok(Self { c, s })
    }
}

/// Whether the barrier is held fixed or follows the run's schedule
/// (`c = A`, `s = 1/A` for discrete runs, `c = e^beta`, `s = e^-beta` for the flow).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierMode {
    Fixed(BarrierParams),
    Scheduled,
}

impl BarrierMode {
    /// Barrier for a schedule weight `a` (either `A_k` or `e^beta`).
    pub fn params_for_weight(&self, a: f64) -> Result<BarrierParams> {
        match self {
            BarrierMode::Fixed(p) => Ok(*p),
            BarrierMode::Scheduled => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::Overflow(format!("schedule weight {a} is not usable")));
                }
                BarrierParams::new(a, 1.0 / a)
            }
        }
    }
}

#[derive(Clone, Copy)]
pub struct BarrierObjective<'a> {
    problem: &'a ConvexProblem,
    params: BarrierParams,
}

impl<'a> BarrierObjective<'a> {
    pub fn new(problem: &'a ConvexProblem, params: BarrierParams) -> Self {
        Self { problem, params }
    }

    pub fn params(&self) -> BarrierParams {
        self.params
    }

    pub fn problem(&self) -> &'a ConvexProblem {
        self.problem
    }

    /// Slacks `s - g_i(x)`, all strictly positive, or a domain error.
    fn slacks(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.problem.constraint_values(x);
        let mut out = Vec::with_capacity(g.len());
        for (i, gi) in g.into_iter().enumerate() {
            let r = self.params.s - gi;
            if !(r > 0.0) {
                return Err(Error::DomainViolation(format!(
                    "constraint {i}: s - g = {r} is not positive"
                )));
            }
            out.push(r);
        }
        Ok(out)
    }

    fn check_outer(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.problem.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.problem.dim()
            )));
        }
        if !self.problem.outer.contains(x) {
            return Err(Error::DomainViolation("point is outside the outer set".into()));
        }
        Ok(())
    }

    /// True when `x` lies in `X` and strictly inside every shifted constraint.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.problem.outer.contains(x)
            && self
                .problem
                .constraint_values(x)
                .iter()
                .all(|&g| self.params.s - g > 0.0)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_outer(x)?;
        self.value_unchecked_outer(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_outer(x)?;
        self.gradient_unchecked_outer(x)
    }

    /// Value without the outer-set check; used by finite-difference probes
    /// that step off the simplex face.
    pub(crate) fn value_unchecked_outer(&self, x: &[f64]) -> Result<f64> {
        let slacks = self.slacks(x)?;
        let log_sum: f64 = slacks.iter().map(|r| r.ln()).sum();
        let v = self.problem.objective(x) - log_sum / self.params.c;
        if !v.is_finite() {
            return Err(Error::DomainViolation(format!("barrier value {v} is not finite")));
        }
        Ok(v)
    }

    pub(crate) fn gradient_unchecked_outer(&self, x: &[f64]) -> Result<Vec<f64>> {
        let slacks = self.slacks(x)?;
        let mut grad = self.problem.objective_gradient(x);
        for (i, r) in slacks.iter().enumerate() {
            let gi = self.problem.constraint_gradient(i, x);
            grad = axpy(&grad, 1.0 / (self.params.c * r), &gi);
        }
        if !grad.iter().all(|v| v.is_finite()) {
            return Err(Error::DomainViolation("barrier gradient is not finite".into()));
        }
        Ok(grad)
    }

    /// Central-path multipliers `1 / (c (s - g_i(x)))`.
    pub fn multipliers(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .slacks(x)?
            .into_iter()
            .map(|r| 1.0 / (self.params.c * r))
            .collect())
    }
}

/// Largest Hessian eigenvalue of the barrier objective at `x`, by power
/// iteration on central differences of the gradient. Never below `L_f`.
pub fn estimate_barrier_smoothness(
    problem: &ConvexProblem,
    params: BarrierParams,
    x: &[f64],
) -> Result<f64> {
    let obj = BarrierObjective::new(problem, params);
    obj.gradient_unchecked_outer(x)?;
    let n = problem.dim();
    let h = 1e-5;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|e| *e /= nv);
    let mut lambda = 0.0;
    for _ in 0..100 {
        let gp = obj.gradient_unchecked_outer(&axpy(x, h, &v))?;
        let gm = obj.gradient_unchecked_outer(&axpy(x, -h, &v))?;
        let hv: Vec<f64> = sub(&gp, &gm).iter().map(|d| d / (2.0 * h)).collect();
        let nh = norm(&hv);
        if nh == 0.0 {
            break;
        }
        let next = nh;
        v = hv.iter().map(|e| e / nh).collect();
        let done = (next - lambda).abs() <= 1e-9 * next;
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda.max(problem.constants().smoothness))
}

pub const PAPER_QUADRATIC: &str = "paper-quadratic";

/// Names accepted by [`builtin`].
pub fn builtin_names() -> &'static [&'static str] {
    &[PAPER_QUADRATIC]
}

/// Built-in problem instance on the given outer set.
///
/// `paper-quadratic`: `f = x1^2/2 + 3/2 (x2 - 1)^2`, `g = x2 - x1 - 1`, in two dimensions.
pub fn builtin(name: &str, outer: OuterSet) -> Result<ConvexProblem> {
    match name {
        PAPER_QUADRATIC => paper_quadratic(outer),
        other => Err(Error::config(
            "problem",
            format!("unknown problem `{other}` (known: {})", builtin_names().join(", ")),
        )),
    }
}

fn paper_quadratic(outer: OuterSet) -> Result<ConvexProblem> {
    let witness = match outer {
        OuterSet::EuclideanBall { .. } => vec![0.0, 0.0],
        OuterSet::Simplex { .. } => vec![0.5, 0.5],
    };
    let constraint = Constraint::new(|x| x[1] - x[0] - 1.0, |_| vec![-1.0, 1.0]);
    let problem = ConvexProblem::new(
        PAPER_QUADRATIC,
        2,
        |x| 0.5 * x[0] * x[0] + 1.5 * (x[1] - 1.0) * (x[1] - 1.0),
        |x| vec![x[0], 3.0 * (x[1] - 1.0)],
        vec![constraint],
        outer,
        ProblemConstants::new(1.0, 3.0, 3.0)?,
        witness,
    )?;
    // (0, 1) is the unconstrained minimizer and sits on g = 0, so it is the
    // constrained one whenever the outer set contains it.
    let star = [0.0, 1.0];
    if outer.contains(&star) {
        Ok(problem.with_kkt(KktSolution {
            point: star.to_vec(),
            multipliers: vec![0.0],
        }))
    } else {
        Ok(problem)
    }
}
