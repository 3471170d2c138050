//! Distance-generating functions, Bregman divergences and mirror steps.
//!
//! Two geometries are supported: half the squared Euclidean norm on a ball
//! and negative entropy on the probability simplex.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::OuterSet;
use crate::vecops::{combine, norm};

/// Entropy iterates are floored here before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// Interior shrink used for the entropy diameter bound and for sampling.
pub const SIMPLEX_SHRINK: f64 = 1e-6;

/// A point of the dual (gradient) space, `w = grad h(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryKind {
    SquaredEuclidean { radius: f64 },
    NegativeEntropy { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorGeometry {
    kind: GeometryKind,
    mu: f64,
    m_bound: f64,
}

impl MirrorGeometry {
    pub fn euclidean_ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            kind: GeometryKind::SquaredEuclidean { radius },
            mu: 1.0,
            m_bound: 2.0 * radius * radius,
        })
    }

    pub fn neg_entropy(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("simplex dimension must be positive".into()));
        }
        let m_bound = if dim == 1 {
            0.0
        } else {
            // KL between opposite vertices of the shrunk simplex; joint convexity
            // puts the maximum there.
            let n = dim as f64;
            let eps = SIMPLEX_SHRINK;
            (1.0 - n * eps) * ((1.0 - (n - 1.0) * eps) / eps).ln()
        };
        Ok(Self {
            kind: GeometryKind::NegativeEntropy { dim },
            mu: 1.0,
            m_bound,
        })
    }

    /// Overrides the strong-convexity modulus (meaningful for entropy, whose
    /// norm pairing is a modelling choice).
    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    /// Upper bound on the divergence over the set (the interior-shrunk simplex for entropy).
    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GeometryKind::SquaredEuclidean { .. } => "euclidean-ball",
            GeometryKind::NegativeEntropy { .. } => "neg-entropy",
        }
    }

    pub fn outer_set(&self) -> OuterSet {
        match self.kind {
            GeometryKind::SquaredEuclidean { radius } => OuterSet::EuclideanBall { radius },
            GeometryKind::NegativeEntropy { dim } => OuterSet::Simplex { dim },
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.outer_set().contains(x)
    }

    /// The distance-generating function `h`.
    pub fn generator(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            GeometryKind::SquaredEuclidean { .. } => Ok(0.5 * norm(x).powi(2)),
            GeometryKind::NegativeEntropy { .. } => {
                check_nonnegative(x)?;
                Ok(x.iter().map(|&v| xlogy(v, v)).sum())
            }
        }
    }

    /// The mirror map `grad h`.
    pub fn mirror_map(&self, x: &[f64]) -> Result<DualPoint> {
        match self.kind {
            GeometryKind::SquaredEuclidean { .. } => Ok(DualPoint(x.to_vec())),
            GeometryKind::NegativeEntropy { .. } => {
                check_nonnegative(x)?;
                Ok(DualPoint(
                    x.iter().map(|&v| 1.0 + v.max(LOG_FLOOR).ln()).collect(),
                ))
            }
        }
    }

    /// Inverse of the mirror map. The Euclidean case is the identity with no
    /// projection; the entropy case normalizes onto the simplex.
    pub fn inverse_mirror(&self, w: &DualPoint) -> Result<Vec<f64>> {
        if !w.0.iter().all(|v| v.is_finite()) {
            return Err(Error::DomainViolation("dual point is not finite".into()));
        }
        match self.kind {
            GeometryKind::SquaredEuclidean { .. } => Ok(w.0.clone()),
            GeometryKind::NegativeEntropy { .. } => Ok(softmax(&w.0)),
        }
    }

    /// `V_h(x, y) = h(x) - h(y) - <grad h(y), x - y>`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        match self.kind {
            GeometryKind::SquaredEuclidean { .. } => Ok(0.5
                * x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()),
            GeometryKind::NegativeEntropy { .. } => {
                check_nonnegative(x)?;
                if let Some(v) = y.iter().find(|&&v| !(v > 0.0)) {
                    return Err(Error::DomainViolation(format!(
                        "entropy divergence needs a positive second argument, found {v}"
                    )));
                }
                Ok(x
                    .iter()
                    .zip(y)
                    .map(|(&a, &b)| xlogy(a, a) - xlogy(a, b) - a + b)
                    .sum())
            }
        }
    }

    /// `argmin_z { weight <grad, z> + V_h(z, anchor) }` over the set.
    pub fn mirror_step(&self, anchor: &[f64], grad: &[f64], weight: f64) -> Result<Vec<f64>> {
        self.relaxed_mirror_step(anchor, anchor, grad, weight, 1.0)
    }

    /// `argmin_z { theta (weight <grad, z> + V_h(z, anchor)) + (1 - theta) V_h(z, current) }`.
    ///
    /// With `theta = 1` this is the plain mirror step; smaller values pull the
    /// result toward `current`, which damps fixed-point iterations built on it.
    pub fn relaxed_mirror_step(
        &self,
        anchor: &[f64],
        current: &[f64],
        grad: &[f64],
        weight: f64,
        theta: f64,
    ) -> Result<Vec<f64>> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mirror step weight must be nonnegative, got {weight}"
            )));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("relaxation {theta} not in (0, 1]")));
        }
        for p in [anchor, current] {
            if !self.contains(p) {
                return Err(Error::DomainViolation("mirror step anchor is outside the set".into()));
            }
        }
        if grad.len() != anchor.len() || !grad.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("gradient must be finite with matching dimension".into()));
        }
        let wa = self.mirror_map(anchor)?.0;
        let target: Vec<f64> = wa.iter().zip(grad).map(|(w, g)| w - weight * g).collect();
        let dual = if theta == 1.0 {
            target
        } else {
            combine(theta, &target, 1.0 - theta, &self.mirror_map(current)?.0)
        };
        match self.kind {
            GeometryKind::SquaredEuclidean { .. } => Ok(self.project(&dual)),
            GeometryKind::NegativeEntropy { .. } => self.inverse_mirror(&DualPoint(dual)),
        }
    }

    /// Euclidean projection onto the outer set.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        project_onto(self.outer_set(), x)
    }

    /// Random point of the set in `n` dimensions: uniform in the ball, or
    /// Dirichlet(1) on the simplex mixed toward the barycenter so every entry
    /// is at least [`SIMPLEX_SHRINK`]. For the simplex `n` is its own dimension.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        match self.kind {
            GeometryKind::SquaredEuclidean { radius } => sample_ball(rng, n, radius),
            GeometryKind::NegativeEntropy { dim } => sample_simplex(rng, dim),
        }
    }
}

fn sample_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&dir);
        if len > 1e-12 {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / n as f64);
            return dir.iter().map(|d| d * r / len).collect();
        }
    }
}

fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    let eps = SIMPLEX_SHRINK;
    let scale = 1.0 - dim as f64 * eps;
    let x: Vec<f64> = e.iter().map(|v| eps + scale * v / total).collect();
    let sum: f64 = x.iter().sum();
    x.iter().map(|v| v / sum).collect()
}

/// Euclidean projection onto a ball or simplex.
pub fn project_onto(set: OuterSet, x: &[f64]) -> Vec<f64> {
    match set {
        OuterSet::EuclideanBall { radius } => {
            let len = norm(x);
            if len <= radius {
                x.to_vec()
            } else {
                x.iter().map(|v| v * (radius / len)).collect()
            }
        }
        OuterSet::Simplex { .. } => project_simplex(x),
    }
}

/// Sort-based Euclidean projection onto the probability simplex.
fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            shift = t;
        }
    }
    let mut p: Vec<f64> = x.iter().map(|v| (v - shift).max(0.0)).collect();
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        p.iter_mut().for_each(|v| *v /= sum);
    }
    p
}

fn softmax(w: &[f64]) -> Vec<f64> {
    let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

fn check_nonnegative(x: &[f64]) -> Result<()> {
    match x.iter().find(|&&v| !(v >= 0.0)) {
        Some(v) => Err(Error::DomainViolation(format!(
            "entropy needs nonnegative entries, found {v}"
        ))),
        None => Ok(()),
    }
}

/// `a log b` with the convention `0 log b = 0`.
fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}
