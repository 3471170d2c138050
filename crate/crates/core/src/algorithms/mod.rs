//! Discrete methods: the implicit accelerated method (AGM1), the accelerated
//! method with an extra gradient sequence (AGM2) and the plain gradient
//! method (GM), plus their driver and Lyapunov audit.

mod driver;
mod schedule;
mod steps;

use std::fmt;
use std::str::FromStr;

pub use driver::{iterations_to_tol, lyapunov_series, run, LyapunovSeries};
pub use schedule::{DiscreteSchedule, ScheduleKind, StepWeights};
pub use steps::{agm1_step, agm2_step, gm_step, StepContext, StepReport};

use crate::error::{Error, Result};
use crate::problem::{BarrierMode, BarrierParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Agm1,
    Agm2,
    Gm,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Agm1 => "agm1",
            Algorithm::Agm2 => "agm2",
            Algorithm::Gm => "gm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agm1" => Ok(Algorithm::Agm1),
            "agm2" => Ok(Algorithm::Agm2),
            "gm" => Ok(Algorithm::Gm),
            other => Err(Error::config("algorithm", format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How AGM2 picks its gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Always `eta`.
    Constant,
    /// `min(eta, 1 / (max(k, 1) L))`, with the schedule scale capped at `mu / (4 L)`.
    Theory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Objective gap to the true minimum.
    FunctionGap,
    /// Norm of the barrier gradient at `x_k`.
    GradientNorm,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    pub eta: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub stop_rule: StopRule,
    pub stop_tol: f64,
    pub barrier_mode: BarrierMode,
    /// Implicit-step tolerance and iteration cap (AGM1).
    pub fp_tol: f64,
    pub fp_max: usize,
    pub oracle_tol: f64,
    /// Scheduled mode: recompute the barrier minimizer every this many rows.
    pub refresh_every: usize,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            eta: 0.25,
            step_rule: StepRule::Constant,
            max_iters: 10_000,
            stop_rule: StopRule::FunctionGap,
            stop_tol: 1e-2,
            barrier_mode: BarrierMode::Scheduled,
            fp_tol: 1e-10,
            fp_max: 200,
            oracle_tol: 1e-10,
            refresh_every: 1,
        }
    }
}

impl AlgorithmParams {
    pub fn eta_at(&self, k: usize, smoothness: f64) -> f64 {
        match self.step_rule {
            StepRule::Constant => self.eta,
            StepRule::Theory => self.eta.min(1.0 / (k.max(1) as f64 * smoothness)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("eta", self.eta)?;
        positive("stop_tol", self.stop_tol)?;
        positive("fp_tol", self.fp_tol)?;
        positive("oracle_tol", self.oracle_tol)?;
        if self.fp_max == 0 || self.refresh_every == 0 {
            return Err(Error::InvalidArgument("fp_max and refresh_every must be positive".into()));
        }
        if let BarrierMode::Fixed(p) = self.barrier_mode {
            BarrierParams::new(p.c, p.s)?;
        }
        Ok(())
    }
}

/// Iterate of a discrete method; `y` is present only for AGM2.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub z: Vec<f64>,
    /// Barrier used by the step out of `k`.
    pub barrier: BarrierParams,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_step_caps_eta() {
        let p = AlgorithmParams {
            eta: 0.25,
            step_rule: StepRule::Theory,
            ..Default::default()
        };
        assert_eq!(p.eta_at(0, 3.0), 0.25);
        assert_eq!(p.eta_at(2, 3.0), 1.0 / 6.0);
        let c = AlgorithmParams::default();
        assert_eq!(c.eta_at(100, 3.0), 0.25);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Agm1, Algorithm::Agm2, Algorithm::Gm] {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("agm3".parse::<Algorithm>().is_err());
    }
}
