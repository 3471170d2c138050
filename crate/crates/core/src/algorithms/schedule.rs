//! Weight sequences `A_k` and the step coefficients derived from them.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `A_k = (delta k)^(2p)`, starting at `k = 1`.
    PolyPower { p: f64 },
    /// `A_k = e^(2 delta k p)`.
    ExpRate { p: f64 },
    /// `A_0 = C`, `A_k = C k^2`.
    QuadC { scale: f64 },
    /// `A_k = sum_{i <= k} 1/(i+1)^2`, bounded by `pi^2/6`.
    HarmonicSq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSchedule {
    kind: ScheduleKind,
    delta: f64,
}

/// Coefficients of the step from `k` to `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWeights {
    pub a_k: f64,
    pub a_next: f64,
    /// `alpha_k = (A_{k+1} - A_k) / delta`
    pub alpha: f64,
    /// `tau_k = (A_{k+1} - A_k) / (delta A_k)`
    pub tau: f64,
    pub delta: f64,
}

impl StepWeights {
    /// `delta * alpha_k`, the mirror-step weight.
    pub fn delta_alpha(&self) -> f64 {
        self.a_next - self.a_k
    }

    /// `delta * tau_k`, the coupling weight.
    pub fn delta_tau(&self) -> f64 {
        (self.a_next - self.a_k) / self.a_k
    }
}

impl DiscreteSchedule {
    pub fn new(kind: ScheduleKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let ok = match kind {
            ScheduleKind::PolyPower { p } | ScheduleKind::ExpRate { p } => p > 0.0 && p.is_finite(),
            ScheduleKind::QuadC { scale } => scale > 0.0 && scale.is_finite(),
            ScheduleKind::HarmonicSq => true,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("schedule parameter must be positive: {kind:?}")));
        }
        Ok(Self { kind, delta })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::PolyPower { .. } => "poly-power",
            ScheduleKind::ExpRate { .. } => "exp-rate",
            ScheduleKind::QuadC { .. } => "quad-c",
            ScheduleKind::HarmonicSq => "harmonic-sq",
        }
    }

    /// First index at which `A_k > 0`.
    pub fn first_index(&self) -> usize {
        match self.kind {
            ScheduleKind::PolyPower { .. } => 1,
            _ => 0,
        }
    }

    pub fn weight(&self, k: usize) -> Result<f64> {
        if k < self.first_index() {
            return Err(Error::InvalidArgument(format!(
                "{} schedule starts at k = {}",
                self.name(),
                self.first_index()
            )));
        }
        let kf = k as f64;
        let a = match self.kind {
            ScheduleKind::PolyPower { p } => (self.delta * kf).powf(2.0 * p),
            ScheduleKind::ExpRate { p } => (2.0 * self.delta * kf * p).exp(),
            ScheduleKind::QuadC { scale } => scale * kf.max(1.0).powi(2),
            ScheduleKind::HarmonicSq => (0..=k).map(|i| 1.0 / ((i + 1) as f64).powi(2)).sum(),
        };
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Overflow(format!("A_{k} = {a} for the {} schedule", self.name())));
        }
        Ok(a)
    }

    pub fn weights(&self, k: usize) -> Result<StepWeights> {
        let a_k = self.weight(k)?;
        let a_next = self.weight(k + 1)?;
        let diff = a_next - a_k;
        Ok(StepWeights {
            a_k,
            a_next,
            alpha: diff / self.delta,
            tau: diff / (self.delta * a_k),
            delta: self.delta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn harmonic_first_step() {
        let s = DiscreteSchedule::new(ScheduleKind::HarmonicSq, 1.0).unwrap();
        let w = s.weights(0).unwrap();
        assert_eq!(w.a_k, 1.0);
        assert_eq!(w.a_next, 1.25);
        assert_eq!(w.delta_alpha(), 0.25);
        assert_eq!(w.delta_tau(), 0.25);
    }

    #[test]
    fn quad_first_step_is_flat() {
        let s = DiscreteSchedule::new(ScheduleKind::QuadC { scale: 0.1 }, 1.0).unwrap();
        let w = s.weights(0).unwrap();
        assert_eq!((w.a_k, w.a_next, w.alpha, w.tau), (0.1, 0.1, 0.0, 0.0));
        // Extrapolating coupling for small k: (2k+1)/k^2.
        assert_abs_diff_eq!(s.weights(1).unwrap().delta_tau(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.weights(2).unwrap().delta_tau(), 1.25, epsilon = 1e-15);
    }

    #[test]
    fn poly_power_starts_at_one() {
        let s = DiscreteSchedule::new(ScheduleKind::PolyPower { p: 1.0 }, 0.5).unwrap();
        assert_eq!(s.first_index(), 1);
        assert!(s.weight(0).is_err());
        assert_abs_diff_eq!(s.weight(1).unwrap(), 0.25);
    }

    #[test]
    fn exp_rate_overflow_is_reported() {
        let s = DiscreteSchedule::new(ScheduleKind::ExpRate { p: 1.0 }, 0.1).unwrap();
        assert_abs_diff_eq!(s.weight(10).unwrap(), 2f64.exp(), epsilon = 1e-12);
        assert!(matches!(s.weight(10_000), Err(Error::Overflow(_))));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DiscreteSchedule::new(ScheduleKind::HarmonicSq, 0.0).is_err());
        assert!(DiscreteSchedule::new(ScheduleKind::ExpRate { p: -1.0 }, 1.0).is_err());
        assert!(DiscreteSchedule::new(ScheduleKind::QuadC { scale: 0.0 }, 1.0).is_err());
    }
}
