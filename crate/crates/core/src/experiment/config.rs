//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algorithms::{
    Algorithm, AlgorithmParams, DiscreteSchedule, ScheduleKind, StepRule, StopRule,
};
use crate::dynamics::{ContinuousSchedule, IntegrationOptions};
use crate::error::{Error, Result};
use crate::geometry::MirrorGeometry;
use crate::problem::{
    builtin, estimate_barrier_smoothness, BarrierMode, BarrierParams, ConvexProblem, OuterSet,
    ProblemConstants,
};
use crate::trajectory::fmt_float;

/// Random starts are redrawn until they lie inside the initial barrier domain.
const START_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Random,
    Point(Vec<f64>),
}

/// What the run does: one of the discrete methods or the continuous flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Discrete(Algorithm),
    Dynamics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub geometry: String,
    pub radius: f64,
    pub mu: f64,
    /// `agm1`, `agm2`, `gm` or `dynamics`.
    pub algorithm: String,
    /// Discrete: `poly-power`, `exp-rate`, `quad-c`, `harmonic-sq`.
    /// Continuous: `exponential`, `polynomial`.
    pub schedule: String,
    pub p: f64,
    /// Scale of the `quad-c` schedule; `None` means `mu / (4 L)`.
    pub scale: Option<f64>,
    pub delta: f64,
    pub eta: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub stop: StopRule,
    pub stop_tol: f64,
    /// `None` for the scheduled barrier, `Some((c, s))` for a fixed one.
    pub barrier: Option<(f64, f64)>,
    pub fp_tol: f64,
    pub fp_max: usize,
    pub oracle_tol: f64,
    pub refresh_every: usize,
    /// Barrier smoothness estimate; `None` means estimate at the start point.
    pub smoothness: Option<f64>,
    pub seed: u64,
    pub start: Start,
    pub t0: Option<f64>,
    pub t1: f64,
    pub dt: f64,
    pub record_every: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "paper-quadratic".into(),
            geometry: "euclidean-ball".into(),
            radius: 3.0,
            mu: 1.0,
            algorithm: "agm2".into(),
            schedule: "quad-c".into(),
            p: 1.0,
            scale: Some(0.1),
            delta: 1.0,
            eta: 0.25,
            step_rule: StepRule::Constant,
            max_iters: 10_000,
            stop: StopRule::FunctionGap,
            stop_tol: 1e-2,
            barrier: None,
            fp_tol: 1e-10,
            fp_max: 200,
            oracle_tol: 1e-10,
            refresh_every: 1,
            smoothness: Some(3.0),
            seed: 42,
            start: Start::Random,
            t0: None,
            t1: 10.0,
            dt: 1e-3,
            record_every: 1,
            output: PathBuf::from("out"),
        }
    }
}

/// Keys in the order they are written.
pub const KEYS: &[&str] = &[
    "problem",
    "geometry",
    "radius",
    "mu",
    "algorithm",
    "schedule",
    "p",
    "scale",
    "delta",
    "eta",
    "step_rule",
    "max_iters",
    "stop",
    "stop_tol",
    "barrier",
    "barrier_c",
    "barrier_s",
    "fp_tol",
    "fp_max",
    "oracle_tol",
    "refresh_every",
    "smoothness",
    "seed",
    "start",
    "t0",
    "t1",
    "dt",
    "record_every",
    "output",
];

/// Keys that take a single number and can be swept.
pub const NUMERIC_KEYS: &[&str] = &[
    "radius",
    "mu",
    "p",
    "scale",
    "delta",
    "eta",
    "max_iters",
    "stop_tol",
    "barrier_c",
    "barrier_s",
    "fp_tol",
    "fp_max",
    "oracle_tol",
    "refresh_every",
    "smoothness",
    "seed",
    "t0",
    "t1",
    "dt",
    "record_every",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::config(key, format!("`{v}` is not a valid number")))
}

fn auto_or_num(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn fmt_auto(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_else(|| "auto".into())
}

fn parse_point(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "problem" => self.problem = v.into(),
            "geometry" => self.geometry = v.into(),
            "radius" => self.radius = num(key, v)?,
            "mu" => self.mu = num(key, v)?,
            "algorithm" => self.algorithm = v.into(),
            "schedule" => self.schedule = v.into(),
            "p" => self.p = num(key, v)?,
            "scale" => self.scale = auto_or_num(key, v)?,
            "delta" => self.delta = num(key, v)?,
            "eta" => self.eta = num(key, v)?,
            "step_rule" => {
                self.step_rule = match v {
                    "constant" => StepRule::Constant,
                    "theory" => StepRule::Theory,
                    _ => return Err(Error::config(key, format!("`{v}`: expected constant or theory"))),
                }
            }
            "max_iters" => self.max_iters = num(key, v)?,
            "stop" => {
                self.stop = match v {
                    "f-gap" => StopRule::FunctionGap,
                    "grad-norm" => StopRule::GradientNorm,
                    "never" => StopRule::Never,
                    _ => return Err(Error::config(key, format!("`{v}`: expected f-gap, grad-norm or never"))),
                }
            }
            "stop_tol" => self.stop_tol = num(key, v)?,
            "barrier" => {
                self.barrier = match v {
                    "scheduled" => None,
                    "fixed" => Some(self.barrier.unwrap_or((1.0, 1.0))),
                    _ => return Err(Error::config(key, format!("`{v}`: expected scheduled or fixed"))),
                }
            }
            "barrier_c" | "barrier_s" => {
                let x: f64 = num(key, v)?;
                let (mut c, mut s) = self.barrier.unwrap_or((1.0, 1.0));
                if key == "barrier_c" {
                    c = x;
                } else {
                    s = x;
                }
                self.barrier = Some((c, s));
            }
            "fp_tol" => self.fp_tol = num(key, v)?,
            "fp_max" => self.fp_max = num(key, v)?,
            "oracle_tol" => self.oracle_tol = num(key, v)?,
            "refresh_every" => self.refresh_every = num(key, v)?,
            "smoothness" => self.smoothness = auto_or_num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "start" => {
                self.start = if v == "random" {
                    Start::Random
                } else {
                    Start::Point(parse_point(key, v)?)
                }
            }
            "t0" => self.t0 = auto_or_num(key, v)?,
            "t1" => self.t1 = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "record_every" => self.record_every = num(key, v)?,
            "output" => self.output = PathBuf::from(v),
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Parses config text. Later keys override earlier ones; `barrier = scheduled`
    /// after `barrier_c`/`barrier_s` discards them.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Applies config text on top of the current values.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(&format!("line {}", n + 1), format!("expected key = value, got `{line}`"))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let (c, s) = self.barrier.unwrap_or((1.0, 1.0));
        Some(match key {
            "problem" => self.problem.clone(),
            "geometry" => self.geometry.clone(),
            "radius" => fmt_float(self.radius),
            "mu" => fmt_float(self.mu),
            "algorithm" => self.algorithm.clone(),
            "schedule" => self.schedule.clone(),
            "p" => fmt_float(self.p),
            "scale" => fmt_auto(self.scale),
            "delta" => fmt_float(self.delta),
            "eta" => fmt_float(self.eta),
            "step_rule" => match self.step_rule {
                StepRule::Constant => "constant".into(),
                StepRule::Theory => "theory".into(),
            },
            "max_iters" => self.max_iters.to_string(),
            "stop" => match self.stop {
                StopRule::FunctionGap => "f-gap".into(),
                StopRule::GradientNorm => "grad-norm".into(),
                StopRule::Never => "never".into(),
            },
            "stop_tol" => fmt_float(self.stop_tol),
            "barrier" => if self.barrier.is_some() { "fixed" } else { "scheduled" }.into(),
            "barrier_c" => fmt_float(c),
            "barrier_s" => fmt_float(s),
            "fp_tol" => fmt_float(self.fp_tol),
            "fp_max" => self.fp_max.to_string(),
            "oracle_tol" => fmt_float(self.oracle_tol),
            "refresh_every" => self.refresh_every.to_string(),
            "smoothness" => fmt_auto(self.smoothness),
            "seed" => self.seed.to_string(),
            "start" => match &self.start {
                Start::Random => "random".into(),
                Start::Point(p) => p.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(","),
            },
            "t0" => fmt_auto(self.t0),
            "t1" => fmt_float(self.t1),
            "dt" => fmt_float(self.dt),
            "record_every" => self.record_every.to_string(),
            "output" => self.output.display().to_string(),
            _ => return None,
        })
    }

    /// All keys and values, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .filter(|k| self.barrier.is_some() || !k.starts_with("barrier_"))
            .map(|k| (k.to_string(), self.get(k).expect("known key")))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn method(&self) -> Result<Method> {
        if self.algorithm == "dynamics" {
            Ok(Method::Dynamics)
        } else {
            self.algorithm.parse().map(Method::Discrete)
        }
    }

    fn outer_set(&self) -> Result<OuterSet> {
        match self.geometry.as_str() {
            "euclidean-ball" => Ok(OuterSet::EuclideanBall { radius: self.radius }),
            // Every built-in problem is two-dimensional.
            "neg-entropy" => Ok(OuterSet::Simplex { dim: 2 }),
            other => Err(Error::config(
                "geometry",
                format!("unknown geometry `{other}` (expected euclidean-ball or neg-entropy)"),
            )),
        }
    }

    pub fn build_geometry(&self) -> Result<MirrorGeometry> {
        let g = match self.outer_set()? {
            OuterSet::EuclideanBall { radius } => MirrorGeometry::euclidean_ball(radius),
            OuterSet::Simplex { dim } => MirrorGeometry::neg_entropy(dim),
        }
        .map_err(|e| Error::config("radius", e.to_string()))?;
        g.with_mu(self.mu).map_err(|e| Error::config("mu", e.to_string()))
    }

    /// The problem with the configured smoothness, which must already be resolved.
    pub fn build_problem(&self) -> Result<ConvexProblem> {
        let p = builtin(&self.problem, self.outer_set()?)?;
        match self.smoothness {
            Some(l) => {
                let c = p.constants();
                let constants = ProblemConstants::new(c.strong_convexity, c.smoothness, l)
                    .map_err(|e| Error::config("smoothness", e.to_string()))?;
                Ok(p.with_constants(constants))
            }
            None => Err(Error::config("smoothness", "unresolved `auto`; call resolve first")),
        }
    }

    pub fn barrier_mode(&self) -> Result<BarrierMode> {
        match self.barrier {
            None => Ok(BarrierMode::Scheduled),
            Some((c, s)) => BarrierParams::new(c, s)
                .map(BarrierMode::Fixed)
                .map_err(|e| Error::config("barrier_c", e.to_string())),
        }
    }

    pub fn build_schedule(&self) -> Result<DiscreteSchedule> {
        let kind = match self.schedule.as_str() {
            "poly-power" => ScheduleKind::PolyPower { p: self.p },
            "exp-rate" => ScheduleKind::ExpRate { p: self.p },
            "quad-c" => ScheduleKind::QuadC {
                scale: self
                    .scale
                    .ok_or_else(|| Error::config("scale", "unresolved `auto`; call resolve first"))?,
            },
            "harmonic-sq" => ScheduleKind::HarmonicSq,
            other => {
                return Err(Error::config(
                    "schedule",
                    format!("`{other}` is not a discrete schedule (poly-power, exp-rate, quad-c, harmonic-sq)"),
                ))
            }
        };
        DiscreteSchedule::new(kind, self.delta).map_err(|e| Error::config("schedule", e.to_string()))
    }

    pub fn build_continuous_schedule(&self) -> Result<ContinuousSchedule> {
        match self.schedule.as_str() {
            "exponential" => ContinuousSchedule::exponential(self.p),
            "polynomial" => ContinuousSchedule::polynomial(self.p),
            other => {
                return Err(Error::config(
                    "schedule",
                    format!("`{other}` is not a continuous schedule (exponential, polynomial)"),
                ))
            }
        }
        .map_err(|e| Error::config("p", e.to_string()))
    }

    pub fn build_params(&self) -> Result<AlgorithmParams> {
        let params = AlgorithmParams {
            eta: self.eta,
            step_rule: self.step_rule,
            max_iters: self.max_iters,
            stop_rule: self.stop,
            stop_tol: self.stop_tol,
            barrier_mode: self.barrier_mode()?,
            fp_tol: self.fp_tol,
            fp_max: self.fp_max,
            oracle_tol: self.oracle_tol,
            refresh_every: self.refresh_every,
        };
        params.validate().map_err(|e| Error::config("params", e.to_string()))?;
        Ok(params)
    }

    pub fn integration_options(&self) -> IntegrationOptions {
        IntegrationOptions {
            refresh_every: self.refresh_every,
            oracle_tol: self.oracle_tol,
            record_every: self.record_every,
            ..IntegrationOptions::default()
        }
    }

    /// Slack of the barrier in force at the first step.
    fn initial_slack(&self) -> Result<f64> {
        let weight = match self.method()? {
            Method::Dynamics => {
                let s = self.build_continuous_schedule()?;
                s.exp_beta(self.t0.unwrap_or(s.default_start()))
            }
            Method::Discrete(_) => match self.barrier {
                Some((_, s)) => return Ok(s),
                None => {
                    let s = self.build_schedule()?;
                    s.weight(s.first_index())?
                }
            },
        };
        Ok(self.barrier_mode()?.params_for_weight(weight)?.s)
    }

    /// Start point: the configured one, or seeded draws from the set until one
    /// lies strictly inside the initial barrier domain.
    pub fn start_point(&self) -> Result<Vec<f64>> {
        match &self.start {
            Start::Point(p) => Ok(p.clone()),
            Start::Random => {
                let geometry = self.build_geometry()?;
                let problem = builtin(&self.problem, self.outer_set()?)?;
                let slack = self.initial_slack()?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                for _ in 0..START_DRAWS {
                    let x = geometry.sample(&mut rng, problem.dim());
                    if slack - problem.g_max(&x) > 0.0 {
                        return Ok(x);
                    }
                }
                Err(Error::config("start", "no random draw landed inside the barrier domain"))
            }
        }
    }

    /// Replaces `auto` entries by concrete values so the written config
    /// reproduces the run exactly.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut out = self.clone();
        let method = self.method()?;
        if let (Some(l), None) = (out.smoothness, out.scale) {
            out.scale = Some(out.mu / (4.0 * l));
        }
        if out.smoothness.is_none() {
            let problem = builtin(&out.problem, out.outer_set()?)?;
            let start = out.start_point()?;
            let barrier = match method {
                Method::Dynamics => {
                    let s = out.build_continuous_schedule()?;
                    out.barrier_mode()?
                        .params_for_weight(s.exp_beta(out.t0.unwrap_or(s.default_start())))?
                }
                Method::Discrete(_) => match out.barrier_mode()? {
                    BarrierMode::Fixed(p) => p,
                    BarrierMode::Scheduled => {
                        let s = out.build_schedule()?;
                        BarrierMode::Scheduled.params_for_weight(s.weight(s.first_index())?)?
                    }
                },
            };
            let l = estimate_barrier_smoothness(&problem, barrier, &start)
                .map_err(|e| Error::config("smoothness", e.to_string()))?;
            out.smoothness = Some(l);
            if out.scale.is_none() {
                out.scale = Some(out.mu / (4.0 * l));
            }
        }
        if out.t0.is_none() && method == Method::Dynamics {
            out.t0 = Some(out.build_continuous_schedule()?.default_start());
        }
        Ok(out)
    }
}
