//! Named experiment presets reproducing the quadratic study.

use std::path::PathBuf;

use super::config::{ExperimentConfig, Start};
use crate::algorithms::{StepRule, StopRule};
use crate::error::{Error, Result};

/// A preset is one or more runs; multi-run presets write each run into a
/// subdirectory named after its algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub runs: Vec<ExperimentConfig>,
}

pub const PRESET_NAMES: &[&str] = &[
    "fig5.1-euclidean",
    "fig5.1-entropy",
    "fig5.2-tracking",
    "fig5.3-scale",
    "fig5.4-compare",
    "agm1-exp",
    "agm2-theory",
    "dyn-exp-fixed",
    "dyn-exp-scheduled",
    "dyn-poly-fixed",
];

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        output: PathBuf::from("out").join(name),
        ..ExperimentConfig::default()
    }
}

/// Scheduled AGM2 on the ball of radius 3 from a seeded random start.
fn euclidean(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        max_iters: 500,
        stop: StopRule::Never,
        ..base(name)
    }
}

fn dynamics(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        algorithm: "dynamics".into(),
        schedule: "exponential".into(),
        p: 1.0,
        ..base(name)
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    let (description, runs) = match name {
        "fig5.1-euclidean" => (
            "AGM2, squared Euclidean geometry on the radius-3 ball, eta = 1/4, C = 1/10",
            vec![euclidean(name)],
        ),
        "fig5.1-entropy" => (
            "AGM2, entropy geometry on the simplex, eta = 1/2, C = 2/3",
            vec![ExperimentConfig {
                geometry: "neg-entropy".into(),
                eta: 0.5,
                scale: Some(2.0 / 3.0),
                ..euclidean(name)
            }],
        ),
        "fig5.2-tracking" => (
            "AGM2 from a start that violates the constraint but lies inside the relaxed set",
            vec![ExperimentConfig {
                start: Start::Point(vec![-0.5, 2.0]),
                ..euclidean(name)
            }],
        ),
        "fig5.3-scale" => (
            "template for sweeping the schedule scale: AGM2 stopped at objective gap 1e-2",
            vec![ExperimentConfig {
                stop: StopRule::FunctionGap,
                stop_tol: 1e-2,
                ..base(name)
            }],
        ),
        "fig5.4-compare" => {
            let agm2 = ExperimentConfig {
                radius: 1.0,
                stop: StopRule::FunctionGap,
                stop_tol: 1e-2,
                output: PathBuf::from("out").join(name).join("agm2"),
                ..base(name)
            };
            let gm = ExperimentConfig {
                algorithm: "gm".into(),
                schedule: "harmonic-sq".into(),
                output: PathBuf::from("out").join(name).join("gm"),
                ..agm2.clone()
            };
            ("AGM2 against GM on the unit ball, both stopped at objective gap 1e-2", vec![agm2, gm])
        }
        "agm1-exp" => (
            "AGM1 with the exponential schedule under a fixed barrier",
            vec![ExperimentConfig {
                algorithm: "agm1".into(),
                schedule: "exp-rate".into(),
                p: 1.0,
                delta: 0.1,
                barrier: Some((1e4, 1e-4)),
                stop: StopRule::GradientNorm,
                stop_tol: 1e-12,
                max_iters: 300,
                fp_max: 100_000,
                ..base(name)
            }],
        ),
        "agm2-theory" => (
            "AGM2 with C = mu/(4L) and eta_k = 1/(kL) under a fixed barrier",
            vec![ExperimentConfig {
                scale: None,
                smoothness: None,
                eta: 1.0,
                step_rule: StepRule::Theory,
                barrier: Some((10.0, 0.1)),
                stop: StopRule::Never,
                max_iters: 500,
                ..base(name)
            }],
        ),
        "dyn-exp-fixed" => (
            "accelerated flow, exponential schedule, fixed barrier c = s = 1",
            vec![ExperimentConfig {
                barrier: Some((1.0, 1.0)),
                start: Start::Point(vec![1.0, 0.0]),
                t1: 7.0,
                dt: 1e-4,
                record_every: 10,
                ..dynamics(name)
            }],
        ),
        "dyn-exp-scheduled" => (
            "accelerated flow, exponential schedule, barrier tightening with time",
            vec![ExperimentConfig {
                start: Start::Point(vec![0.0, 1.5]),
                t1: 10.0,
                dt: 2e-5,
                record_every: 100,
                ..dynamics(name)
            }],
        ),
        "dyn-poly-fixed" => (
            "accelerated flow, polynomial schedule, fixed barrier c = s = 1",
            vec![ExperimentConfig {
                schedule: "polynomial".into(),
                barrier: Some((1.0, 1.0)),
                start: Start::Point(vec![1.0, 0.0]),
                t1: 50.0,
                dt: 1e-3,
                record_every: 10,
                ..dynamics(name)
            }],
        ),
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")),
            ))
        }
    };
    let name = PRESET_NAMES
        .iter()
        .find(|n| **n == name)
        .expect("matched above");
    Ok(Preset {
        name,
        description,
        runs,
    })
}
