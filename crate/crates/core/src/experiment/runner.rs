//! Executes configs, writes run directories and runs parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, NUMERIC_KEYS};
use super::plot::plot_script;
use crate::algorithms::{iterations_to_tol, run};
use crate::dynamics::integrate_with;
use crate::error::{Error, Result};
use crate::trajectory::{
    fmt_float, write_csv_file, DynamicsRow, IterationRow, Termination, TrajectoryRecord,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentRecord {
    Iterations(TrajectoryRecord<IterationRow>),
    Dynamics(TrajectoryRecord<DynamicsRow>),
}

impl ExperimentRecord {
    pub fn termination(&self) -> &Termination {
        match self {
            ExperimentRecord::Iterations(r) => &r.termination,
            ExperimentRecord::Dynamics(r) => &r.termination,
        }
    }

    pub fn error(&self) -> Option<&Error> {
        match self.termination() {
            Termination::Failed(e) => Some(e),
            _ => None,
        }
    }

    /// Objective gap of the last row, or the barrier gap when no reference exists.
    pub fn final_gap(&self) -> Option<f64> {
        match self {
            ExperimentRecord::Iterations(r) => r.last().f_gap.or(r.last().phi_gap),
            ExperimentRecord::Dynamics(r) => r.last().f_gap.or(r.last().phi_gap),
        }
    }

    pub fn iterations(&self) -> Option<&TrajectoryRecord<IterationRow>> {
        match self {
            ExperimentRecord::Iterations(r) => Some(r),
            ExperimentRecord::Dynamics(_) => None,
        }
    }

    pub fn dynamics(&self) -> Option<&TrajectoryRecord<DynamicsRow>> {
        match self {
            ExperimentRecord::Dynamics(r) => Some(r),
            ExperimentRecord::Iterations(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// The config with every `auto` value resolved.
    pub config: ExperimentConfig,
    pub record: ExperimentRecord,
    pub dir: PathBuf,
}

/// Runs a config in memory without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<(ExperimentConfig, ExperimentRecord)> {
    let cfg = cfg.resolve()?;
    let geometry = cfg.build_geometry()?;
    let problem = cfg.build_problem()?;
    let start = cfg.start_point()?;
    let mut record = match cfg.method()? {
        Method::Discrete(alg) => {
            let schedule = cfg.build_schedule()?;
            let params = cfg.build_params()?;
            ExperimentRecord::Iterations(run(alg, &problem, &geometry, &schedule, &params, &start)?)
        }
        Method::Dynamics => {
            let schedule = cfg.build_continuous_schedule()?;
            let t0 = cfg.t0.expect("resolved");
            ExperimentRecord::Dynamics(integrate_with(
                &start,
                &schedule,
                &cfg.barrier_mode()?,
                &geometry,
                &problem,
                t0,
                cfg.t1,
                cfg.dt,
                &cfg.integration_options(),
            )?)
        }
    };
    let entries = cfg.entries();
    match &mut record {
        ExperimentRecord::Iterations(r) => r.meta.config = entries,
        ExperimentRecord::Dynamics(r) => r.meta.config = entries,
    }
    Ok((cfg, record))
}

/// Runs a config and writes `trajectory.csv`, `config.resolved` and `plot.gp`
/// into its output directory. A run that fails midway still writes its rows;
/// the failure is reported through the record's termination.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (config, record) = execute(cfg)?;
    let dir = config.output.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let csv = dir.join("trajectory.csv");
    let dim = match &record {
        ExperimentRecord::Iterations(r) => {
            write_csv_file(&r.rows, &csv)?;
            r.last().x.len()
        }
        ExperimentRecord::Dynamics(r) => {
            write_csv_file(&r.rows, &csv)?;
            r.last().x.len()
        }
    };
    write(&dir.join("config.resolved"), &config.to_text())?;
    let is_dynamics = matches!(record, ExperimentRecord::Dynamics(_));
    write(&dir.join("plot.gp"), &plot_script(is_dynamics, dim))?;
    Ok(ExperimentOutput {
        config,
        record,
        dir,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub iterations_to_tol: Option<usize>,
    pub final_gap: Option<f64>,
    pub error: Option<String>,
}

/// One run per value of `param`, in parallel; each run writes into
/// `<output>/<param>-<value>` and the summary goes to `<output>/summary.csv`.
/// Failing runs are recorded in the summary instead of aborting the sweep.
pub fn sweep(template: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    if !NUMERIC_KEYS.contains(&param) {
        return Err(Error::config(param, "not a sweepable numeric key"));
    }
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| {
            let outcome = (|| {
                let mut cfg = template.clone();
                cfg.set(param, &fmt_float(value))?;
                cfg.output = template.output.join(format!("{param}-{}", fmt_float(value)));
                run_experiment(&cfg)
            })();
            match outcome {
                Ok(out) => SweepRow {
                    value,
                    iterations_to_tol: out.record.iterations().and_then(iterations_to_tol),
                    final_gap: out.record.final_gap(),
                    error: out.record.error().map(|e| e.to_string()),
                },
                Err(e) => SweepRow {
                    value,
                    iterations_to_tol: None,
                    final_gap: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    fs::create_dir_all(&template.output)
        .map_err(|e| Error::Io(format!("{}: {e}", template.output.display())))?;
    write_summary(&rows, &template.output.join("summary.csv"))?;
    Ok(rows)
}

fn write_summary(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value", "iterations_to_tol", "final_gap", "error"])?;
    for r in rows {
        w.write_record([
            fmt_float(r.value),
            r.iterations_to_tol.map(|n| n.to_string()).unwrap_or_default(),
            r.final_gap.map(fmt_float).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
