//! Per-step logs of a run and their CSV form.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! files are byte-identical for identical runs. Missing values are empty cells.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::BarrierMode;

/// How a run ended. Mid-run failures keep the rows produced so far.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// The stopping rule fired.
    Converged,
    /// `max_iters` steps were taken.
    IterationLimit,
    /// The integration window was covered.
    EndTime,
    Failed(Error),
}

/// Reference solutions the gaps are measured against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceValues {
    /// Barrier minimizer at the initial barrier.
    pub xhat: Option<Vec<f64>>,
    pub phi_hat: Option<f64>,
    pub xstar: Option<Vec<f64>>,
    pub fstar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    /// Resolved configuration, empty when the run did not come from a config.
    pub config: Vec<(String, String)>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub reference: ReferenceValues,
    pub barrier_mode: BarrierMode,
    /// Discrete step size, absent for continuous runs.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<R> {
    pub meta: RunMetadata,
    pub rows: Vec<R>,
    pub termination: Termination,
}

impl<R> TrajectoryRecord<R> {
    pub fn error(&self) -> Option<&Error> {
        match &self.termination {
            Termination::Failed(e) => Some(e),
            _ => None,
        }
    }

    pub fn last(&self) -> &R {
        self.rows.last().expect("a record always holds its initial row")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub phi_gap: Option<f64>,
    pub f_gap: Option<f64>,
    pub g_max: f64,
    pub slack: f64,
    /// Energy against the most recent barrier minimizer.
    pub lyapunov: Option<f64>,
    /// Energy against the barrier minimizer of the initial time.
    pub lyapunov_frozen: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub k: usize,
    pub x: Vec<f64>,
    /// Gradient-step sequence; equal to `x` for methods without one.
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub f_gap: Option<f64>,
    pub phi_gap: Option<f64>,
    pub g_max: f64,
    pub slack: f64,
    pub a_k: f64,
    pub lyapunov: Option<f64>,
    pub grad_norm: Option<f64>,
    pub damping_events: usize,
}

pub trait CsvRow {
    fn header(dim: usize) -> Vec<String>;
    fn cells(&self) -> Vec<String>;
    fn dim(&self) -> usize;
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn indexed(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (0..dim).map(move |i| format!("{prefix}{i}"))
}

impl CsvRow for DynamicsRow {
    fn header(dim: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend(indexed("x", dim));
        h.extend(indexed("z", dim));
        h.extend(
            ["phi_gap", "f_gap", "g_max", "slack", "lyapunov"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }

    fn cells(&self) -> Vec<String> {
        let mut c = vec![fmt_float(self.t)];
        c.extend(self.x.iter().map(|v| fmt_float(*v)));
        c.extend(self.z.iter().map(|v| fmt_float(*v)));
        c.push(fmt_opt(self.phi_gap));
        c.push(fmt_opt(self.f_gap));
        c.push(fmt_float(self.g_max));
        c.push(fmt_float(self.slack));
        c.push(fmt_opt(self.lyapunov));
        c
    }

    fn dim(&self) -> usize {
        self.x.len()
    }
}

impl CsvRow for IterationRow {
    fn header(dim: usize) -> Vec<String> {
        let mut h = vec!["k".to_string()];
        h.extend(indexed("x", dim));
        h.extend(indexed("y", dim));
        h.extend(indexed("z", dim));
        h.extend(
            [
                "f_gap",
                "phi_gap",
                "g_max",
                "slack",
                "A_k",
                "lyapunov",
                "grad_norm",
                "damping_events",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        h
    }

    fn cells(&self) -> Vec<String> {
        let mut c = vec![self.k.to_string()];
        c.extend(self.x.iter().map(|v| fmt_float(*v)));
        c.extend(self.y.iter().map(|v| fmt_float(*v)));
        c.extend(self.z.iter().map(|v| fmt_float(*v)));
        c.push(fmt_opt(self.f_gap));
        c.push(fmt_opt(self.phi_gap));
        c.push(fmt_float(self.g_max));
        c.push(fmt_float(self.slack));
        c.push(fmt_float(self.a_k));
        c.push(fmt_opt(self.lyapunov));
        c.push(fmt_opt(self.grad_norm));
        c.push(self.damping_events.to_string());
        c
    }

    fn dim(&self) -> usize {
        self.x.len()
    }
}

pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W) -> Result<()> {
    let dim = rows.first().map(|r| r.dim()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header(dim))?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<R: CsvRow>(rows: &[R], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub(crate) fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}
