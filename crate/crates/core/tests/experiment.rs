use std::fs;

use barrierflow::experiment::{execute, preset, run_experiment, sweep, ExperimentConfig, ExperimentRecord};
use barrierflow::trajectory::Termination;

fn preset_run(name: &str) -> ExperimentConfig {
    preset(name).unwrap().runs.remove(0)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn euclidean_preset_converges_to_the_solution() {
    let (_, rec) = execute(&preset_run("fig5.1-euclidean")).unwrap();
    let rec = rec.iterations().unwrap();
    assert!(rec.rows.len() <= 501);
    assert!(dist(&rec.last().x, &[0.0, 1.0]) <= 1e-2, "{:?}", rec.last().x);
}

#[test]
fn zero_iterations_writes_the_initial_row_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        max_iters: 0,
        output: dir.path().join("run"),
        ..preset_run("fig5.1-euclidean")
    };
    let out = run_experiment(&cfg).unwrap();
    let csv = fs::read_to_string(out.dir.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(csv.starts_with("k,x0,x1,y0,y1,z0,z1,f_gap,phi_gap,g_max,slack,A_k,lyapunov,grad_norm,damping_events"));
    assert!(out.dir.join("config.resolved").exists());
    assert!(out.dir.join("plot.gp").exists());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_experiment(&ExperimentConfig {
        output: dir.path().join("a"),
        ..preset_run("fig5.1-entropy")
    })
    .unwrap();
    let text = fs::read_to_string(first.dir.join("config.resolved")).unwrap();
    let mut again = ExperimentConfig::parse(&text).unwrap();
    assert_eq!(again, first.config);
    again.output = dir.path().join("b");
    let second = run_experiment(&again).unwrap();
    let a = fs::read(first.dir.join("trajectory.csv")).unwrap();
    let b = fs::read(second.dir.join("trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failing_run_keeps_its_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        fp_max: 1,
        output: dir.path().join("run"),
        ..preset_run("agm1-exp")
    };
    let out = run_experiment(&cfg).unwrap();
    assert!(
        matches!(out.record.termination(), Termination::Failed(_)),
        "{:?}",
        out.record.termination()
    );
    let csv = fs::read_to_string(out.dir.join("trajectory.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
}

#[test]
fn larger_schedule_scale_needs_no_more_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let template = ExperimentConfig {
        output: dir.path().to_path_buf(),
        ..preset_run("fig5.3-scale")
    };
    let rows = sweep(&template, "scale", &[0.05, 0.1, 0.2]).unwrap();
    let iters: Vec<usize> = rows.iter().map(|r| r.iterations_to_tol.unwrap()).collect();
    assert!(iters.windows(2).all(|w| w[1] <= w[0]), "{iters:?}");
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(dir.path().join("scale-0.05").join("trajectory.csv").exists());
}

#[test]
fn empty_sweep_writes_a_header_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let template = ExperimentConfig {
        output: dir.path().to_path_buf(),
        ..preset_run("fig5.3-scale")
    };
    assert!(sweep(&template, "scale", &[]).unwrap().is_empty());
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.trim(), "value,iterations_to_tol,final_gap,error");
}

#[test]
fn sweep_records_bad_values_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let template = ExperimentConfig {
        output: dir.path().to_path_buf(),
        ..preset_run("fig5.3-scale")
    };
    let rows = sweep(&template, "eta", &[-1.0, 0.25]).unwrap();
    assert!(rows[0].error.as_deref().unwrap().contains("eta"), "{:?}", rows[0]);
    assert!(rows[1].error.is_none());
    assert!(sweep(&template, "algorithm", &[1.0]).is_err());
}

#[test]
fn every_preset_runs_cleanly() {
    for name in barrierflow::experiment::PRESET_NAMES {
        for cfg in preset(name).unwrap().runs {
            let (_, rec) = execute(&cfg).unwrap();
            assert!(rec.error().is_none(), "{name}: {:?}", rec.termination());
            if let ExperimentRecord::Dynamics(r) = &rec {
                assert_eq!(r.termination, Termination::EndTime, "{name}");
            }
        }
    }
}
