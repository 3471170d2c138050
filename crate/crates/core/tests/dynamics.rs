use barrierflow::dynamics::{integrate_with, ContinuousSchedule, IntegrationOptions};
use barrierflow::geometry::MirrorGeometry;
use barrierflow::problem::{builtin, BarrierMode, BarrierParams, ConvexProblem, OuterSet, PAPER_QUADRATIC};
use barrierflow::trajectory::{DynamicsRow, Termination, TrajectoryRecord};

fn ball() -> (ConvexProblem, MirrorGeometry) {
    (
        builtin(PAPER_QUADRATIC, OuterSet::EuclideanBall { radius: 3.0 }).unwrap(),
        MirrorGeometry::euclidean_ball(3.0).unwrap(),
    )
}

fn fixed(c: f64, s: f64) -> BarrierMode {
    BarrierMode::Fixed(BarrierParams::new(c, s).unwrap())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn assert_energy_nonincreasing(rec: &TrajectoryRecord<DynamicsRow>) {
    let energy: Vec<f64> = rec.rows.iter().map(|r| r.lyapunov_frozen.unwrap()).collect();
    let slack = 1e-6 * energy[0].max(1.0);
    for (i, w) in energy.windows(2).enumerate() {
        assert!(w[1] <= w[0] + slack, "energy rose at row {i}: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn fixed_barrier_energy_decreases_from_several_starts() {
    let (p, g) = ball();
    let schedule = ContinuousSchedule::exponential(1.0).unwrap();
    let opts = IntegrationOptions {
        record_every: 5,
        ..Default::default()
    };
    for start in [[1.0, 0.0], [-1.0, -1.0], [0.5, 1.2], [2.0, 2.0]] {
        let rec = integrate_with(&start, &schedule, &fixed(1.0, 1.0), &g, &p, 0.0, 3.0, 1e-3, &opts).unwrap();
        assert_eq!(rec.termination, Termination::EndTime);
        assert_energy_nonincreasing(&rec);
    }
}

#[test]
fn polynomial_schedule_energy_decreases() {
    let (p, g) = ball();
    let schedule = ContinuousSchedule::polynomial(1.0).unwrap();
    let rec = integrate_with(
        &[1.0, 0.0],
        &schedule,
        &fixed(1.0, 1.0),
        &g,
        &p,
        1.0,
        20.0,
        1e-3,
        &IntegrationOptions::default(),
    )
    .unwrap();
    assert_energy_nonincreasing(&rec);
    assert!(rec.last().phi_gap.unwrap() < rec.rows[0].phi_gap.unwrap());
}

#[test]
fn scheduled_flow_reaches_the_constrained_minimizer() {
    let (p, g) = ball();
    let schedule = ContinuousSchedule::exponential(1.0).unwrap();
    let opts = IntegrationOptions {
        record_every: 100,
        ..Default::default()
    };
    let rec = integrate_with(&[0.0, 1.5], &schedule, &BarrierMode::Scheduled, &g, &p, 0.0, 10.0, 2e-5, &opts).unwrap();
    assert_eq!(rec.termination, Termination::EndTime);
    let end = rec.last();
    assert!(dist(&end.x, &[0.0, 1.0]) <= 1e-2, "ended at {:?}", end.x);
    for row in &rec.rows {
        assert!(row.g_max < row.slack, "t = {}: g = {} >= s = {}", row.t, row.g_max, row.slack);
    }
}

#[test]
fn entropy_flow_stays_on_the_simplex() {
    let p = builtin(PAPER_QUADRATIC, OuterSet::Simplex { dim: 2 }).unwrap();
    let g = MirrorGeometry::neg_entropy(2).unwrap();
    let schedule = ContinuousSchedule::exponential(1.0).unwrap();
    let rec = integrate_with(
        &[0.5, 0.5],
        &schedule,
        &fixed(1.0, 1.0),
        &g,
        &p,
        0.0,
        5.0,
        1e-3,
        &IntegrationOptions::default(),
    )
    .unwrap();
    for row in &rec.rows {
        assert!(row.x.iter().all(|v| *v >= 0.0));
        assert!((row.x.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "t = {}: {:?}", row.t, row.x);
    }
    assert_energy_nonincreasing(&rec);
}

#[test]
fn start_outside_the_barrier_domain_is_rejected() {
    let (p, g) = ball();
    let schedule = ContinuousSchedule::exponential(1.0).unwrap();
    // g(-1, 1) = 1 exceeds the slack 0.5.
    let res = integrate_with(
        &[-1.0, 1.0],
        &schedule,
        &fixed(1.0, 0.5),
        &g,
        &p,
        0.0,
        1.0,
        1e-3,
        &IntegrationOptions::default(),
    );
    assert!(res.is_err());
}
