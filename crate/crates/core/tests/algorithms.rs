use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use barrierflow::algorithms::{
    agm1_step, agm2_step, lyapunov_series, run, Algorithm, AlgorithmParams, DiscreteSchedule,
    IterateState, ScheduleKind, StepContext, StopRule,
};
use barrierflow::geometry::MirrorGeometry;
use barrierflow::oracle::solve_barrier;
use barrierflow::problem::{builtin, BarrierMode, BarrierObjective, BarrierParams, ConvexProblem, OuterSet, PAPER_QUADRATIC};
use barrierflow::rates::{fit_rate, RateModel};
use barrierflow::trajectory::{IterationRow, TrajectoryRecord};

fn ball(radius: f64) -> (ConvexProblem, MirrorGeometry) {
    (
        builtin(PAPER_QUADRATIC, OuterSet::EuclideanBall { radius }).unwrap(),
        MirrorGeometry::euclidean_ball(radius).unwrap(),
    )
}

fn simplex() -> (ConvexProblem, MirrorGeometry) {
    (
        builtin(PAPER_QUADRATIC, OuterSet::Simplex { dim: 2 }).unwrap(),
        MirrorGeometry::neg_entropy(2).unwrap(),
    )
}

fn fixed_params(c: f64, s: f64, max_iters: usize) -> AlgorithmParams {
    AlgorithmParams {
        barrier_mode: BarrierMode::Fixed(BarrierParams::new(c, s).unwrap()),
        stop_rule: StopRule::Never,
        max_iters,
        ..Default::default()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn xhat(p: &ConvexProblem, g: &MirrorGeometry, c: f64, s: f64) -> Vec<f64> {
    solve_barrier(p, g, c, s, 1e-12).unwrap().point
}

#[test]
fn agm1_first_step_lowers_the_energy() {
    let (p, g) = ball(3.0);
    let sched = DiscreteSchedule::new(ScheduleKind::ExpRate { p: 1.0 }, 0.1).unwrap();
    let rec = run(Algorithm::Agm1, &p, &g, &sched, &fixed_params(10.0, 0.1, 1), &[1.0, 0.0]).unwrap();
    let e = lyapunov_series(&rec, Algorithm::Agm1, &g, &p, &xhat(&p, &g, 10.0, 0.1)).unwrap();
    assert_eq!(e.energy.len(), 2);
    assert!(e.energy[1] <= e.energy[0], "{:?}", e.energy);
}

#[test]
fn agm1_returns_a_solution_of_the_implicit_equations() {
    let (p, g) = ball(3.0);
    let sched = DiscreteSchedule::new(ScheduleKind::ExpRate { p: 1.0 }, 0.1).unwrap();
    let barrier = BarrierParams::new(10.0, 0.1).unwrap();
    let ctx = StepContext {
        problem: &p,
        geometry: &g,
        schedule: &sched,
        mode: BarrierMode::Fixed(barrier),
    };
    let obj = BarrierObjective::new(&p, barrier);
    let fp_tol = 1e-10;
    let mut state = IterateState {
        k: 0,
        x: vec![1.0, 0.0],
        y: None,
        z: vec![1.0, 0.0],
        barrier,
    };
    for _ in 0..40 {
        let w = sched.weights(state.k).unwrap();
        let next = agm1_step(&state, &ctx, fp_tol, 10_000).unwrap().state;
        let (dalpha, dtau) = (w.delta_alpha(), w.delta_tau());
        let coupled: Vec<f64> = (0..2).map(|i| (dtau * next.z[i] + state.x[i]) / (1.0 + dtau)).collect();
        assert!(dist(&next.x, &coupled) <= 10.0 * fp_tol, "k = {}: coupling", state.k);
        let stepped = g.mirror_step(&state.z, &obj.gradient(&next.x).unwrap(), dalpha).unwrap();
        let miss = dist(&next.z, &stepped);
        assert!(miss <= 10.0 * fp_tol, "k = {}: mirror line off by {miss:e}", state.k);
        state = next;
    }
}

#[test]
fn agm1_energy_is_monotone_from_random_starts() {
    let (p, g) = ball(3.0);
    let sched = DiscreteSchedule::new(ScheduleKind::ExpRate { p: 1.0 }, 0.1).unwrap();
    let target = xhat(&p, &g, 1.0, 1.0);
    let obj = BarrierObjective::new(&p, BarrierParams::new(1.0, 1.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut runs = 0;
    while runs < 8 {
        let start = g.sample(&mut rng, 2);
        if !obj.in_domain(&start) {
            continue;
        }
        runs += 1;
        let params = AlgorithmParams {
            stop_rule: StopRule::GradientNorm,
            stop_tol: 1e-12,
            ..fixed_params(1.0, 1.0, 100)
        };
        let rec = run(Algorithm::Agm1, &p, &g, &sched, &params, &start).unwrap();
        let e = lyapunov_series(&rec, Algorithm::Agm1, &g, &p, &target).unwrap();
        let slack = 1e-9 * e.energy[0].max(1.0);
        for (k, w) in e.energy.windows(2).enumerate() {
            assert!(w[1] <= w[0] + slack, "start {start:?}, k = {k}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn gm_energy_residual_is_bounded_by_the_gradient_term() {
    for (p, g) in [ball(3.0), simplex()] {
        let start = g.project(&[0.7, 0.3]);
        let sched = DiscreteSchedule::new(ScheduleKind::HarmonicSq, 1.0).unwrap();
        let rec = run(Algorithm::Gm, &p, &g, &sched, &fixed_params(1.0, 1.0, 200), &start).unwrap();
        let e = lyapunov_series(&rec, Algorithm::Gm, &g, &p, &xhat(&p, &g, 1.0, 1.0)).unwrap();
        let obj = BarrierObjective::new(&p, BarrierParams::new(1.0, 1.0).unwrap());
        for (k, r) in e.residual.iter().enumerate() {
            let dalpha = sched.weights(rec.rows[k].k).unwrap().delta_alpha();
            let grad = norm(&obj.gradient(&rec.rows[k + 1].x).unwrap());
            let bound = dalpha * dalpha / (2.0 * g.mu()) * grad * grad + 1e-9;
            assert!(*r <= bound, "{}: k = {k}: residual {r} > {bound}", g.name());
        }
    }
}

fn gradient_bound_holds(rec: &TrajectoryRecord<IterationRow>, p: &ConvexProblem, g: &MirrorGeometry) {
    let obj = BarrierObjective::new(p, BarrierParams::new(1.0, 1.0).unwrap());
    let bound = p.constants().barrier_smoothness * (2.0 * g.m_bound()).sqrt() / g.mu().sqrt() + 1e-6;
    for row in &rec.rows {
        let gn = norm(&obj.gradient(&row.x).unwrap());
        assert!(gn <= bound, "{}: k = {}: |grad| = {gn} > {bound}", g.name(), row.k);
    }
}

#[test]
fn gradient_norm_stays_below_the_geometry_bound() {
    for (p, g) in [ball(3.0), simplex()] {
        let start = g.project(&[0.9, 0.1]);
        let runs = [
            (Algorithm::Agm1, ScheduleKind::ExpRate { p: 1.0 }, 0.1),
            (Algorithm::Agm2, ScheduleKind::QuadC { scale: 0.1 }, 1.0),
            (Algorithm::Gm, ScheduleKind::HarmonicSq, 1.0),
        ];
        for (alg, kind, delta) in runs {
            let sched = DiscreteSchedule::new(kind, delta).unwrap();
            let rec = run(alg, &p, &g, &sched, &fixed_params(1.0, 1.0, 100), &start).unwrap();
            assert!(rec.error().is_none(), "{alg:?} on {}: {:?}", g.name(), rec.termination);
            gradient_bound_holds(&rec, &p, &g);
        }
    }
}

#[test]
fn agm2_flat_first_step_is_a_projected_gradient_step() {
    let (p, g) = ball(3.0);
    let sched = DiscreteSchedule::new(ScheduleKind::QuadC { scale: 0.1 }, 1.0).unwrap();
    let barrier = BarrierParams::new(1.0, 1.0).unwrap();
    let ctx = StepContext {
        problem: &p,
        geometry: &g,
        schedule: &sched,
        mode: BarrierMode::Fixed(barrier),
    };
    let (y0, z0) = (vec![0.5, 0.2], vec![-1.0, 0.4]);
    let state = IterateState {
        k: 0,
        x: y0.clone(),
        y: Some(y0.clone()),
        z: z0.clone(),
        barrier,
    };
    let params = AlgorithmParams {
        eta: 0.25,
        ..fixed_params(1.0, 1.0, 1)
    };
    let next = agm2_step(&state, &ctx, &params).unwrap().state;
    let grad = BarrierObjective::new(&p, barrier).gradient(&y0).unwrap();
    let eta = params.eta_at(0, p.constants().barrier_smoothness);
    let expected = g.project(&[y0[0] - eta * grad[0], y0[1] - eta * grad[1]]);
    assert!(dist(&next.x, &y0) <= 1e-15);
    assert!(dist(&next.z, &z0) <= 1e-15);
    assert!(dist(next.y.as_ref().unwrap(), &expected) <= 1e-15);
}

fn agm1_fixed(kind: ScheduleKind, iters: usize) -> TrajectoryRecord<IterationRow> {
    let (p, g) = ball(3.0);
    let sched = DiscreteSchedule::new(kind, 0.1).unwrap();
    // Past convergence the implicit step is pinned down only to about
    // delta_alpha * eps, which explodes for exponential weights; stop there.
    let params = AlgorithmParams {
        fp_max: 100_000,
        stop_rule: StopRule::GradientNorm,
        stop_tol: 1e-12,
        ..fixed_params(1.0, 1.0, iters)
    };
    let rec = run(Algorithm::Agm1, &p, &g, &sched, &params, &[1.0, 0.0]).unwrap();
    assert!(rec.error().is_none(), "{kind:?}: {:?}", rec.termination);
    rec
}

fn gap_samples(rec: &TrajectoryRecord<IterationRow>) -> Vec<(f64, f64)> {
    rec.rows
        .iter()
        .filter_map(|r| Some((r.k as f64, r.phi_gap?)))
        .filter(|(_, gap)| *gap >= 1e-12)
        .collect()
}

#[test]
fn agm1_poly_power_gap_decays_polynomially() {
    for p in [0.5, 1.0] {
        let rec = agm1_fixed(ScheduleKind::PolyPower { p }, 400);
        let fit = fit_rate(&gap_samples(&rec), RateModel::LogLog, (20.0, 400.0)).unwrap();
        assert!(fit.slope <= -0.8 * 2.0 * p, "p = {p}: slope {}", fit.slope);
    }
}

#[test]
fn agm1_exponential_rate_steepens_with_p() {
    let mut slopes = Vec::new();
    for p in [0.5, 1.0] {
        let rec = agm1_fixed(ScheduleKind::ExpRate { p }, 300);
        let samples: Vec<(f64, f64)> = gap_samples(&rec)
            .into_iter()
            .filter(|(_, gap)| (1e-8..=1e-2).contains(gap))
            .collect();
        let hi = samples.last().unwrap().0;
        let fit = fit_rate(&samples, RateModel::SemiLog, (0.0, hi)).unwrap();
        println!("p = {p}: slope {} r2 {}", fit.slope, fit.r2);
        slopes.push(fit.slope);
    }
    assert!(slopes[1] < slopes[0] && slopes[0] < 0.0, "{slopes:?}");
}
