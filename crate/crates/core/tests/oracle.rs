use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use barrierflow::geometry::MirrorGeometry;
use barrierflow::oracle::{gap_certificate, solve_barrier, solve_true, solve_true_with, TrueSolveMethod};
use barrierflow::problem::{builtin, BarrierObjective, BarrierParams, ConvexProblem, OuterSet, PAPER_QUADRATIC};

fn ball(radius: f64) -> (ConvexProblem, MirrorGeometry) {
    (
        builtin(PAPER_QUADRATIC, OuterSet::EuclideanBall { radius }).unwrap(),
        MirrorGeometry::euclidean_ball(radius).unwrap(),
    )
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn barrier_minimizer_beats_random_points() {
    let (p, g) = ball(3.0);
    let res = solve_barrier(&p, &g, 1.0, 1.0, 1e-10).unwrap();
    assert!(res.grad_norm <= 1e-10, "residual {}", res.grad_norm);
    let obj = BarrierObjective::new(&p, BarrierParams::new(1.0, 1.0).unwrap());
    let best = obj.value(&res.point).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..100_000 {
        let q = g.sample(&mut rng, 2);
        if obj.in_domain(&q) {
            checked += 1;
            assert!(best <= obj.value(&q).unwrap() + 1e-12, "{q:?} beats the minimizer");
        }
    }
    assert!(checked > 50_000);
}

#[test]
fn large_barrier_weight_recovers_the_constrained_minimizer() {
    let (p, g) = ball(3.0);
    let res = solve_barrier(&p, &g, 1e8, 1e-8, 1e-10).unwrap();
    assert!(dist(&res.point, &[0.0, 1.0]) <= 1e-4, "{:?}", res.point);
    assert!(res.f_value - 0.0 <= gap_certificate(&p, 1e8, 1e-8, res.dual_norm_estimate) + 1e-12);
}

#[test]
fn barrier_path_approaches_the_solution_monotonically() {
    let (p, g) = ball(3.0);
    let mut last = f64::INFINITY;
    for c in [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6] {
        let res = solve_barrier(&p, &g, c, 1.0 / c, 1e-10).unwrap();
        let d = dist(&res.point, &[0.0, 1.0]);
        assert!(d <= last * (1.0 + 1e-9), "c = {c}: {d} after {last}");
        last = d;
    }
    // grad f vanishes at the solution, so the multiplier is zero and the path
    // closes in like c^(-1/2) rather than 1/c.
    assert!(last <= 2.0 / 1e6f64.sqrt(), "final distance {last}");
}

#[test]
fn simplex_solution_is_the_vertex() {
    let p = builtin(PAPER_QUADRATIC, OuterSet::Simplex { dim: 2 }).unwrap();
    let res = solve_true(&p, 1e-10).unwrap();
    assert!(dist(&res.point, &[0.0, 1.0]) <= 1e-8, "{:?}", res.point);
}

#[test]
fn grid_search_handles_an_inactive_constraint() {
    // On the ball of radius 1/2 the constraint cannot bind, so the answer is
    // the minimizer of f over the ball, which a near-zero barrier reproduces.
    let (p, g) = ball(0.5);
    let grid = solve_true_with(&p, 1e-10, TrueSolveMethod::Grid).unwrap();
    let reference = solve_barrier(&p, &g, 1e12, 0.0, 1e-12).unwrap();
    assert!(dist(&grid.point, &reference.point) <= 1e-6, "{:?} vs {:?}", grid.point, reference.point);
    assert!((grid.point[0].hypot(grid.point[1]) - 0.5).abs() <= 1e-6);
}

#[test]
fn analytic_and_grid_agree_on_the_ball() {
    let (p, _) = ball(3.0);
    let a = solve_true_with(&p, 1e-10, TrueSolveMethod::Analytic).unwrap();
    let b = solve_true_with(&p, 1e-10, TrueSolveMethod::Grid).unwrap();
    assert!(dist(&a.point, &b.point) <= 1e-6);
}
