mod common;

use common::*;
use rigid_dmoc::optctrl::{residual_full, UnknownVector};
use rigid_dmoc::solver::{initialize, jacobian, jacobian_in_order, newton_armijo};
use rigid_dmoc::{solve_maneuver, DerivativeMode, InertiaModel, ManeuverSpec, OptimalControlProblem, RotationMatrix, SolverOptions, Vec3};

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn momentum_block_torque_derivative_at_rest() {
    let spec = ManeuverSpec::new(
        InertiaModel::from_principal([1.0, 1.0, 1.0]).unwrap(),
        RotationMatrix::identity(),
        RotationMatrix::identity(),
        Vec3::zeros(),
        Vec3::zeros(),
        0.6,
        6,
    )
    .unwrap();
    let p = OptimalControlProblem::new(spec.clone()).unwrap();
    let lay = spec.layout();
    let x = vec![0.0; lay.dim()];
    let j = jacobian(&p, &x, DerivativeMode::Dual, false);
    let mrange = lay.momentum_range();
    for k in 1..spec.steps {
        let row = mrange.start + 3 * (k - 1);
        let col = lay.tau(k);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { -0.1 } else { 0.0 };
                assert!((j[(row + a, col + b)] - want).abs() < 1e-15, "k = {k}");
            }
        }
    }
}

#[test]
fn jacobian_is_independent_of_column_order_and_scheduling() {
    let spec = slew_up(12);
    let p = OptimalControlProblem::new(spec.clone()).unwrap();
    let x = initialize(&spec).x.into_vec();
    let forward = jacobian(&p, &x, DerivativeMode::Dual, false);
    let parallel = jacobian(&p, &x, DerivativeMode::Dual, true);
    let order: Vec<usize> = (0..x.len()).rev().collect();
    let reversed = jacobian_in_order(&p, &x, DerivativeMode::Dual, &order);
    assert_eq!(forward, parallel);
    assert_eq!(forward, reversed);
}

#[test]
fn rest_jacobian_is_nonsingular() {
    for n in [4, 16] {
        let spec = rest(n);
        let p = OptimalControlProblem::new(spec.clone()).unwrap();
        let j = jacobian(&p, &vec![0.0; spec.layout().dim()], DerivativeMode::Dual, true);
        assert!(j.iter().all(|v| v.is_finite()));
        let sv = j.singular_values();
        let cond = sv.max() / sv.min();
        assert!(cond.is_finite() && cond < 1e8, "N = {n}: condition number {cond:e}");
    }
}

#[test]
fn quadratic_convergence_tail() {
    let sol = solve_maneuver(&slew_up(64), &SolverOptions::default()).unwrap();
    let r = &sol.report.residual_history;
    assert_eq!(r.len(), sol.report.iterations + 1);
    let tail = &r[r.len() - 3..];
    for w in tail.windows(2) {
        assert!(w[1] <= 10.0 * w[0] * w[0], "history {r:?}");
    }
}

#[test]
fn accepted_steps_never_increase_the_merit() {
    let spec = slew_up(16);
    let p = OptimalControlProblem::new(spec.clone()).unwrap();
    let x0 = initialize(&spec).x.into_vec();
    let mut merits = Vec::new();
    for iters in 0..6 {
        let opts = SolverOptions { max_newton_iterations: iters, ..SolverOptions::default() };
        let x = match newton_armijo(&p, &x0, &opts) {
            Ok(s) => s.x,
            Err(f) => f.best.x,
        };
        merits.push(norm2(&p.residual(&x)));
    }
    assert!(merits.windows(2).all(|w| w[1] <= w[0]), "{merits:?}");
}

#[test]
fn solution_does_not_depend_on_derivative_engine() {
    let spec = slew_up(32);
    let dual = solve_maneuver(&spec, &SolverOptions::default()).unwrap();
    let cs = solve_maneuver(&spec, &SolverOptions { derivative_mode: DerivativeMode::ComplexStep, ..SolverOptions::default() }).unwrap();
    let diff = dual.x.as_slice().iter().zip(cs.x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-8, "{diff:e}");
}

#[test]
fn repeated_solves_are_identical() {
    let spec = slew_up(24);
    let a = solve_maneuver(&spec, &SolverOptions::default()).unwrap();
    let b = solve_maneuver(&spec, &SolverOptions::default()).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.report.residual_history, b.report.residual_history);
    assert_eq!(a.report.backtracks, b.report.backtracks);
}

#[test]
fn initial_guess_satisfies_momentum_block() {
    for spec in [slew_up(32), quarter_turn(16), z_turn(20, 2.5, 4.0)] {
        let x = initialize(&spec).x;
        let r = residual_full(&spec, &x).unwrap();
        let worst = r[spec.layout().momentum_range()].iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-11, "{worst:e}");
    }
}

#[test]
fn quarter_turn_guess_has_geodesic_rate_mid_horizon() {
    let spec = quarter_turn(16);
    let x = initialize(&spec).x;
    let mid = x.omega(8);
    let want = Vec3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2 / 3.0);
    assert!((mid - want).norm_inf() < 1e-14);
}

#[test]
fn slew_up_converges_at_64_and_128() {
    for n in [64, 128] {
        let sol = solve_maneuver(&slew_up(n), &SolverOptions::default()).unwrap();
        assert!(sol.report.converged && sol.report.final_residual <= 1e-10);
        assert!(sol.report.iterations <= 200);
        let x = UnknownVector::from_vec(sol.spec.layout(), sol.x.as_slice().to_vec()).unwrap();
        let r = residual_full(&sol.spec, &x).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-10));
    }
}
