//! Lagrange multipliers recovered from a converged solution.
use rigid_dmoc::optctrl::{check_multipliers, recover_multipliers};
use rigid_dmoc::{exp_so3, solve_maneuver, InertiaModel, ManeuverSpec, RotationMatrix, SolverOptions, Vec3};

fn main() {
    let spec = ManeuverSpec::new(
        InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap(),
        RotationMatrix::identity(),
        exp_so3(&Vec3::new(0.5, -0.2, 0.8)),
        Vec3::zeros(),
        Vec3::new(0.3, 0.2, 0.3),
        12.8,
        32,
    )
    .unwrap();
    let sol = solve_maneuver(&spec, &SolverOptions::default()).unwrap();
    let mult = recover_multipliers(&spec, &sol.trajectory);
    for k in [1, 8, 16, 24, 30] {
        println!("k = {k:>2}  Λ¹ = {:+.5?}  Λ² = {:+.5?}", mult.lambda1(k).0, mult.lambda2(k).0);
    }
    println!("multiplier equation residual {:.2e}", check_multipliers(&spec, &sol.trajectory, &mult).max());
}
