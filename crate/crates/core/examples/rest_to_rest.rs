//! Minimum-torque quarter turn about body z, starting and ending at rest.
use rigid_dmoc::{solve_maneuver, InertiaModel, ManeuverSpec, RotationMatrix, SolverOptions, Vec3};

fn main() {
    let spec = ManeuverSpec::new(
        InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap(),
        RotationMatrix::identity(),
        RotationMatrix::from_axis_angle(&Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2).unwrap(),
        Vec3::zeros(),
        Vec3::zeros(),
        3.0,
        32,
    )
    .unwrap();
    let sol = solve_maneuver(&spec, &SolverOptions::default()).unwrap();
    println!("converged in {} iterations, ‖F‖∞ = {:.2e}, cost {:.6}", sol.report.iterations, sol.report.final_residual, sol.cost);
    let h = spec.h();
    for (k, tau) in sol.trajectory.torques.iter().enumerate().step_by(4) {
        println!("t = {:5.3}  τ_z = {:+.6}", k as f64 * h, tau[2]);
    }
}
