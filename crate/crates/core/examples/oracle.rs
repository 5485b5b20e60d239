//! Newton solution versus a penalty-method minimization of the cost.
use rigid_dmoc::validate::compare_with_oracle;
use rigid_dmoc::{InertiaModel, ManeuverSpec, RotationMatrix, SolverOptions, Vec3};

fn main() {
    let spec = ManeuverSpec::new(
        InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap(),
        RotationMatrix::identity(),
        RotationMatrix::from_axis_angle(&Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2).unwrap(),
        Vec3::zeros(),
        Vec3::zeros(),
        3.0,
        6,
    )
    .unwrap();
    let c = compare_with_oracle(&spec, &SolverOptions::default()).unwrap();
    println!("solver cost  {:.10}", c.solver_cost);
    println!("oracle cost  {:.10}", c.oracle_cost);
    println!("relative gap {:.2e}", c.cost_gap);
    println!("stationarity residual of oracle trajectory {:.2e}", c.oracle_stationarity);
}
