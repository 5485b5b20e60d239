//! Dual-number, complex-step and finite-difference Jacobians of the residual.
use rigid_dmoc::solver::{initialize, jacobian};
use rigid_dmoc::{exp_so3, DerivativeMode, InertiaModel, ManeuverSpec, OptimalControlProblem, RotationMatrix, Vec3};

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
    let p = OptimalControlProblem::new(spec.clone()).unwrap();
    let x = initialize(&spec).x.into_vec();
    let jd = jacobian(&p, &x, DerivativeMode::Dual, true);
    let jc = jacobian(&p, &x, DerivativeMode::ComplexStep, true);
    let jf = jacobian(&p, &x, DerivativeMode::FiniteDifference, true);
    println!("Jacobian {}×{}, max |J| = {:.3e}", jd.nrows(), jd.ncols(), jd.amax());
    println!("dual vs complex-step        {:.2e}", (&jd - &jc).amax());
    println!("dual vs finite differences  {:.2e}", (&jd - &jf).amax());
}
