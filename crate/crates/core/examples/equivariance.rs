//! Rotating both boundary attitudes by Q leaves body torques and velocities unchanged.
use rigid_dmoc::validate::{check_equivariance, random_rotations};
use rigid_dmoc::{exp_so3, InertiaModel, ManeuverSpec, RotationMatrix, SolverOptions, Vec3};

fn main() {
    let spec = ManeuverSpec::new(
        InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap(),
        RotationMatrix::identity(),
        exp_so3(&Vec3::new(0.5, -0.2, 0.8)),
        Vec3::zeros(),
        Vec3::new(0.3, 0.2, 0.3),
        12.8,
        64,
    )
    .unwrap();
    for (i, q) in random_rotations(3, 1).iter().enumerate() {
        let d = check_equivariance(&spec, q, &SolverOptions::default()).unwrap();
        println!("Q{i}: angle {:.3} rad, max body difference {d:.2e}", q.angle());
    }
}
