//! Full validation run on a rest-to-rest maneuver; at N = 32 the refinement
//! check is still above its threshold.
use rigid_dmoc::cli::validation_toml;
use rigid_dmoc::validate::ValidateOptions;
use rigid_dmoc::{run_checks, InertiaModel, ManeuverSpec, RotationMatrix, Vec3};

fn main() {
    let spec = ManeuverSpec::new(
        InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap(),
        RotationMatrix::identity(),
        RotationMatrix::from_axis_angle(&Vec3::new(0.0, 0.0, 1.0), 0.5).unwrap(),
        Vec3::zeros(),
        Vec3::zeros(),
        4.0,
        32,
    )
    .unwrap();
    let report = run_checks(&spec, &ValidateOptions::default()).unwrap();
    print!("{}", validation_toml(&report));
    for f in report.failures() {
        println!("failed: {} ({:e} > {:e})", f.name, f.value, f.threshold);
    }
}
