//! Parse a maneuver file, solve it and render the CSV and SVG outputs.
use std::path::Path;

use rigid_dmoc::cli::{trajectory_csv, trajectory_svg, ManeuverFile};
use rigid_dmoc::solve_maneuver;

const FILE: &str = r#"
inertia = { diag = [5.0, 4.0, 3.0] }
r0 = { matrix = [1, 0, 0, 0, 1, 0, 0, 0, 1] }
rN = { axis_angle = [1.0, 1.0, 0.0, 1.0] }
omega0 = [0.0, 0.0, 0.0]
omegaNm1 = [0.0, 0.0, 0.0]
T = 4.0
N = 20

[solver]
derivative_mode = "complex-step"
"#;

fn main() {
    let man = ManeuverFile::parse(FILE).unwrap().into_maneuver(Path::new(".")).unwrap();
    let sol = solve_maneuver(&man.spec, &man.solver).unwrap();
    let csv = trajectory_csv(&sol.trajectory);
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    println!("... {} rows", csv.lines().count() - 1);
    let svg = trajectory_svg(&sol.trajectory, "axis (1, 1, 0), 1 rad");
    println!("SVG plot: {} bytes", svg.len());
}
