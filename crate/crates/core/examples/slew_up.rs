//! Slew-up from rest to a tumbling state at N = 64 and N = 128.
use rigid_dmoc::validate::refinement_distance;
use rigid_dmoc::{exp_so3, solve_maneuver, InertiaModel, ManeuverSpec, RotationMatrix, SolverOptions, Vec3};

fn spec(n: usize) -> ManeuverSpec {
    ManeuverSpec::new(
        InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap(),
        RotationMatrix::identity(),
        exp_so3(&Vec3::new(0.5, -0.2, 0.8)),
        Vec3::zeros(),
        Vec3::new(0.3, 0.2, 0.3),
        12.8,
        n,
    )
    .unwrap()
}

fn main() {
    let mut sols = Vec::new();
    for n in [64, 128] {
        let sol = solve_maneuver(&spec(n), &SolverOptions::default()).unwrap();
        let r = &sol.report;
        println!(
            "N = {n:>3}: {} iterations, final ‖F‖∞ {:.1e}, cost {:.6}, {:.3} s",
            r.iterations,
            r.final_residual,
            sol.cost,
            r.wall_time.as_secs_f64()
        );
        sols.push(sol);
    }
    println!("relative difference N=64 vs N=128: {:.4}", refinement_distance(&sols[0].trajectory, &sols[1].trajectory));
    let last = &sols[1].trajectory;
    println!("Ω_(N-1) = {:?}", last.omegas[last.omegas.len() - 1].0);
}
