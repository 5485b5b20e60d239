//! Unforced rigid body: the discrete flow stays on SO(3) and conserves spatial momentum.
use rigid_dmoc::{simulate, InertiaModel, RotationMatrix, Vec3};

fn main() {
    let m = InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap();
    let steps = 10_000;
    let h = 0.01;
    let traj = simulate(&m, &RotationMatrix::identity(), &Vec3::new(0.3, 0.2, 0.3), &vec![Vec3::zeros(); steps - 1], h).unwrap();

    let p = traj.spatial_momenta(&m);
    let drift = p.iter().map(|q| (*q - p[0]).norm_inf()).fold(0.0, f64::max);
    let e = traj.kinetic_energies(&m);
    println!("{steps} steps at h = {h}");
    println!("group drift            {:.2e}", traj.group_drift());
    println!("spatial momentum drift {drift:.2e}");
    println!("kinetic energy         {:.8} -> {:.8}", e[0], e[e.len() - 1]);
    for k in (0..steps).step_by(2000) {
        println!("k = {k:>5}  Ω = {:?}", traj.omegas[k].0);
    }
}
