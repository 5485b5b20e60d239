//! Basic SO(3) operations: hat/vee, exponential and logarithm, adjoint actions.
use rigid_dmoc::liegroup::{adjoint, coadjoint, hat, vee};
use rigid_dmoc::{exp_so3, log_so3, Vec3};

fn main() {
    let v = Vec3::new(0.3, -1.2, 0.7);
    let w = Vec3::new(-0.4, 0.1, 0.9);

    let r = exp_so3(&v);
    println!("exp(v) =\n{:?}", r.matrix().to_row_array());
    println!("orthogonality defect {:.2e}, angle {:.6} (|v| = {:.6})", r.orthogonality_defect(), r.angle(), v.norm());

    let back = log_so3(&r).unwrap();
    println!("log(exp(v)) - v = {:.2e}", (back - v).norm_inf());
    println!("vee(hat(v)) - v = {:.2e}", (vee(&hat(&v)) - v).norm_inf());

    let ad = adjoint(&r, &w);
    let coad = coadjoint(&r, &w);
    println!("Ad_R w = {ad:?}");
    println!("<Ad*_R p, w> - <p, Ad_R w> = {:.2e}", coad.dot(&w) - w.dot(&ad));
    println!("[v, w] = {:?}", v.cross(&w));
}
