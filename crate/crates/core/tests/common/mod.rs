//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rigid_dmoc::{exp_so3, InertiaModel, ManeuverSpec, Mat3, RotationMatrix, Vec3};

pub fn principal() -> InertiaModel {
    InertiaModel::from_principal([5.0, 4.0, 3.0]).unwrap()
}

/// Slew-up: rest at the identity to Ω = (0.3, 0.2, 0.3) at exp((0.5, −0.2, 0.8)), T = 12.8.
pub fn slew_up(n: usize) -> ManeuverSpec {
    ManeuverSpec::new(
        principal(),
        RotationMatrix::identity(),
        exp_so3(&Vec3::new(0.5, -0.2, 0.8)),
        Vec3::zeros(),
        Vec3::new(0.3, 0.2, 0.3),
        12.8,
        n,
    )
    .unwrap()
}

/// Rest-to-rest turn by `angle` about body z in `t` seconds.
pub fn z_turn(n: usize, angle: f64, t: f64) -> ManeuverSpec {
    ManeuverSpec::new(
        principal(),
        RotationMatrix::identity(),
        RotationMatrix::from_axis_angle(&Vec3::new(0.0, 0.0, 1.0), angle).unwrap(),
        Vec3::zeros(),
        Vec3::zeros(),
        t,
        n,
    )
    .unwrap()
}

pub fn quarter_turn(n: usize) -> ManeuverSpec {
    z_turn(n, std::f64::consts::FRAC_PI_2, 3.0)
}

pub fn rest(n: usize) -> ManeuverSpec {
    ManeuverSpec::new(
        principal(),
        RotationMatrix::identity(),
        RotationMatrix::identity(),
        Vec3::zeros(),
        Vec3::zeros(),
        0.1 * n as f64,
        n,
    )
    .unwrap()
}

pub fn random_vec<R: Rng>(rng: &mut R, scale: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

/// Random body inertia with principal moments obeying the triangle inequality,
/// expressed in a random frame and symmetrized exactly.
pub fn random_inertia<R: Rng>(rng: &mut R) -> InertiaModel {
    loop {
        let d = [rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)];
        if d[0] + d[1] <= d[2] * 1.05 || d[1] + d[2] <= d[0] * 1.05 || d[0] + d[2] <= d[1] * 1.05 {
            continue;
        }
        let q = to_na(exp_so3(&random_vec(rng, 2.0)).matrix());
        let m = q * Matrix3::from_diagonal(&Vector3::from(d)) * q.transpose();
        let m = (m + m.transpose()) * 0.5;
        return InertiaModel::from_body(from_na(&m)).unwrap();
    }
}

pub fn to_na(m: &Mat3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m.0[i][j])
}

pub fn from_na(m: &Matrix3<f64>) -> Mat3 {
    Mat3(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
}

pub fn na_vec(v: &Vec3) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

pub fn hat_na(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

pub fn vee_na(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Matrix3<f64>) -> Matrix3<f64> {
    let norm = a.abs().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = Matrix3::identity();
    let mut sum = Matrix3::identity();
    for k in 1..=20 {
        term = term * b / k as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

/// Matrix-form stationarity residual. Algebra and coalgebra elements are skew
/// matrices, the inertia operator is `ξ ↦ Jξ + ξJ` with `J = ½tr(I_b)·Id − I_b`,
/// `Ad_A ξ = A ξ Aᵀ`, `Ad*_{A⁻¹} μ = A μ Aᵀ`, and the bracket is the commutator.
pub fn stationarity_matrix_form(
    ib: &Matrix3<f64>,
    omega_prev: &Vector3<f64>,
    omega_k: &Vector3<f64>,
    tau_prev: &Vector3<f64>,
    tau_k: &Vector3<f64>,
    tau_next: &Vector3<f64>,
    h: f64,
) -> Vector3<f64> {
    let j = Matrix3::identity() * (0.5 * ib.trace()) - ib;
    let jop = |x: &Matrix3<f64>| j * x + x * j;
    let ad_inv = |a: &Matrix3<f64>, x: &Matrix3<f64>| a.transpose() * x * a;
    let coad_inv = |a: &Matrix3<f64>, mu: &Matrix3<f64>| a * mu * a.transpose();
    let br = |x: &Matrix3<f64>, y: &Matrix3<f64>| x * y - y * x;

    let g_prev = expm(&(hat_na(omega_prev) * h));
    let g_k = expm(&(hat_na(omega_k) * h));
    let (tp, tk, tn) = (hat_na(tau_prev), hat_na(tau_k), hat_na(tau_next));
    let (wp, wk) = (hat_na(omega_prev), hat_na(omega_k));

    let second = jop(&tk) - coad_inv(&g_k, &jop(&tn)) - jop(&ad_inv(&g_prev, &tp)) + coad_inv(&g_k, &jop(&ad_inv(&g_k, &tk)));
    let first = coad_inv(&g_k, &br(&jop(&wk), &ad_inv(&g_k, &tk))) - br(&jop(&wp), &ad_inv(&g_prev, &tp));
    vee_na(&(-(second / (h * h)) - first / h))
}

/// Classical RK4 on the continuous forced rigid body `Ṙ = R Ω̂`, `I Ω̇ = IΩ × Ω + τ(t)`.
pub fn rk4_rigid_body<F: Fn(f64) -> Vector3<f64>>(
    ib: &Matrix3<f64>,
    r0: Matrix3<f64>,
    w0: Vector3<f64>,
    torque: F,
    t_end: f64,
    steps: usize,
) -> (Matrix3<f64>, Vector3<f64>) {
    let inv = ib.try_inverse().unwrap();
    let f = |t: f64, r: &Matrix3<f64>, w: &Vector3<f64>| {
        let dr = r * hat_na(w);
        let dw = inv * ((ib * w).cross(w) + torque(t));
        (dr, dw)
    };
    let dt = t_end / steps as f64;
    let (mut r, mut w) = (r0, w0);
    for i in 0..steps {
        let t = i as f64 * dt;
        let (k1r, k1w) = f(t, &r, &w);
        let (k2r, k2w) = f(t + dt / 2.0, &(r + k1r * (dt / 2.0)), &(w + k1w * (dt / 2.0)));
        let (k3r, k3w) = f(t + dt / 2.0, &(r + k2r * (dt / 2.0)), &(w + k2w * (dt / 2.0)));
        let (k4r, k4w) = f(t + dt, &(r + k3r * dt), &(w + k3w * dt));
        r += (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (dt / 6.0);
        w += (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (dt / 6.0);
    }
    (r, w)
}
