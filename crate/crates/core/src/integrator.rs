//! Lie group variational integrator for the forced rigid body.
//!
//! Attitude is advanced explicitly, `R_{k+1} = R_k exp(hΩ_k)`, and body momentum
//! implicitly, `I_b Ω_k = exp(hΩ_k)ᵀ (hτ_k + I_b Ω_{k−1})`.

use thiserror::Error;

use crate::liegroup::{exp_so3, InertiaModel, Mat3, RotationMatrix, Vec3};
use crate::scalar::{Dual, Scalar};

const IMPLICIT_TOL: f64 = 1e-13;
const IMPLICIT_MAX_ITER: usize = 50;
const IMPLICIT_MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("implicit step failed at k = {step}: residual {residual:e} after {iterations} iterations")]
    ImplicitStepFailed { step: usize, residual: f64, iterations: usize },
    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),
}

/// Attitude and body angular velocity at step `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteState {
    pub rotation: RotationMatrix,
    pub omega: Vec3,
    pub k: usize,
    pub h: f64,
}

/// `{R_k}_0^N`, `{Ω_k}_0^{N−1}` and `{τ_k}_0^N` with `τ_0 = τ_N = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTrajectory {
    pub h: f64,
    pub rotations: Vec<RotationMatrix>,
    pub omegas: Vec<Vec3>,
    pub torques: Vec<Vec3>,
}

impl DiscreteTrajectory {
    /// Number of steps N.
    pub fn steps(&self) -> usize {
        self.omegas.len()
    }

    pub fn state(&self, k: usize) -> DiscreteState {
        DiscreteState { rotation: self.rotations[k], omega: self.omegas[k], k, h: self.h }
    }

    /// Assemble a trajectory from interior data by integrating the attitude.
    ///
    /// `interior_torques` holds τ_1..τ_{N−1}; `omegas` holds Ω_0..Ω_{N−1}.
    pub fn from_sequences(h: f64, r0: RotationMatrix, omegas: Vec<Vec3>, interior_torques: &[Vec3]) -> Self {
        let n = omegas.len();
        assert_eq!(interior_torques.len() + 1, n, "need N−1 interior torques for N velocities");
        let mut rotations = Vec::with_capacity(n + 1);
        rotations.push(r0);
        for k in 0..n {
            let next = step_attitude(&rotations[k], &omegas[k], h);
            rotations.push(next);
        }
        let mut torques = Vec::with_capacity(n + 1);
        torques.push(Vec3::zeros());
        torques.extend_from_slice(interior_torques);
        torques.push(Vec3::zeros());
        Self { h, rotations, omegas, torques }
    }

    /// Max over k of ‖R_kᵀR_k − I‖∞.
    pub fn group_drift(&self) -> f64 {
        self.rotations.iter().map(|r| r.orthogonality_defect()).fold(0.0, f64::max)
    }

    /// Spatial angular momentum `R_{k+1} I_b Ω_k` for k = 0..N−1.
    pub fn spatial_momenta(&self, inertia: &InertiaModel) -> Vec<Vec3> {
        self.omegas
            .iter()
            .enumerate()
            .map(|(k, w)| self.rotations[k + 1].rotate(&inertia.apply(w)))
            .collect()
    }

    pub fn kinetic_energies(&self, inertia: &InertiaModel) -> Vec<f64> {
        self.omegas.iter().map(|w| inertia.kinetic_energy(w)).collect()
    }

    /// Steps with `h‖Ω_k‖ ≥ π`, where the implicit update may have left the
    /// branch connected to small rotations.
    pub fn large_rotation_steps(&self) -> Vec<usize> {
        self.omegas
            .iter()
            .enumerate()
            .filter(|(_, w)| self.h * w.norm() >= std::f64::consts::PI)
            .map(|(k, _)| k)
            .collect()
    }

    /// Max over k of ‖R_{k+1} − R_k exp(hΩ_k)‖∞.
    pub fn kinematic_defect(&self) -> f64 {
        (0..self.steps())
            .map(|k| {
                let pred = step_attitude(&self.rotations[k], &self.omegas[k], self.h);
                (*pred.matrix() - *self.rotations[k + 1].matrix()).norm_inf()
            })
            .fold(0.0, f64::max)
    }
}

/// `R exp(hΩ)`.
pub fn step_attitude<S: Scalar>(r: &RotationMatrix<S>, omega: &Vec3<S>, h: f64) -> RotationMatrix<S> {
    r.compose(&exp_so3(&omega.scale_f64(h)))
}

/// `I_b Ω − exp(hΩ)ᵀ p`.
fn implicit_residual<S: Scalar>(m: &InertiaModel, omega: &Vec3<S>, p: &Vec3<S>, h: f64) -> Vec3<S> {
    let g = exp_so3(&omega.scale_f64(h));
    m.apply(omega) - g.matrix().tr_mul_vec(p)
}

/// Solve the implicit momentum update for Ω_k given Ω_{k−1} and τ_k.
///
/// Damped Newton from the guess `Ω_prev`, Jacobian columns by forward-mode
/// differentiation of the residual.
pub fn step_momentum(m: &InertiaModel, omega_prev: &Vec3, tau: &Vec3, h: f64) -> Result<Vec3, IntegratorError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegratorError::InvalidStepSize(h));
    }
    let p = tau.scale(h) + m.apply(omega_prev);
    if !p.is_finite() {
        return Err(IntegratorError::ImplicitStepFailed { step: 0, residual: f64::NAN, iterations: 0 });
    }
    let tol = IMPLICIT_TOL * p.norm_inf().max(1.0);

    let mut omega = *omega_prev;
    let mut r = implicit_residual(m, &omega, &p, h);
    let mut rnorm = r.norm_inf();
    for iter in 0..IMPLICIT_MAX_ITER {
        if rnorm <= tol {
            return Ok(omega);
        }
        let jac = implicit_jacobian(m, &omega, &p, h);
        let Some(jinv) = jac.inverse() else {
            return Err(IntegratorError::ImplicitStepFailed { step: 0, residual: rnorm, iterations: iter });
        };
        let delta = -jinv.mul_vec(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..IMPLICIT_MAX_HALVINGS {
            let trial = omega + delta.scale(lambda);
            let rt = implicit_residual(m, &trial, &p, h);
            let tn = rt.norm_inf();
            if tn.is_finite() && tn < rnorm {
                omega = trial;
                r = rt;
                rnorm = tn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rnorm <= tol {
        Ok(omega)
    } else {
        Err(IntegratorError::ImplicitStepFailed { step: 0, residual: rnorm, iterations: IMPLICIT_MAX_ITER })
    }
}

fn implicit_jacobian(m: &InertiaModel, omega: &Vec3, p: &Vec3, h: f64) -> Mat3 {
    let pd: Vec3<Dual> = p.lift();
    let mut jac = Mat3::zeros();
    for col in 0..3 {
        let mut w: Vec3<Dual> = omega.lift();
        w.0[col].du = 1.0;
        let r = implicit_residual(m, &w, &pd, h);
        for row in 0..3 {
            jac.0[row][col] = r.0[row].du;
        }
    }
    jac
}

/// Torque τ_k that carries Ω_{k−1} to Ω_k: `hτ_k = exp(hΩ_k) I_b Ω_k − I_b Ω_{k−1}`.
pub fn torque_from_step<S: Scalar>(m: &InertiaModel, omega_prev: &Vec3<S>, omega_next: &Vec3<S>, h: f64) -> Vec3<S> {
    let g = exp_so3(&omega_next.scale_f64(h));
    (g.rotate(&m.apply(omega_next)) - m.apply(omega_prev)).scale_f64(1.0 / h)
}

/// Forward simulation of the discrete dynamics.
///
/// `interior_torques` holds τ_1..τ_{N−1}; the trajectory has N steps, and
/// τ_0 = τ_N = 0 are stored explicitly.
pub fn simulate(
    m: &InertiaModel,
    r0: &RotationMatrix,
    omega0: &Vec3,
    interior_torques: &[Vec3],
    h: f64,
) -> Result<DiscreteTrajectory, IntegratorError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(IntegratorError::InvalidStepSize(h));
    }
    let n = interior_torques.len() + 1;
    let mut omegas = Vec::with_capacity(n);
    omegas.push(*omega0);
    for (i, tau) in interior_torques.iter().enumerate() {
        let next = step_momentum(m, &omegas[i], tau, h).map_err(|e| match e {
            IntegratorError::ImplicitStepFailed { residual, iterations, .. } => {
                IntegratorError::ImplicitStepFailed { step: i + 1, residual, iterations }
            }
            other => other,
        })?;
        omegas.push(next);
    }
    Ok(DiscreteTrajectory::from_sequences(h, *r0, omegas, interior_torques))
}
