//! The discrete minimum-torque problem as a square nonlinear system.
//!
//! Unknowns are `[τ_1, …, τ_{N−1}, Ω_1, …, Ω_{N−2}]` and residual blocks are
//! `[stationarity k = 2..N−2, momentum k = 1..N−1, closure]`, each block a
//! 3-vector, so both sides have length `3(2N − 3)`.
//!
//! Boundary data enter by substitution: Ω_0 and Ω_{N−1} come from the
//! maneuver, τ_0 = τ_N = 0, and the boundary attitudes only appear through the
//! relative rotation `R_Nᵀ R_0` in the closure block.

use thiserror::Error;

use crate::integrator::{step_attitude, DiscreteTrajectory};
use crate::liegroup::{exp_so3, log_so3, InertiaModel, RotationMatrix, Vec3};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("need at least 3 steps, got {0}")]
    TooFewSteps(usize),
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("boundary velocity has a non-finite component")]
    NonFiniteBoundary,
    #[error("unknown vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

/// Boundary data and discretization of one maneuver.
#[derive(Clone, Debug, PartialEq)]
pub struct ManeuverSpec {
    pub inertia: InertiaModel,
    pub r0: RotationMatrix,
    pub rn: RotationMatrix,
    pub omega0: Vec3,
    pub omega_nm1: Vec3,
    pub horizon: f64,
    pub steps: usize,
}

impl ManeuverSpec {
    pub fn new(
        inertia: InertiaModel,
        r0: RotationMatrix,
        rn: RotationMatrix,
        omega0: Vec3,
        omega_nm1: Vec3,
        horizon: f64,
        steps: usize,
    ) -> Result<Self, ProblemError> {
        let spec = Self { inertia, r0, rn, omega0, omega_nm1, horizon, steps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.steps < 3 {
            return Err(ProblemError::TooFewSteps(self.steps));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(ProblemError::InvalidHorizon(self.horizon));
        }
        if !self.omega0.is_finite() || !self.omega_nm1.is_finite() {
            return Err(ProblemError::NonFiniteBoundary);
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Same maneuver at a different resolution.
    pub fn with_steps(&self, steps: usize) -> Self {
        Self { steps, ..self.clone() }
    }

    /// Boundary attitudes left-multiplied by `q`.
    pub fn rotated(&self, q: &RotationMatrix) -> Self {
        Self { r0: q.compose(&self.r0), rn: q.compose(&self.rn), ..self.clone() }
    }

    pub fn layout(&self) -> Layout {
        Layout { steps: self.steps }
    }
}

/// Index arithmetic for the unknown and residual vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub steps: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        3 * (2 * self.steps - 3)
    }

    /// Offset of τ_k, k = 1..N−1.
    pub fn tau(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k < self.steps);
        3 * (k - 1)
    }

    /// Offset of Ω_k, k = 1..N−2.
    pub fn omega(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k + 2 <= self.steps);
        3 * (self.steps - 1) + 3 * (k - 1)
    }

    /// Lengths of the (stationarity, momentum, closure) residual blocks.
    pub fn block_lengths(&self) -> (usize, usize, usize) {
        (3 * (self.steps - 3), 3 * (self.steps - 1), 3)
    }

    pub fn stationarity_range(&self) -> std::ops::Range<usize> {
        0..3 * (self.steps - 3)
    }

    pub fn momentum_range(&self) -> std::ops::Range<usize> {
        let s = 3 * (self.steps - 3);
        s..s + 3 * (self.steps - 1)
    }

    pub fn closure_range(&self) -> std::ops::Range<usize> {
        let d = self.dim();
        d - 3..d
    }
}

/// Flat unknown vector `[τ_1..τ_{N−1}, Ω_1..Ω_{N−2}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnknownVector {
    layout: Layout,
    data: Vec<f64>,
}

impl UnknownVector {
    pub fn zeros(layout: Layout) -> Self {
        Self { layout, data: vec![0.0; layout.dim()] }
    }

    pub fn from_vec(layout: Layout, data: Vec<f64>) -> Result<Self, ProblemError> {
        if data.len() != layout.dim() {
            return Err(ProblemError::DimensionMismatch { got: data.len(), expected: layout.dim() });
        }
        Ok(Self { layout, data })
    }

    /// Pack interior torques τ_1..τ_{N−1} and interior velocities Ω_1..Ω_{N−2}.
    pub fn pack(layout: Layout, torques: &[Vec3], omegas: &[Vec3]) -> Self {
        assert_eq!(torques.len(), layout.steps - 1);
        assert_eq!(omegas.len(), layout.steps - 2);
        let data = torques.iter().chain(omegas.iter()).flat_map(|v| v.0).collect();
        Self { layout, data }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn tau(&self, k: usize) -> Vec3 {
        read_block(&self.data, self.layout.tau(k))
    }

    pub fn omega(&self, k: usize) -> Vec3 {
        read_block(&self.data, self.layout.omega(k))
    }
}

#[inline]
fn read_block<S: Scalar>(x: &[S], offset: usize) -> Vec3<S> {
    Vec3([x[offset], x[offset + 1], x[offset + 2]])
}

#[inline]
fn write_block<S: Scalar>(out: &mut [S], offset: usize, v: &Vec3<S>) {
    out[offset..offset + 3].copy_from_slice(&v.0);
}

/// Discrete cost `Σ_{k=0}^{N} ½‖τ_k‖²`.
pub fn cost(traj: &DiscreteTrajectory) -> f64 {
    traj.torques.iter().map(|t| 0.5 * t.dot(t)).sum()
}

/// Stationarity residual at step k with `A_j = exp(hΩ_j)` already formed.
#[allow(clippy::too_many_arguments)]
fn stationarity_with<S: Scalar>(
    m: &InertiaModel,
    a_prev: &RotationMatrix<S>,
    a_k: &RotationMatrix<S>,
    omega_prev: &Vec3<S>,
    omega_k: &Vec3<S>,
    tau_prev: &Vec3<S>,
    tau_k: &Vec3<S>,
    tau_next: &Vec3<S>,
    h: f64,
) -> Vec3<S> {
    let ak = a_k.matrix();
    let ap = a_prev.matrix();
    // Ad_{A⁻¹} v = Aᵀ v and Ad*_{A⁻¹} p = A p
    let ad_k_tau = ak.tr_mul_vec(tau_k);
    let ad_prev_tau = ap.tr_mul_vec(tau_prev);

    let second = m.apply(tau_k) - ak.mul_vec(&m.apply(tau_next)) - m.apply(&ad_prev_tau)
        + ak.mul_vec(&m.apply(&ad_k_tau));
    let first = ak.mul_vec(&m.apply(omega_k).cross(&ad_k_tau)) - m.apply(omega_prev).cross(&ad_prev_tau);
    -(second.scale_f64(1.0 / (h * h)) + first.scale_f64(1.0 / h))
}

/// Vector form of the discrete stationarity condition at an interior step.
pub fn residual_stationarity<S: Scalar>(
    m: &InertiaModel,
    omega_prev: &Vec3<S>,
    omega_k: &Vec3<S>,
    tau_prev: &Vec3<S>,
    tau_k: &Vec3<S>,
    tau_next: &Vec3<S>,
    h: f64,
) -> Vec3<S> {
    let a_prev = exp_so3(&omega_prev.scale_f64(h));
    let a_k = exp_so3(&omega_k.scale_f64(h));
    stationarity_with(m, &a_prev, &a_k, omega_prev, omega_k, tau_prev, tau_k, tau_next, h)
}

fn momentum_with<S: Scalar>(
    m: &InertiaModel,
    a_k: &RotationMatrix<S>,
    omega_prev: &Vec3<S>,
    omega_k: &Vec3<S>,
    tau_k: &Vec3<S>,
    h: f64,
) -> Vec3<S> {
    m.apply(omega_k) - a_k.matrix().tr_mul_vec(&(tau_k.scale_f64(h) + m.apply(omega_prev)))
}

/// `I_b Ω_k − exp(hΩ_k)ᵀ (hτ_k + I_b Ω_{k−1})`.
pub fn residual_momentum<S: Scalar>(
    m: &InertiaModel,
    omega_prev: &Vec3<S>,
    omega_k: &Vec3<S>,
    tau_k: &Vec3<S>,
    h: f64,
) -> Vec3<S> {
    let a_k = exp_so3(&omega_k.scale_f64(h));
    momentum_with(m, &a_k, omega_prev, omega_k, tau_k, h)
}

/// `log(R_Nᵀ R_0 Π_k exp(hΩ_k))` for the full sequence Ω_0..Ω_{N−1}.
pub fn residual_closure<S: Scalar>(spec: &ManeuverSpec, omegas: &[Vec3<S>]) -> Result<Vec3<S>, crate::liegroup::LieError> {
    let h = spec.h();
    let gs: Vec<_> = omegas.iter().map(|w| exp_so3(&w.scale_f64(h))).collect();
    closure_with(&relative_rotation(spec), &gs)
}

fn relative_rotation(spec: &ManeuverSpec) -> RotationMatrix {
    spec.rn.transpose().compose(&spec.r0)
}

fn closure_with<S: Scalar>(relative: &RotationMatrix, gs: &[RotationMatrix<S>]) -> Result<Vec3<S>, crate::liegroup::LieError> {
    let mut acc = relative.lift::<S>();
    for g in gs {
        acc = acc.compose(g);
    }
    log_so3(&acc)
}

/// A residual map `F: Rⁿ → Rⁿ` that can be evaluated over any [`Scalar`].
pub trait ResidualSystem: Sync {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// Assembled root-finding problem for one maneuver.
#[derive(Clone, Debug)]
pub struct OptimalControlProblem {
    spec: ManeuverSpec,
    h: f64,
    relative: RotationMatrix,
}

impl OptimalControlProblem {
    pub fn new(spec: ManeuverSpec) -> Result<Self, ProblemError> {
        spec.validate()?;
        let h = spec.h();
        let relative = relative_rotation(&spec);
        Ok(Self { spec, h, relative })
    }

    pub fn spec(&self) -> &ManeuverSpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.spec.layout()
    }

    /// Full velocity sequence Ω_0..Ω_{N−1} with the boundary values substituted.
    fn omegas<S: Scalar>(&self, x: &[S]) -> Vec<Vec3<S>> {
        let lay = self.layout();
        let n = self.spec.steps;
        let mut w = Vec::with_capacity(n);
        w.push(self.spec.omega0.lift());
        w.extend((1..n - 1).map(|k| read_block(x, lay.omega(k))));
        w.push(self.spec.omega_nm1.lift());
        w
    }

    /// Full torque sequence τ_0..τ_N.
    fn torques<S: Scalar>(&self, x: &[S]) -> Vec<Vec3<S>> {
        let lay = self.layout();
        let n = self.spec.steps;
        let mut t = Vec::with_capacity(n + 1);
        t.push(Vec3::zeros());
        t.extend((1..n).map(|k| read_block(x, lay.tau(k))));
        t.push(Vec3::zeros());
        t
    }

    /// Assemble the residual; a branch-ambiguous closure yields a NaN block.
    pub fn residual<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let lay = self.layout();
        assert_eq!(x.len(), lay.dim());
        let n = self.spec.steps;
        let h = self.h;
        let m = &self.spec.inertia;
        let w = self.omegas(x);
        let t = self.torques(x);
        let gs: Vec<_> = w.iter().map(|wk| exp_so3(&wk.scale_f64(h))).collect();

        let mut out = vec![S::zero(); lay.dim()];
        let mut off = 0;
        for k in 2..=n - 2 {
            let r = stationarity_with(m, &gs[k - 1], &gs[k], &w[k - 1], &w[k], &t[k - 1], &t[k], &t[k + 1], h);
            write_block(&mut out, off, &r);
            off += 3;
        }
        for k in 1..n {
            let r = momentum_with(m, &gs[k], &w[k - 1], &w[k], &t[k], h);
            write_block(&mut out, off, &r);
            off += 3;
        }
        let closure = closure_with(&self.relative, &gs).unwrap_or_else(|_| Vec3([S::from_f64(f64::NAN); 3]));
        write_block(&mut out, off, &closure);
        out
    }

    /// Trajectory encoded by `x`, with attitudes integrated from R_0.
    pub fn trajectory(&self, x: &UnknownVector) -> DiscreteTrajectory {
        let data = x.as_slice();
        let w = self.omegas(data);
        let t = self.torques(data);
        DiscreteTrajectory::from_sequences(self.h, self.spec.r0, w, &t[1..t.len() - 1])
    }

    /// Inverse of [`Self::trajectory`] on the unknown set.
    pub fn unknowns(&self, traj: &DiscreteTrajectory) -> UnknownVector {
        let n = self.spec.steps;
        assert_eq!(traj.steps(), n);
        UnknownVector::pack(self.layout(), &traj.torques[1..n], &traj.omegas[1..n - 1])
    }
}

impl ResidualSystem for OptimalControlProblem {
    fn dim(&self) -> usize {
        self.layout().dim()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        self.residual(x)
    }
}

/// Convenience wrapper around [`OptimalControlProblem::residual`].
pub fn residual_full(spec: &ManeuverSpec, x: &UnknownVector) -> Result<Vec<f64>, ProblemError> {
    let problem = OptimalControlProblem::new(spec.clone())?;
    if x.layout() != problem.layout() {
        return Err(ProblemError::DimensionMismatch { got: x.as_slice().len(), expected: problem.layout().dim() });
    }
    Ok(problem.residual(x.as_slice()))
}

/// Lagrange multipliers of the discrete problem.
///
/// `lambda2[i]` is Λ²_{i+1} for k = 1..N−1 (algebra side);
/// `lambda1[i]` is Λ¹_{i+1} for k = 1..N−2 (coalgebra side).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSequences {
    pub lambda1: Vec<Vec3>,
    pub lambda2: Vec<Vec3>,
}

impl MultiplierSequences {
    pub fn lambda1(&self, k: usize) -> Vec3 {
        self.lambda1[k - 1]
    }

    pub fn lambda2(&self, k: usize) -> Vec3 {
        self.lambda2[k - 1]
    }
}

/// Recover multipliers from a trajectory:
/// `Λ²_k = (1/h) g_kᵀ τ_k` and
/// `Λ¹_k = I_b Λ²_k − I_b g_{k+1} Λ²_{k+1} + h (I_b Ω_k) × Λ²_k`.
pub fn recover_multipliers(spec: &ManeuverSpec, traj: &DiscreteTrajectory) -> MultiplierSequences {
    let n = spec.steps;
    let h = traj.h;
    let m = &spec.inertia;
    let gs: Vec<_> = traj.omegas.iter().map(|w| exp_so3(&w.scale(h))).collect();
    let lambda2: Vec<Vec3> = (1..n).map(|k| gs[k].matrix().tr_mul_vec(&traj.torques[k]).scale(1.0 / h)).collect();
    let lambda1 = (1..n - 1)
        .map(|k| {
            let l2 = lambda2[k - 1];
            let l2_next = gs[k + 1].rotate(&lambda2[k]);
            m.apply(&l2) - m.apply(&l2_next) + m.apply(&traj.omegas[k]).cross(&l2).scale(h)
        })
        .collect();
    MultiplierSequences { lambda1, lambda2 }
}

/// Per-line residuals of the multiplier form of the optimality conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MultiplierCheck {
    /// `R_{k+1} = R_k g_k`.
    pub kinematics: f64,
    /// `M_k = Ad*_{g_k}(hτ_k + M_{k−1})`.
    pub momentum: f64,
    /// `0 = Λ¹_{k−1} − Ad*_{g_k⁻¹} Λ¹_k`, k = 2..N−2.
    pub costate: f64,
    /// `0 = −Λ¹_k + J(Λ²_k) − J(Ad_{g_{k+1}} Λ²_{k+1}) + h[M_k, Λ²_k]`, k = 1..N−2.
    pub coupling: f64,
    /// `τ_k = h Ad_{g_k} Λ²_k`, k = 1..N−1.
    pub torque: f64,
    /// Boundary attitudes, velocities and `τ_0 = τ_N = 0`.
    pub boundary: f64,
}

impl MultiplierCheck {
    pub fn max(&self) -> f64 {
        [self.kinematics, self.momentum, self.costate, self.coupling, self.torque, self.boundary]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn check_multipliers(spec: &ManeuverSpec, traj: &DiscreteTrajectory, mult: &MultiplierSequences) -> MultiplierCheck {
    let n = spec.steps;
    let h = traj.h;
    let m = &spec.inertia;
    let gs: Vec<_> = traj.omegas.iter().map(|w| exp_so3(&w.scale(h))).collect();
    let mut c = MultiplierCheck { kinematics: traj.kinematic_defect(), ..Default::default() };

    for k in 1..n {
        let r = momentum_with(m, &gs[k], &traj.omegas[k - 1], &traj.omegas[k], &traj.torques[k], h);
        c.momentum = c.momentum.max(r.norm_inf());
        let t = gs[k].rotate(&mult.lambda2(k)).scale(h);
        c.torque = c.torque.max((t - traj.torques[k]).norm_inf());
    }
    for k in 2..n - 1 {
        let r = mult.lambda1(k - 1) - gs[k].rotate(&mult.lambda1(k));
        c.costate = c.costate.max(r.norm_inf());
    }
    for k in 1..n - 1 {
        let l2 = mult.lambda2(k);
        let r = -mult.lambda1(k) + m.apply(&l2) - m.apply(&gs[k + 1].rotate(&mult.lambda2(k + 1)))
            + m.apply(&traj.omegas[k]).cross(&l2).scale(h);
        c.coupling = c.coupling.max(r.norm_inf());
    }

    let r1 = step_attitude(&spec.r0, &spec.omega0, h);
    let rnm1 = spec.rn.compose(&exp_so3(&spec.omega_nm1.scale(h)).transpose());
    let bnd = [
        (*traj.rotations[0].matrix() - *spec.r0.matrix()).norm_inf(),
        (*traj.rotations[1].matrix() - *r1.matrix()).norm_inf(),
        (*traj.rotations[n].matrix() - *spec.rn.matrix()).norm_inf(),
        (*traj.rotations[n - 1].matrix() - *rnm1.matrix()).norm_inf(),
        (traj.omegas[0] - spec.omega0).norm_inf(),
        (traj.omegas[n - 1] - spec.omega_nm1).norm_inf(),
        traj.torques[0].norm_inf(),
        traj.torques[n].norm_inf(),
    ];
    c.boundary = bnd.into_iter().fold(0.0, f64::max);
    c
}
