//! SO(3) and so(3) primitives.
//!
//! The Lie algebra so(3) is identified with R³ through the hat map, and its
//! dual so*(3) with R³ through the dot product. Under this identification the
//! musical isomorphisms are the identity, `Ad_R v = R v`, `Ad*_R p = Rᵀ p`, and
//! the Lie bracket is the cross product.
//!
//! All maps are generic over [`Scalar`] so tangents can be pushed through them.

use std::ops::{Add, Index, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

/// Below this rotation angle exp and log switch to Taylor-expanded coefficients.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Rotations closer than this to a half turn have no unique principal logarithm.
pub const HALF_TURN_MARGIN: f64 = 1e-9;

const ORTHO_TOL: f64 = 1e-12;
const SKEW_TOL: f64 = 1e-9;

#[inline]
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("branch-ambiguous rotation: angle {angle} is within {margin:e} of pi")]
    BranchAmbiguous { angle: f64, margin: f64 },
    #[error("matrix is not skew-symmetric (asymmetry {asymmetry:e})")]
    NotSkew { asymmetry: f64 },
    #[error("matrix is not a rotation (orthogonality defect {ortho:e}, det {det})")]
    NotRotation { ortho: f64, det: f64 },
    #[error("invalid inertia: {0}")]
    Inertia(String),
}

/// A 3-vector. Angular velocities (rad/s), torques (N·m) and momenta all live here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<S = f64>(pub [S; 3]);

/// Body-frame element of so(3) or so*(3) under the R³ identification.
pub type BodyVector<S = f64> = Vec3<S>;

impl<S: Scalar> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Self([x, y, z])
    }

    #[inline]
    pub fn zeros() -> Self {
        Self([S::zero(); 3])
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> S {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Self([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    #[inline]
    pub fn scale(&self, c: S) -> Self {
        Self([self.0[0] * c, self.0[1] * c, self.0[2] * c])
    }

    #[inline]
    pub fn scale_f64(&self, c: f64) -> Self {
        Self([self.0[0].scale(c), self.0[1].scale(c), self.0[2].scale(c)])
    }

    #[inline]
    pub fn norm_squared(&self) -> S {
        self.dot(self)
    }

    /// Largest absolute component; NaN if any component is NaN.
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|c| c.re().abs()).fold(0.0, nan_max)
    }

    pub fn re(&self) -> Vec3<f64> {
        Vec3(self.0.map(Scalar::re))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Vec3<f64> {
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Promote to another scalar type as a constant.
    pub fn lift<S: Scalar>(&self) -> Vec3<S> {
        Vec3(self.0.map(S::from_f64))
    }
}

impl<S> Index<usize> for Vec3<S> {
    type Output = S;
    #[inline]
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S: Scalar> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<S: Scalar> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<S: Scalar> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S = f64>(pub [[S; 3]; 3]);

impl<S: Scalar> Mat3<S> {
    pub fn zeros() -> Self {
        Self([[S::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = S::one();
        }
        m
    }

    pub fn from_diagonal(d: &Vec3<S>) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = d.0[i];
        }
        m
    }

    pub fn from_row_slice(v: &[S; 9]) -> Self {
        Self([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        Self([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    pub fn trace(&self) -> S {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn determinant(&self) -> S {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        let a = &self.0;
        Vec3([
            a[0][0] * v.0[0] + a[0][1] * v.0[1] + a[0][2] * v.0[2],
            a[1][0] * v.0[0] + a[1][1] * v.0[1] + a[1][2] * v.0[2],
            a[2][0] * v.0[0] + a[2][1] * v.0[1] + a[2][2] * v.0[2],
        ])
    }

    /// `selfᵀ v` without forming the transpose.
    #[inline]
    pub fn tr_mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        let a = &self.0;
        Vec3([
            a[0][0] * v.0[0] + a[1][0] * v.0[1] + a[2][0] * v.0[2],
            a[0][1] * v.0[0] + a[1][1] * v.0[1] + a[2][1] * v.0[2],
            a[0][2] * v.0[0] + a[1][2] * v.0[1] + a[2][2] * v.0[2],
        ])
    }

    pub fn scale(&self, c: S) -> Self {
        Self(self.0.map(|r| r.map(|x| x * c)))
    }

    pub fn norm_inf(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|x| x.re().abs())
            .fold(0.0, nan_max)
    }

    pub fn re(&self) -> Mat3<f64> {
        Mat3(self.0.map(|r| r.map(Scalar::re)))
    }
}

impl Mat3<f64> {
    pub fn lift<S: Scalar>(&self) -> Mat3<S> {
        Mat3(self.0.map(|r| r.map(S::from_f64)))
    }

    /// Entries in row-major order.
    pub fn to_row_array(&self) -> [f64; 9] {
        let a = &self.0;
        [
            a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1], a[2][2],
        ]
    }

    pub fn inverse(&self) -> Option<Mat3<f64>> {
        let a = &self.0;
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let c = |r0: usize, c0: usize, r1: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
        let adj = [
            [c(1, 1, 2, 2), -c(0, 1, 2, 2), c(0, 1, 1, 2)],
            [-c(1, 0, 2, 2), c(0, 0, 2, 2), -c(0, 0, 1, 2)],
            [c(1, 0, 2, 1), -c(0, 0, 2, 1), c(0, 0, 1, 1)],
        ];
        Some(Mat3(adj).scale(1.0 / det))
    }
}

impl<S: Scalar> Add for Mat3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl<S: Scalar> Sub for Mat3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] -= o.0[i][j];
            }
        }
        m
    }
}

impl<S: Scalar> Mul for Mat3<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        m
    }
}

/// An element of so(3) in matrix form. Only constructible through [`hat`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewMatrix<S = f64>(Mat3<S>);

impl<S: Scalar> SkewMatrix<S> {
    pub fn matrix(&self) -> &Mat3<S> {
        &self.0
    }
}

/// A proper orthogonal 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix<S = f64>(Mat3<S>);

impl<S: Scalar> RotationMatrix<S> {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3<S> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Group product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn rotate(&self, v: &Vec3<S>) -> Vec3<S> {
        self.0.mul_vec(v)
    }

    pub fn re(&self) -> RotationMatrix<f64> {
        RotationMatrix(self.0.re())
    }

    /// ‖RᵀR − I‖∞ measured on the real part.
    pub fn orthogonality_defect(&self) -> f64 {
        let r = self.0.re();
        (r.transpose() * r - Mat3::identity()).norm_inf()
    }
}

impl RotationMatrix<f64> {
    /// Validate `m` against the rotation invariants (RᵀR = I, det = +1, both to 1e-12).
    pub fn new(m: Mat3<f64>) -> Result<Self, LieError> {
        let ortho = (m.transpose() * m - Mat3::identity()).norm_inf();
        let det = m.determinant();
        if !(ortho <= ORTHO_TOL) || !((det - 1.0).abs() <= ORTHO_TOL) {
            return Err(LieError::NotRotation { ortho, det });
        }
        Ok(Self(m))
    }

    pub fn from_row_slice(v: &[f64; 9]) -> Result<Self, LieError> {
        Self::new(Mat3::from_row_slice(v))
    }

    /// Rotation by `angle` radians about `axis` (normalized here).
    pub fn from_axis_angle(axis: &Vec3<f64>, angle: f64) -> Result<Self, LieError> {
        let n = axis.norm();
        if !(n > 0.0) || !angle.is_finite() {
            return Err(LieError::NotRotation { ortho: f64::NAN, det: f64::NAN });
        }
        Ok(exp_so3(&axis.scale(angle / n)))
    }

    pub fn lift<S: Scalar>(&self) -> RotationMatrix<S> {
        RotationMatrix(self.0.lift())
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        let m = &self.0 .0;
        let s = Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]).norm() * 0.5;
        let c = (self.0.trace() - 1.0) * 0.5;
        s.atan2(c)
    }
}

pub fn hat<S: Scalar>(v: &Vec3<S>) -> SkewMatrix<S> {
    let [x, y, z] = v.0;
    let o = S::zero();
    SkewMatrix(Mat3([[o, -z, y], [z, o, -x], [-y, x, o]]))
}

/// Inverse of [`hat`] on an arbitrary matrix that should be skew-symmetric.
pub fn vee_checked<S: Scalar>(a: &Mat3<S>) -> Result<Vec3<S>, LieError> {
    let m = &a.0;
    let mut asym: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            asym = asym.max((m[i][j] + m[j][i]).re().abs());
        }
    }
    if !(asym <= SKEW_TOL) {
        return Err(LieError::NotSkew { asymmetry: asym });
    }
    Ok(vee_unchecked(a))
}

pub fn vee<S: Scalar>(a: &SkewMatrix<S>) -> Vec3<S> {
    vee_unchecked(&a.0)
}

fn vee_unchecked<S: Scalar>(a: &Mat3<S>) -> Vec3<S> {
    let m = &a.0;
    Vec3([m[2][1], m[0][2], m[1][0]])
}

/// Skew part `(A − Aᵀ)/2` mapped to R³.
fn vee_skew_part<S: Scalar>(a: &Mat3<S>) -> Vec3<S> {
    let m = &a.0;
    Vec3([m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]]).scale_f64(0.5)
}

/// Rodrigues coefficients `(sin θ / θ, (1 − cos θ) / θ²)` as functions of θ².
fn rodrigues_coefficients<S: Scalar>(theta_sq: S) -> (S, S) {
    if theta_sq.re() < SMALL_ANGLE * SMALL_ANGLE {
        let t2 = theta_sq;
        let t4 = t2 * t2;
        let a = S::one() - t2.scale(1.0 / 6.0) + t4.scale(1.0 / 120.0);
        let b = S::from_f64(0.5) - t2.scale(1.0 / 24.0) + t4.scale(1.0 / 720.0);
        (a, b)
    } else {
        let theta = theta_sq.sqrt();
        (theta.sin() / theta, (S::one() - theta.cos()) / theta_sq)
    }
}

/// Matrix exponential of `hat(v)` by the Rodrigues formula.
pub fn exp_so3<S: Scalar>(v: &Vec3<S>) -> RotationMatrix<S> {
    let (a, b) = rodrigues_coefficients(v.norm_squared());
    let k = *hat(v).matrix();
    let k2 = k * k;
    RotationMatrix(Mat3::identity() + k.scale(a) + k2.scale(b))
}

/// Principal logarithm, returning the rotation vector.
///
/// Fails with [`LieError::BranchAmbiguous`] when the angle is within
/// [`HALF_TURN_MARGIN`] of π.
pub fn log_so3<S: Scalar>(r: &RotationMatrix<S>) -> Result<Vec3<S>, LieError> {
    let m = r.matrix();
    // sin θ · axis and cos θ
    let s_vec = vee_skew_part(m);
    let cos_t = (m.trace() - S::one()).scale(0.5);
    let sin_sq = s_vec.norm_squared();

    let theta_re = sin_sq.re().sqrt().atan2(cos_t.re());
    if theta_re > std::f64::consts::PI - HALF_TURN_MARGIN || !theta_re.is_finite() {
        return Err(LieError::BranchAmbiguous { angle: theta_re, margin: HALF_TURN_MARGIN });
    }

    let factor = if theta_re < SMALL_ANGLE {
        // θ / sin θ with θ² ≈ sin²θ (error O(θ⁴) inside an O(θ²) correction)
        let s2 = sin_sq;
        S::one() + s2.scale(1.0 / 6.0) + (s2 * s2).scale(7.0 / 360.0)
    } else {
        let sin_t = sin_sq.sqrt();
        sin_t.atan2(cos_t) / sin_t
    };
    Ok(s_vec.scale(factor))
}

/// `Ad_R v = R v`, equivalently `hat(Rv) = R hat(v) Rᵀ`.
#[inline]
pub fn adjoint<S: Scalar>(r: &RotationMatrix<S>, v: &Vec3<S>) -> Vec3<S> {
    r.0.mul_vec(v)
}

/// `Ad*_R p = Rᵀ p` under the dot-product pairing.
#[inline]
pub fn coadjoint<S: Scalar>(r: &RotationMatrix<S>, p: &Vec3<S>) -> Vec3<S> {
    r.0.tr_mul_vec(p)
}

/// Inertia data in both conventions.
///
/// `body` is the physical tensor I_b acting on angular velocity vectors;
/// `algebra` is the symmetric J with `J(ξ) = Jξ + ξJ` acting on so(3).
/// They are related by `I_b = tr(J)·Id − J` and `J = ½tr(I_b)·Id − I_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaModel {
    body: Mat3<f64>,
    algebra: Mat3<f64>,
    body_inv: Mat3<f64>,
}

const SYMMETRY_TOL: f64 = 1e-12;

fn is_positive_definite(m: &Mat3<f64>) -> bool {
    // Sylvester's criterion on leading minors.
    let a = &m.0;
    let d1 = a[0][0];
    let d2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let d3 = m.determinant();
    d1 > 0.0 && d2 > 0.0 && d3 > 0.0
}

fn symmetric_defect(m: &Mat3<f64>) -> f64 {
    (*m - m.transpose()).norm_inf()
}

impl InertiaModel {
    /// Build from the physical body inertia tensor (kg·m²).
    pub fn from_body(body: Mat3<f64>) -> Result<Self, LieError> {
        if body.0.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LieError::Inertia("non-finite entry".into()));
        }
        let asym = symmetric_defect(&body);
        if asym > SYMMETRY_TOL * body.norm_inf().max(1.0) {
            return Err(LieError::Inertia(format!("tensor is not symmetric (defect {asym:e})")));
        }
        if !is_positive_definite(&body) {
            return Err(LieError::Inertia("tensor is not positive definite".into()));
        }
        let algebra = Mat3::identity().scale(0.5 * body.trace()) - body;
        if !is_positive_definite(&algebra) {
            return Err(LieError::Inertia(
                "principal moments violate the triangle inequality (J not positive definite)".into(),
            ));
        }
        let body_inv = body.inverse().ok_or_else(|| LieError::Inertia("singular tensor".into()))?;
        Ok(Self { body, algebra, body_inv })
    }

    pub fn from_principal(moments: [f64; 3]) -> Result<Self, LieError> {
        Self::from_body(Mat3::from_diagonal(&Vec3(moments)))
    }

    /// Build from the algebra-side matrix J.
    pub fn from_algebra(j: Mat3<f64>) -> Result<Self, LieError> {
        let body = Mat3::identity().scale(j.trace()) - j;
        Self::from_body(body)
    }

    pub fn body(&self) -> &Mat3<f64> {
        &self.body
    }

    pub fn algebra(&self) -> &Mat3<f64> {
        &self.algebra
    }

    /// `I_b v`, equal to `vee(J hat(v) + hat(v) J)`.
    #[inline]
    pub fn apply<S: Scalar>(&self, v: &Vec3<S>) -> Vec3<S> {
        mul_const(&self.body, v)
    }

    /// `I_b⁻¹ p`.
    #[inline]
    pub fn solve<S: Scalar>(&self, p: &Vec3<S>) -> Vec3<S> {
        mul_const(&self.body_inv, p)
    }

    /// Kinetic energy ½⟨I_b Ω, Ω⟩.
    pub fn kinetic_energy(&self, omega: &Vec3<f64>) -> f64 {
        0.5 * self.apply(omega).dot(omega)
    }
}

#[inline]
fn mul_const<S: Scalar>(m: &Mat3<f64>, v: &Vec3<S>) -> Vec3<S> {
    let a = &m.0;
    let row = |i: usize| v.0[0].scale(a[i][0]) + v.0[1].scale(a[i][1]) + v.0[2].scale(a[i][2]);
    Vec3([row(0), row(1), row(2)])
}
