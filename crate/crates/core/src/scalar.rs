//! Scalar abstraction shared by plain evaluation and directional differentiation.
//!
//! Every geometric routine in this crate is generic over [`Scalar`], so the
//! same code path evaluates a residual in `f64`, propagates a tangent through
//! it with [`Dual`], or performs a complex-step evaluation with [`Complex64`].
//!
//! Branching decisions (small-angle switches, branch-cut tests) always look at
//! [`Scalar::re`] so that every scalar type follows the same branch.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(v: f64) -> Self;

    /// Real (primal) part.
    fn re(self) -> f64;

    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.re().is_finite()
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Complex-step scalar. The imaginary part carries `eps * directional derivative`.
///
/// `sqrt`, `sin` and `cos` use the holomorphic extensions from `num-complex`.
/// `atan2` has no holomorphic library extension that survives a perturbation
/// of order 1e-200, so it is complexified to first order, which is exact for
/// the step sizes used here.
impl Scalar for Complex64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let (y, x) = (self, x);
        let r2 = x.re * x.re + y.re * y.re;
        Complex64::new(y.re.atan2(x.re), (x.re * y.im - y.re * x.im) / r2)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// First-order dual number `re + eps * du` with `eps^2 = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    #[inline]
    pub const fn new(re: f64, du: f64) -> Self {
        Self { re, du }
    }

    #[inline]
    pub const fn constant(re: f64) -> Self {
        Self { re, du: 0.0 }
    }

    #[inline]
    pub const fn variable(re: f64) -> Self {
        Self { re, du: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.re / o.re;
        Dual::new(q, (self.du - q * o.du) / o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.du)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}

impl Scalar for Dual {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.du / (2.0 * s))
    }
    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.du * self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -self.du * self.re.sin())
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let y = self;
        let r2 = x.re * x.re + y.re * y.re;
        Dual::new(y.re.atan2(x.re), (x.re * y.du - y.re * x.du) / r2)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        Dual::new(self.re * c, self.du * c)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.du.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S) -> S {
        (x * x + S::one()).sqrt() * x.sin() / (S::from_f64(2.0) + x.cos())
    }

    fn df(x: f64) -> f64 {
        let g = (x * x + 1.0).sqrt();
        let dg = x / g;
        let num = g * x.sin();
        let dnum = dg * x.sin() + g * x.cos();
        let den = 2.0 + x.cos();
        let dden = -x.sin();
        (dnum * den - num * dden) / (den * den)
    }

    #[test]
    fn dual_matches_hand_derivative() {
        for &x in &[-1.3, 0.2, 0.9, 2.5] {
            let d = f(Dual::variable(x));
            assert!((d.re - f(x)).abs() < 1e-15);
            assert!((d.du - df(x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn complex_step_matches_hand_derivative() {
        let eps = 1e-200;
        for &x in &[-1.3, 0.2, 0.9, 2.5] {
            let c = f(Complex64::new(x, eps));
            assert!((c.im / eps - df(x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn atan2_derivatives_agree() {
        let (y, x) = (0.4, -0.7);
        let d = Dual::new(y, 1.0).atan2(Dual::new(x, 0.5));
        let c = Complex64::new(y, 1e-30).atan2(Complex64::new(x, 0.5e-30));
        assert!((d.re - y.atan2(x)).abs() < 1e-16);
        assert!((d.du - c.im / 1e-30).abs() < 1e-15);
    }
}
