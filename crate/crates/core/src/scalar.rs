//! Numeric abstractions shared by every differentiation mode.
//!
//! User code is written once against [`Scalar`] and can then be evaluated on
//! plain `f64`, on [`Dual`](crate::Dual) numbers, or recorded on a
//! [`Tape`](crate::Tape) through [`VarRef`](crate::VarRef) handles.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A differentiable-or-plain real number.
///
/// The elementary functions mirror the primitive set understood by the tape.
/// Constants enter through the mixed `f64` operators or through [`Scalar::lift`].
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Primal value.
    fn value(&self) -> f64;

    /// A constant living in the same context as `self` (same tape, zero tangent).
    fn lift(&self, c: f64) -> Self;

    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn square(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn cosh(self) -> Self;
    fn sinh(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

/// Element type that can be stored in tape nodes: either `f64` or a [`Dual`](crate::Dual)
/// (the latter gives forward-over-reverse second derivatives).
pub trait Real: Scalar + PartialEq {
    fn from_f64(c: f64) -> Self;
    fn is_finite(&self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

/// A map `R^n -> R^m` written generically so that every AD mode can evaluate it.
pub trait VectorFunction {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

impl<F: VectorFunction> VectorFunction for &F {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        (**self).eval(x)
    }
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn lift(&self, c: f64) -> Self {
        c
    }

    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }

    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn square(self) -> Self {
        self * self
    }

    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }

    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }

    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }

    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }

    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }

    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}
