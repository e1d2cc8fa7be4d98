//! Dual numbers for forward-mode differentiation.
//!
//! A [`Dual`] carries a value and one directional tangent. Each primitive takes
//! its partials from the shared table in [`crate::prim`] and combines them with
//! the operand tangents, so one sweep over a program yields `J * u`.

use std::cell::Cell;
use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{AdError, Result};
use crate::prim::{self, Prim};
use crate::scalar::{Real, Scalar, VectorFunction};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub value: f64,
    pub tangent: f64,
}

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
    static FIRST_ERROR: RefCell<Option<AdError>> = const { RefCell::new(None) };
}

/// FMA-proxy operations performed by dual arithmetic on the current thread.
pub fn op_count() -> u64 {
    OPS.with(Cell::get)
}

pub fn reset_op_count() {
    OPS.with(|c| c.set(0));
}

/// Returns and clears the first domain error raised by an overloaded dual
/// operator on this thread.
pub fn take_error() -> Option<AdError> {
    FIRST_ERROR.with(|e| e.borrow_mut().take())
}

fn poison(err: AdError) {
    FIRST_ERROR.with(|e| {
        let mut slot = e.borrow_mut();
        if slot.is_none() {
            *slot = Some(err);
        }
    });
}

impl Dual {
    pub const fn new(value: f64, tangent: f64) -> Self {
        Dual { value, tangent }
    }

    pub const fn constant(value: f64) -> Self {
        Dual {
            value,
            tangent: 0.0,
        }
    }

    /// Applies a primitive: value from the primitive, tangent as the sum of
    /// local partials times operand tangents.
    pub fn apply(prim: Prim, args: &[Dual]) -> Result<Dual> {
        if args.len() != prim.arity() {
            return Err(AdError::Arity {
                op: prim.name(),
                expected: prim.arity(),
                found: args.len(),
            });
        }
        let a = args[0];
        let b = args.get(1).copied().unwrap_or_default();
        apply_raw(prim, a, b)
    }
}

#[inline]
fn apply_raw(prim: Prim, a: Dual, b: Dual) -> Result<Dual> {
    let l = prim::local(prim, a.value, b.value)?;
    let cost = prim.cost();
    let tangent = if prim.arity() == 2 {
        l.partials[0] * a.tangent + l.partials[1] * b.tangent
    } else {
        l.partials[0] * a.tangent
    };
    if !tangent.is_finite() {
        return Err(AdError::Domain {
            op: prim.name(),
            arg: a.value,
        });
    }
    OPS.with(|c| c.set(c.get() + cost.eval + cost.partials + prim.arity() as u64));
    Ok(Dual {
        value: l.value,
        tangent,
    })
}

#[inline]
fn op(prim: Prim, a: Dual, b: Dual) -> Dual {
    apply_raw(prim, a, b).unwrap_or_else(|e| {
        poison(e);
        Dual::new(f64::NAN, f64::NAN)
    })
}

/// Forward sweep: returns `f(x)` and the directional derivative `J * u`.
pub fn directional_derivative<F: VectorFunction>(
    f: &F,
    x: &[f64],
    u: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != u.len() {
        return Err(AdError::Dimension {
            expected: x.len(),
            found: u.len(),
        });
    }
    check_finite("input", x)?;
    check_finite("tangent", u)?;
    take_error();
    let args: Vec<Dual> = x.iter().zip(u).map(|(&v, &t)| Dual::new(v, t)).collect();
    let out = f.eval(&args);
    if let Some(e) = take_error() {
        return Err(e);
    }
    Ok(out.iter().map(|d| (d.value, d.tangent)).unzip())
}

pub(crate) fn check_finite(what: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|v| !v.is_finite()) {
        Some(&value) => Err(AdError::NonFinite { what, value }),
        None => Ok(()),
    }
}

impl fmt::Display for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}ε)", self.value, self.tangent)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        op(Prim::Add, self, rhs)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        op(Prim::Sub, self, rhs)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        op(Prim::Mul, self, rhs)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        op(Prim::Div, self, rhs)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        op(Prim::Neg, self, Dual::default())
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, c: f64) -> Dual {
        op(Prim::AddConst(c), self, Dual::default())
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, c: f64) -> Dual {
        op(Prim::AddConst(-c), self, Dual::default())
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, c: f64) -> Dual {
        op(Prim::Scale(c), self, Dual::default())
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, c: f64) -> Dual {
        if c == 0.0 {
            poison(AdError::DivisionByZero);
            return Dual::new(f64::NAN, f64::NAN);
        }
        op(Prim::Scale(1.0 / c), self, Dual::default())
    }
}

impl Add<Dual> for f64 {
    type Output = Dual;
    fn add(self, d: Dual) -> Dual {
        d + self
    }
}

impl Sub<Dual> for f64 {
    type Output = Dual;
    fn sub(self, d: Dual) -> Dual {
        -d + self
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, d: Dual) -> Dual {
        d * self
    }
}

impl Div<Dual> for f64 {
    type Output = Dual;
    fn div(self, d: Dual) -> Dual {
        Dual::constant(self) / d
    }
}

impl Scalar for Dual {
    fn value(&self) -> f64 {
        self.value
    }

    fn lift(&self, c: f64) -> Self {
        Dual::constant(c)
    }

    fn ln(self) -> Self {
        op(Prim::Log, self, Dual::default())
    }

    fn exp(self) -> Self {
        op(Prim::Exp, self, Dual::default())
    }

    fn sqrt(self) -> Self {
        op(Prim::Sqrt, self, Dual::default())
    }

    fn square(self) -> Self {
        op(Prim::Square, self, Dual::default())
    }

    fn powf(self, p: f64) -> Self {
        op(Prim::Pow(p), self, Dual::default())
    }

    fn cosh(self) -> Self {
        op(Prim::Cosh, self, Dual::default())
    }

    fn sinh(self) -> Self {
        op(Prim::Sinh, self, Dual::default())
    }

    fn sin(self) -> Self {
        op(Prim::Sin, self, Dual::default())
    }

    fn cos(self) -> Self {
        op(Prim::Cos, self, Dual::default())
    }
}

impl Real for Dual {
    fn from_f64(c: f64) -> Self {
        Dual::constant(c)
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.tangent.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::LogNormal;

    struct Square;
    impl VectorFunction for Square {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] * x[0]]
        }
    }

    struct Passthrough;
    impl VectorFunction for Passthrough {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] / x[1], x[1]]
        }
    }

    #[test]
    fn log_normal_trace() {
        // forward derivative trace seeded on mu
        let v4 = Dual::apply(Prim::Sub, &[Dual::new(10.0, 0.0), Dual::new(5.0, 1.0)]).unwrap();
        assert_eq!(v4, Dual::new(5.0, -1.0));
        let v5 = Dual::apply(Prim::Div, &[v4, Dual::new(2.0, 0.0)]).unwrap();
        assert_eq!(v5, Dual::new(2.5, -0.5));
        let v6 = Dual::apply(Prim::Square, &[v5]).unwrap();
        assert_eq!(v6, Dual::new(6.25, -2.5));
        let v7 = Dual::apply(Prim::Scale(-0.5), &[v6]).unwrap();
        assert_eq!(v7.tangent, 1.25);
    }

    #[test]
    fn directional_log_normal() {
        let (val, jv) =
            directional_derivative(&LogNormal, &[10.0, 5.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(jv, vec![1.25]);
        let direct = -0.5 * 2.5f64.powi(2) - 2f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((val[0] - direct).abs() < 1e-14);
    }

    #[test]
    fn constant_direction_has_zero_tangent() {
        for prim in [
            Prim::Add,
            Prim::Mul,
            Prim::Div,
            Prim::Log,
            Prim::Cosh,
            Prim::Pow(1.5),
        ] {
            let args = [Dual::constant(1.7), Dual::constant(0.4)];
            let d = Dual::apply(prim, &args[..prim.arity()]).unwrap();
            assert_eq!(d.tangent, 0.0);
        }
        let (_, jv) = directional_derivative(&LogNormal, &[10.0, 5.0, 2.0], &[0.0; 3]).unwrap();
        assert_eq!(jv, vec![0.0]);
    }

    #[test]
    fn square_derivative() {
        let (v, jv) = directional_derivative(&Square, &[3.0], &[1.0]).unwrap();
        assert_eq!((v[0], jv[0]), (9.0, 6.0));
    }

    #[test]
    fn identity_component_is_preserved() {
        let (v, jv) = directional_derivative(&Passthrough, &[5.0, 2.0], &[-1.0, 0.25]).unwrap();
        assert_eq!((v[1], jv[1]), (2.0, 0.25));
    }

    #[test]
    fn domain_violation_propagates() {
        let err = Dual::apply(Prim::Log, &[Dual::new(-1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, AdError::Domain { op: "log", .. }));
        struct Bad;
        impl VectorFunction for Bad {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![(x[0] - x[0]).ln() * 0.0]
            }
        }
        let err = directional_derivative(&Bad, &[1.0], &[1.0]).unwrap_err();
        assert!(matches!(err, AdError::Domain { op: "log", .. }));
        // the sticky error does not leak into the next sweep
        assert!(directional_derivative(&Square, &[2.0], &[1.0]).is_ok());
    }

    #[test]
    fn dimension_and_arity_checks() {
        assert!(matches!(
            directional_derivative(&Square, &[1.0], &[1.0, 0.0]),
            Err(AdError::Dimension { .. })
        ));
        assert!(matches!(
            Dual::apply(Prim::Add, &[Dual::constant(1.0)]),
            Err(AdError::Arity { .. })
        ));
    }
}
