//! The primitive operator set and its partial-derivative table.
//!
//! Forward (dual) and reverse (tape) mode both obtain local partials from
//! [`local`], so the two modes cannot disagree on a primitive's derivative.

use crate::error::{AdError, Result};
use crate::scalar::Real;

/// Elementary operations with at most two differentiable operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Log,
    Exp,
    Sqrt,
    Square,
    /// `x^p` for a constant exponent.
    Pow(f64),
    Cosh,
    Sinh,
    Sin,
    Cos,
    /// `c * x`.
    Scale(f64),
    /// `x + c`.
    AddConst(f64),
}

/// FMA-proxy cost of one primitive: primal evaluation and local partials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimCost {
    pub eval: u64,
    pub partials: u64,
}

impl Prim {
    pub fn arity(self) -> usize {
        match self {
            Prim::Add | Prim::Sub | Prim::Mul | Prim::Div => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "add",
            Prim::Sub => "sub",
            Prim::Mul => "mul",
            Prim::Div => "div",
            Prim::Neg => "neg",
            Prim::Log => "log",
            Prim::Exp => "exp",
            Prim::Sqrt => "sqrt",
            Prim::Square => "square",
            Prim::Pow(_) => "pow",
            Prim::Cosh => "cosh",
            Prim::Sinh => "sinh",
            Prim::Sin => "sin",
            Prim::Cos => "cos",
            Prim::Scale(_) => "scale",
            Prim::AddConst(_) => "add_const",
        }
    }

    /// Operation counts, one unit per arithmetic operation or transcendental call.
    /// Partials that are plain copies of operand values (or constants) are free.
    pub fn cost(self) -> PrimCost {
        let partials = match self {
            Prim::Add | Prim::Sub | Prim::Mul | Prim::Neg => 0,
            Prim::Exp | Prim::Scale(_) | Prim::AddConst(_) => 0,
            // 1/b, then -v/b
            Prim::Div => 2,
            // c * x^(c-1)
            Prim::Pow(_) => 2,
            Prim::Log | Prim::Sqrt | Prim::Square => 1,
            Prim::Cosh | Prim::Sinh | Prim::Sin | Prim::Cos => 1,
        };
        PrimCost { eval: 1, partials }
    }
}

/// Value and local partials of one primitive application.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local<T> {
    pub value: T,
    pub partials: [T; 2],
}

/// Evaluates `prim` at `(a, b)` (`b` is ignored for unary primitives) and returns
/// the value together with the analytic partials at that point.
///
/// Rejects arguments outside the primitive's domain and any non-finite result.
pub(crate) fn local<T: Real>(prim: Prim, a: T, b: T) -> Result<Local<T>> {
    let zero = T::zero();
    let (value, partials) = match prim {
        Prim::Add => (a + b, [T::one(), T::one()]),
        Prim::Sub => (a - b, [T::one(), -T::one()]),
        Prim::Mul => (a * b, [b, a]),
        Prim::Div => {
            if b.value() == 0.0 {
                return Err(AdError::DivisionByZero);
            }
            let v = a / b;
            let inv = T::one() / b;
            (v, [inv, -(v * inv)])
        }
        Prim::Neg => (-a, [-T::one(), zero]),
        Prim::Log => {
            if a.value() <= 0.0 {
                return Err(domain(prim, a));
            }
            (a.ln(), [T::one() / a, zero])
        }
        Prim::Exp => {
            let v = a.exp();
            (v, [v, zero])
        }
        Prim::Sqrt => {
            if a.value() <= 0.0 {
                return Err(domain(prim, a));
            }
            let v = a.sqrt();
            (v, [T::from_f64(0.5) / v, zero])
        }
        Prim::Square => (a * a, [a * 2.0, zero]),
        Prim::Pow(p) => {
            let v = a.powf(p);
            (v, [a.powf(p - 1.0) * p, zero])
        }
        Prim::Cosh => (a.cosh(), [a.sinh(), zero]),
        Prim::Sinh => (a.sinh(), [a.cosh(), zero]),
        Prim::Sin => (a.sin(), [a.cos(), zero]),
        Prim::Cos => (a.cos(), [-a.sin(), zero]),
        Prim::Scale(c) => (a * c, [T::from_f64(c), zero]),
        Prim::AddConst(c) => (a + c, [T::one(), zero]),
    };
    if !value.is_finite() || !partials[0].is_finite() || !partials[1].is_finite() {
        return Err(domain(prim, a));
    }
    Ok(Local { value, partials })
}

fn domain<T: Real>(prim: Prim, a: T) -> AdError {
    AdError::Domain {
        op: prim.name(),
        arg: a.value(),
    }
}
