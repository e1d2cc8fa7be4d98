//! Second derivatives by forward-over-reverse.
//!
//! The function is recorded on a tape whose node values are [`Dual`] numbers:
//! input tangents carry the direction `v`, so every stored local partial also
//! carries its directional derivative. A reverse sweep seeded with
//! `Dual(w, u)` then leaves `u * grad f + w * (H v)` in the tangent part of the
//! input adjoints. With `u = 0, w = 1` that is the Hessian-vector product.

use crate::dual::{check_finite, Dual};
use crate::error::{AdError, Result};
use crate::jacobian::JacobianMatrix;
use crate::scalar::VectorFunction;
use crate::tape::{Tape, VarRef};

/// Coefficients of `u * grad f + w * (H v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HvpSeed {
    pub u: f64,
    pub w: f64,
    pub v: Vec<f64>,
}

impl HvpSeed {
    /// The plain product `H v`.
    pub fn hessian_vector(v: Vec<f64>) -> Self {
        HvpSeed { u: 0.0, w: 1.0, v }
    }
}

fn record<'t, F: VectorFunction>(
    tape: &'t Tape<Dual>,
    f: &F,
    x: &[f64],
    v: &[f64],
) -> Result<(VarRef<'t, Dual>, Vec<VarRef<'t, Dual>>)> {
    let inputs = x
        .iter()
        .zip(v)
        .map(|(&xi, &vi)| tape.new_input(Dual::new(xi, vi)))
        .collect::<Result<Vec<_>>>()?;
    let out = f.eval(&inputs);
    tape.check()?;
    if out.len() != 1 {
        return Err(AdError::Dimension {
            expected: 1,
            found: out.len(),
        });
    }
    Ok((out[0], inputs))
}

fn check_args(x: &[f64], v: &[f64]) -> Result<()> {
    if x.len() != v.len() {
        return Err(AdError::Dimension {
            expected: x.len(),
            found: v.len(),
        });
    }
    check_finite("input", x)?;
    check_finite("direction", v)
}

/// `u * grad f(x) + w * H(x) v` for scalar `f`.
pub fn hvp_general<F: VectorFunction>(f: &F, x: &[f64], seed: &HvpSeed) -> Result<Vec<f64>> {
    check_args(x, &seed.v)?;
    let tape = Tape::<Dual>::new();
    let (out, inputs) = record(&tape, f, x, &seed.v)?;
    let adj = tape.reverse_sweep(out, Dual::new(seed.w, seed.u))?;
    Ok(inputs.iter().map(|&i| adj.get(i).tangent).collect())
}

/// Hessian-vector product `H(x) v` for scalar `f`.
pub fn hvp<F: VectorFunction>(f: &F, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    hvp_general(f, x, &HvpSeed::hessian_vector(v.to_vec()))
}

/// Dense Hessian from `n` products with basis directions. The graph is
/// recorded once; later directions replay the stored graph with new tangents.
pub fn hessian<F: VectorFunction>(f: &F, x: &[f64]) -> Result<JacobianMatrix> {
    let n = x.len();
    let mut h = JacobianMatrix::zeros(n, n);
    if n == 0 {
        return Ok(h);
    }
    check_finite("input", x)?;
    let basis = |k: usize| -> Vec<f64> { (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect() };

    let tape = Tape::<Dual>::new();
    let (out, inputs) = record(&tape, f, x, &basis(0))?;
    for k in 0..n {
        if k > 0 {
            let seeded: Vec<Dual> = x
                .iter()
                .zip(basis(k))
                .map(|(&xi, vi)| Dual::new(xi, vi))
                .collect();
            tape.replay(&seeded)?;
        }
        let adj = tape.reverse_sweep(out, Dual::new(1.0, 0.0))?;
        for (i, &input) in inputs.iter().enumerate() {
            h.set(i, k, adj.get(input).tangent);
        }
    }
    Ok(h)
}
