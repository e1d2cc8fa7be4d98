//! Automatic differentiation engine.
//!
//! - [`tape`]: region-allocated reverse-mode tape with overloaded [`VarRef`] handles.
//! - [`dual`]: single-tangent dual numbers for forward mode.
//! - [`jacobian`]: full Jacobians by forward or reverse sweeps, with mode selection.
//! - [`checkpoint`]: memory-bounded reverse mode over segmented programs.
//! - [`solve`]: Newton root finding and its sensitivities, traced or through the
//!   implicit function theorem.
//! - [`matexp`]: closed-form 2x2 matrix exponential, standard and reduced.
//! - [`hessian`]: Hessian-vector products by forward-over-reverse.
//!
//! Functions to differentiate implement [`VectorFunction`] generically over
//! [`Scalar`], so the same code runs on `f64`, [`Dual`] and [`VarRef`].
//!
//! ```
//! use ad_core::{jacobian, Scalar, VectorFunction};
//!
//! struct F;
//! impl VectorFunction for F {
//!     fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
//!         vec![x[0] + x[1], x[0] * x[1]]
//!     }
//! }
//!
//! let j = jacobian::jacobian_reverse(&F, &[2.0, 3.0]).unwrap();
//! assert_eq!(j.row(1), &[3.0, 2.0]);
//! ```

pub mod checkpoint;
pub mod dual;
pub mod error;
pub mod fixtures;
pub mod hessian;
pub mod jacobian;
pub mod linalg;
pub mod matexp;
pub mod prim;
pub mod scalar;
pub mod solve;
pub mod tape;

pub use dual::Dual;
pub use error::{AdError, Result};
pub use jacobian::JacobianMatrix;
pub use prim::Prim;
pub use scalar::{Real, Scalar, VectorFunction};
pub use tape::{Adjoints, NodeId, OpCounter, Tape, VarRef};
