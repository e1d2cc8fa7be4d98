//! Desk-scale reruns of two experiments: the closed-form 2x2 matrix
//! exponential with and without shared subexpressions, and sensitivities of a
//! dosing steady state computed by differentiating Newton's iterations versus
//! the implicit function theorem.

pub mod harness;
pub mod problem;
pub mod sampling;
