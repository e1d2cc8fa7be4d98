//! Small reference functions used by tests, benchmarks and documentation.

use crate::scalar::{Scalar, VectorFunction};

/// Log density of `Normal(y | mu, sigma^2)` as a function of `(y, mu, sigma)`.
///
/// Recorded as ten nodes: three inputs, `y - mu`, the division by `sigma`,
/// the square, the `-1/2` scaling, `log(sigma)`, the difference and the
/// constant shift.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogNormal;

impl VectorFunction for LogNormal {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (y, mu, sigma) = (x[0], x[1], x[2]);
        let z = ((y - mu) / sigma).square() * -0.5;
        let half_log_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        vec![z - sigma.ln() - half_log_two_pi]
    }
}
