//! Closed-form exponential of a 2x2 matrix with real eigenvalues.
//!
//! With `delta = sqrt((a - d)^2 + 4bc)`:
//!
//! ```text
//! exp(A) = e^{(a+d)/2} / delta * [ delta cosh(delta/2) + (a-d) sinh(delta/2)   2b sinh(delta/2)
//!                                  2c sinh(delta/2)   delta cosh(delta/2) + (d-a) sinh(delta/2) ]
//! ```
//!
//! [`matexp_standard`] transcribes each entry independently, repeating the
//! shared subexpressions; [`matexp_optimized`] computes each of them once and
//! so records a smaller graph.

use crate::error::{AdError, Result};
use crate::scalar::{Scalar, VectorFunction};
use crate::tape::Tape;

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<S> {
    pub a: S,
    pub b: S,
    pub c: S,
    pub d: S,
}

impl<S: Copy> Mat2<S> {
    pub fn new(a: S, b: S, c: S, d: S) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_array([a, b, c, d]: [S; 4]) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn to_array(self) -> [S; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Implementation {
    Standard,
    Optimized,
}

impl Implementation {
    pub fn name(self) -> &'static str {
        match self {
            Implementation::Standard => "standard",
            Implementation::Optimized => "optimized",
        }
    }

    pub fn apply<S: Scalar>(self, m: Mat2<S>) -> Result<Mat2<S>> {
        match self {
            Implementation::Standard => matexp_standard(m),
            Implementation::Optimized => matexp_optimized(m),
        }
    }
}

fn delta<S: Scalar>(m: &Mat2<S>) -> Result<S> {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let disc = (a - d).square() + b * 4.0 * c;
    if !(disc.value() > 0.0) {
        return Err(AdError::Discriminant(disc.value()));
    }
    Ok(disc.sqrt())
}

pub fn matexp_standard<S: Scalar>(m: Mat2<S>) -> Result<Mat2<S>> {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let delta = delta(&m)?;
    let b00 =
        ((a + d) * 0.5).exp() * (delta * (delta * 0.5).cosh() + (a - d) * (delta * 0.5).sinh());
    let b01 = b * 2.0 * ((a + d) * 0.5).exp() * (delta * 0.5).sinh();
    let b10 = c * 2.0 * ((a + d) * 0.5).exp() * (delta * 0.5).sinh();
    let b11 =
        ((a + d) * 0.5).exp() * (delta * (delta * 0.5).cosh() + (d - a) * (delta * 0.5).sinh());
    Ok(Mat2::new(
        b00 / delta,
        b01 / delta,
        b10 / delta,
        b11 / delta,
    ))
}

pub fn matexp_optimized<S: Scalar>(m: Mat2<S>) -> Result<Mat2<S>> {
    let (a, b, c, d) = (m.a, m.b, m.c, m.d);
    let delta = delta(&m)?;
    let half_delta = delta * 0.5;
    let cosh_half_delta = half_delta.cosh();
    let sinh_half_delta = half_delta.sinh();
    let exp_half_a_plus_d = ((a + d) * 0.5).exp();
    let two_exp_sinh = exp_half_a_plus_d * 2.0 * sinh_half_delta;
    let delta_cosh = delta * cosh_half_delta;
    let ad_sinh_half_delta = (a - d) * sinh_half_delta;

    let b00 = exp_half_a_plus_d * (delta_cosh + ad_sinh_half_delta);
    let b01 = b * two_exp_sinh;
    let b10 = c * two_exp_sinh;
    let b11 = exp_half_a_plus_d * (delta_cosh - ad_sinh_half_delta);
    Ok(Mat2::new(
        b00 / delta,
        b01 / delta,
        b10 / delta,
        b11 / delta,
    ))
}

/// `exp(A)` flattened, as a `R^4 -> R^4` map for Jacobian drivers. Inputs
/// outside the formula's domain yield NaN entries.
#[derive(Debug, Clone, Copy)]
pub struct MatExpMap(pub Implementation);

impl VectorFunction for MatExpMap {
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let m = Mat2::new(x[0], x[1], x[2], x[3]);
        match self.0.apply(m) {
            Ok(e) => e.to_array().to_vec(),
            Err(_) => vec![x[0].lift(f64::NAN); 4],
        }
    }
}

/// Nodes recorded for one evaluation, including the four input nodes.
pub fn node_count(imp: Implementation, m: Mat2<f64>) -> Result<usize> {
    let tape = Tape::new();
    let x = m
        .to_array()
        .iter()
        .map(|&v| tape.new_input(v))
        .collect::<Result<Vec<_>>>()?;
    imp.apply(Mat2::new(x[0], x[1], x[2], x[3]))?;
    tape.check()?;
    Ok(tape.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::{jacobian_forward, jacobian_reverse};

    const BOTH: [Implementation; 2] = [Implementation::Standard, Implementation::Optimized];

    /// Scaling-and-squaring Taylor series.
    fn expm_series(m: [f64; 4]) -> [f64; 4] {
        let norm = m.iter().map(|v| v.abs()).fold(0.0, f64::max) * 2.0;
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as i32
        } else {
            0
        };
        let scale = 2f64.powi(-s);
        let a = m.map(|v| v * scale);
        let mul = |x: [f64; 4], y: [f64; 4]| {
            [
                x[0] * y[0] + x[1] * y[2],
                x[0] * y[1] + x[1] * y[3],
                x[2] * y[0] + x[3] * y[2],
                x[2] * y[1] + x[3] * y[3],
            ]
        };
        let mut term = [1.0, 0.0, 0.0, 1.0];
        let mut sum = term;
        for k in 1..60 {
            term = mul(term, a).map(|v| v / k as f64);
            for i in 0..4 {
                sum[i] += term[i];
            }
        }
        for _ in 0..s {
            sum = mul(sum, sum);
        }
        sum
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn diagonal_case() {
        for imp in BOTH {
            let e = imp.apply(Mat2::new(1.0, 0.0, 0.0, 2.0)).unwrap();
            assert!(rel(e.a, 1f64.exp()) < 1e-12);
            assert!(rel(e.d, 2f64.exp()) < 1e-12);
            assert_eq!((e.b, e.c), (0.0, 0.0));
        }
    }

    #[test]
    fn near_zero_matrix_is_near_identity() {
        for imp in BOTH {
            let e = imp.apply(Mat2::new(1e-6, 0.0, 0.0, -1e-6)).unwrap();
            for (got, want) in e.to_array().iter().zip([1.0, 0.0, 0.0, 1.0]) {
                assert!((got - want).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn rejects_complex_or_zero_delta() {
        for imp in BOTH {
            assert!(matches!(
                imp.apply(Mat2::new(1.0, -1.0, 1.0, 1.0)),
                Err(AdError::Discriminant(v)) if v < 0.0
            ));
            assert!(matches!(
                imp.apply(Mat2::new(0.0, 0.0, 0.0, 0.0)),
                Err(AdError::Discriminant(v)) if v == 0.0
            ));
        }
    }

    #[test]
    fn matches_series_oracle() {
        let samples = [
            [1.0, 2.0, 3.0, 4.0],
            [9.5, 1.2, 7.7, 3.3],
            [2.0, 10.0, 10.0, 1.0],
            [0.3, -0.2, 0.4, -1.1],
        ];
        for m in samples {
            let want = expm_series(m);
            for imp in BOTH {
                let got = imp.apply(Mat2::from_array(m)).unwrap().to_array();
                for i in 0..4 {
                    assert!(rel(got[i], want[i]) < 1e-9, "{m:?} {imp:?} {i}");
                }
            }
        }
    }

    #[test]
    fn determinant_is_exp_trace() {
        let m = Mat2::new(3.0, 1.5, 2.5, 4.0);
        for imp in BOTH {
            let e = imp.apply(m).unwrap();
            assert!(rel(e.a * e.d - e.b * e.c, 7f64.exp()) < 1e-9);
        }
    }

    #[test]
    fn optimized_records_fewer_nodes() {
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let std = node_count(Implementation::Standard, m).unwrap();
        let opt = node_count(Implementation::Optimized, m).unwrap();
        assert_eq!((std, opt), (54, 31));
    }

    #[test]
    fn sixteen_sensitivities_agree() {
        let x = [2.0, 3.5, 1.25, 6.0];
        let js = jacobian_reverse(&MatExpMap(Implementation::Standard), &x).unwrap();
        let jo = jacobian_reverse(&MatExpMap(Implementation::Optimized), &x).unwrap();
        let jf = jacobian_forward(&MatExpMap(Implementation::Standard), &x).unwrap();
        assert!(js.max_rel_diff(&jo) < 1e-10);
        assert!(js.max_rel_diff(&jf) < 1e-12);
        // against differences of the series oracle
        for k in 0..4 {
            let h = 1e-6 * x[k].abs();
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (ep, em) = (expm_series(xp), expm_series(xm));
            for i in 0..4 {
                let fd = (ep[i] - em[i]) / (2.0 * h);
                assert!(rel(js.get(i, k), fd) < 1e-6, "d{i}/d{k}");
            }
        }
    }
}
