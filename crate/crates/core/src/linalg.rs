//! Dense LU factorization with partial pivoting, generic over [`Scalar`] so the
//! same elimination can be recorded on a tape.

use crate::error::{AdError, Result};
use crate::scalar::Scalar;

/// Pivots smaller than this fraction of their row's largest original entry
/// are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LuFactors<S> {
    n: usize,
    lu: Vec<S>,
    perm: Vec<usize>,
}

/// Factors the row-major `n x n` matrix `a` as `P A = L U`.
pub fn lu_factor<S: Scalar>(mut a: Vec<S>, n: usize) -> Result<LuFactors<S>> {
    if a.len() != n * n {
        return Err(AdError::Dimension {
            expected: n * n,
            found: a.len(),
        });
    }
    let mut scale: Vec<f64> = (0..n)
        .map(|i| {
            a[i * n..(i + 1) * n]
                .iter()
                .map(|v| v.value().abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (p, pivot) =
            (k..n)
                .map(|r| (r, a[r * n + k].value().abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if !(pivot > PIVOT_TOLERANCE * scale[p]) {
            return Err(AdError::SingularJacobian { column: k, pivot });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            scale.swap(k, p);
        }
        let akk = a[k * n + k];
        for i in k + 1..n {
            let l = a[i * n + k] / akk;
            a[i * n + k] = l;
            for j in k + 1..n {
                a[i * n + j] = a[i * n + j] - l * a[k * n + j];
            }
        }
    }
    Ok(LuFactors { n, lu: a, perm })
}

impl<S: Scalar> LuFactors<S> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        let n = self.n;
        if b.len() != n {
            return Err(AdError::Dimension {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[i * n + j] * x[j];
            }
            x[i] = x[i] / self.lu[i * n + i];
        }
        Ok(x)
    }
}
