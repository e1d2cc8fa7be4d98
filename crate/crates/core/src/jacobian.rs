//! Jacobian accumulation.
//!
//! Forward mode builds one column per sweep from basis tangents; reverse mode
//! records the function once and runs one basis-cotangent sweep per row over
//! the same tape. [`jacobian_auto`] picks reverse when there are more inputs
//! than outputs and forward otherwise (ties go to forward, which keeps no graph).

use std::fmt;
use std::ops::Index;

use crate::dual::{check_finite, directional_derivative};
use crate::error::{AdError, Result};
use crate::scalar::VectorFunction;
use crate::tape::Tape;

/// Dense row-major `rows x cols` matrix of partials `J[i][j] = d f_i / d x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl JacobianMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        JacobianMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(AdError::Dimension {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(JacobianMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> JacobianMatrix {
        let mut t = JacobianMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Largest entrywise difference relative to `max(|a|, |b|)`; both-zero entries count as equal.
    pub fn max_rel_diff(&self, other: &JacobianMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for JacobianMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Display for JacobianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.6e}")).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedRole {
    Tangent,
    Cotangent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedVector {
    pub entries: Vec<f64>,
    pub role: SeedRole,
}

impl SeedVector {
    /// The `k`-th unit vector of length `len`.
    pub fn basis(len: usize, k: usize, role: SeedRole) -> Self {
        let mut entries = vec![0.0; len];
        entries[k] = 1.0;
        SeedVector { entries, role }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Reverse,
}

/// Reverse needs `m` sweeps, forward `n`; reverse wins only when `n > m`.
pub fn choose_mode(n_inputs: usize, n_outputs: usize) -> Mode {
    if n_inputs > n_outputs {
        Mode::Reverse
    } else {
        Mode::Forward
    }
}

/// `n` forward sweeps; column `j` is `J * e_j`.
pub fn jacobian_forward<F: VectorFunction>(f: &F, x: &[f64]) -> Result<JacobianMatrix> {
    let n = x.len();
    let mut jac: Option<JacobianMatrix> = None;
    for j in 0..n {
        let seed = SeedVector::basis(n, j, SeedRole::Tangent);
        let (_, col) = directional_derivative(f, x, &seed.entries)?;
        let jac = jac.get_or_insert_with(|| JacobianMatrix::zeros(col.len(), n));
        for (i, v) in col.into_iter().enumerate() {
            jac.set(i, j, v);
        }
    }
    match jac {
        Some(j) => Ok(j),
        // no inputs: evaluate once to learn the output dimension
        None => {
            let m = f.eval::<f64>(&[]).len();
            Ok(JacobianMatrix::zeros(m, 0))
        }
    }
}

/// Records `f` once and runs one reverse sweep per output.
pub fn jacobian_reverse<F: VectorFunction>(f: &F, x: &[f64]) -> Result<JacobianMatrix> {
    let mut tape = Tape::new();
    jacobian_reverse_on(&mut tape, f, x)
}

/// As [`jacobian_reverse`], recording on a caller-owned tape (cleared first)
/// so that its size and high-water mark can be inspected afterwards.
pub fn jacobian_reverse_on<F: VectorFunction>(
    tape: &mut Tape,
    f: &F,
    x: &[f64],
) -> Result<JacobianMatrix> {
    check_finite("input", x)?;
    tape.clear();
    let tape = &*tape;
    let inputs = x
        .iter()
        .map(|&v| tape.new_input(v))
        .collect::<Result<Vec<_>>>()?;
    let outputs = f.eval(&inputs);
    tape.check()?;

    let m = outputs.len();
    let mut jac = JacobianMatrix::zeros(m, x.len());
    for (i, &out) in outputs.iter().enumerate() {
        let adj = tape.reverse_sweep(out, 1.0)?;
        for (j, &input) in inputs.iter().enumerate() {
            jac.set(i, j, adj.get(input));
        }
    }
    Ok(jac)
}

/// Dispatches on [`choose_mode`]; `m` is the expected output dimension.
pub fn jacobian_auto<F: VectorFunction>(f: &F, x: &[f64], m: usize) -> Result<JacobianMatrix> {
    let jac = match choose_mode(x.len(), m) {
        Mode::Forward => jacobian_forward(f, x)?,
        Mode::Reverse => jacobian_reverse(f, x)?,
    };
    if jac.rows() != m {
        return Err(AdError::Dimension {
            expected: m,
            found: jac.rows(),
        });
    }
    Ok(jac)
}

/// Value and gradient of a scalar function with one reverse sweep.
pub fn gradient<F: VectorFunction>(f: &F, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_finite("input", x)?;
    let tape = Tape::new();
    let inputs = x
        .iter()
        .map(|&v| tape.new_input(v))
        .collect::<Result<Vec<_>>>()?;
    let out = f.eval(&inputs);
    if out.len() != 1 {
        return Err(AdError::Dimension {
            expected: 1,
            found: out.len(),
        });
    }
    let adj = tape.reverse_sweep(out[0], 1.0)?;
    Ok((
        out[0].primal(),
        inputs.iter().map(|&v| adj.get(v)).collect(),
    ))
}
