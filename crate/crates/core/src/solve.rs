//! Root finding for `f(y, theta) = 0` and the sensitivities `d y* / d theta`.
//!
//! Two ways to differentiate the solution:
//!
//! * [`solve_and_diff_naive`] records every Newton iteration on one tape and
//!   runs reverse sweeps through the whole trace. Tape size grows with the
//!   iteration count.
//! * [`solve_and_diff_ift`] treats the solver as a single super node. The
//!   root is found on plain `f64`, then `J = -[J_y]^{-1} J_theta` is formed at
//!   the solution from one Jacobian of the residual in `theta`. Tape size does
//!   not depend on how many iterations the solver took.

use crate::dual::check_finite;
use crate::error::{AdError, Result};
use crate::jacobian::{choose_mode, jacobian_forward, jacobian_reverse_on, JacobianMatrix, Mode};
use crate::linalg::lu_factor;
use crate::scalar::{Scalar, VectorFunction};
use crate::tape::Tape;

/// A square residual system `f(y, theta)`, `y` in `R^N`, `theta` in `R^K`.
pub trait AlgebraicProblem {
    fn n_states(&self) -> usize;
    fn n_params(&self) -> usize;

    fn residual<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S>;

    /// Analytic `d f / d y` in row-major order, if the problem provides one.
    fn jac_y<S: Scalar>(&self, _y: &[S], _theta: &[S]) -> Option<Vec<S>> {
        None
    }
}

/// Where `J_y` comes from inside the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JySource {
    /// Analytic when the problem has one, otherwise forward-mode AD.
    #[default]
    Auto,
    Analytic,
    AutoDiff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Threshold on the max-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed multiplier on the Newton step; 1 gives the undamped update.
    pub step_size: f64,
    pub y0: Vec<f64>,
    pub jy: JySource,
}

impl SolverConfig {
    pub fn new(y0: Vec<f64>) -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 100,
            step_size: 1.0,
            y0,
            jy: JySource::Auto,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_step_size(mut self, step_size: f64) -> Self {
        self.step_size = step_size;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_jy(mut self, jy: JySource) -> Self {
        self.jy = jy;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(AdError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(AdError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(AdError::InvalidConfig(format!(
                "step_size must lie in (0, 1], got {}",
                self.step_size
            )));
        }
        if self.y0.len() != n {
            return Err(AdError::Dimension {
                expected: n,
                found: self.y0.len(),
            });
        }
        check_finite("initial guess", &self.y0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub y: Vec<f64>,
    pub iterations: usize,
    /// Reverse or forward sweeps spent on `J_y` (zero with an analytic `J_y`).
    pub jy_sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivities {
    pub y: Vec<f64>,
    /// `N x K` matrix `d y* / d theta`.
    pub jacobian: JacobianMatrix,
    pub iterations: usize,
    /// Nodes on the tape used for differentiation.
    pub tape_nodes: usize,
    pub tape_high_water: usize,
    pub jy_sweeps: usize,
}

struct InY<'a, P> {
    problem: &'a P,
    theta: &'a [f64],
}

impl<P: AlgebraicProblem> VectorFunction for InY<'_, P> {
    fn eval<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let theta: Vec<S> = self.theta.iter().map(|&t| y[0].lift(t)).collect();
        self.problem.residual(y, &theta)
    }
}

struct InTheta<'a, P> {
    problem: &'a P,
    y: &'a [f64],
}

impl<P: AlgebraicProblem> VectorFunction for InTheta<'_, P> {
    fn eval<S: Scalar>(&self, theta: &[S]) -> Vec<S> {
        let y: Vec<S> = self.y.iter().map(|&v| theta[0].lift(v)).collect();
        self.problem.residual(&y, theta)
    }
}

fn max_norm<S: Scalar>(r: &[S]) -> f64 {
    r.iter()
        .map(|v| v.value().abs())
        .fold(0.0, |m, v| if v.is_nan() || v > m { v } else { m })
}

/// Newton iteration with a fixed step multiplier, generic over the scalar so
/// that it can also be recorded. Returns the iterate and the number of updates.
fn newton_iterate<S, J>(
    residual: impl Fn(&[S]) -> Vec<S>,
    mut jac_y: J,
    mut y: Vec<S>,
    config: &SolverConfig,
) -> Result<(Vec<S>, usize)>
where
    S: Scalar,
    J: FnMut(&[S]) -> Result<Vec<S>>,
{
    let n = y.len();
    for iter in 0..=config.max_iter {
        let r = residual(&y);
        if r.len() != n {
            return Err(AdError::Dimension {
                expected: n,
                found: r.len(),
            });
        }
        let norm = max_norm(&r);
        if norm <= config.tol {
            return Ok((y, iter));
        }
        if iter == config.max_iter || norm.is_nan() {
            return Err(AdError::NonConvergence {
                iterations: iter,
                residual: norm,
            });
        }
        let lu = lu_factor(jac_y(&y)?, n)?;
        let step = lu.solve(&r)?;
        for (yi, si) in y.iter_mut().zip(step) {
            *yi = *yi - si * config.step_size;
        }
    }
    unreachable!("loop returns on its last iteration")
}

fn check_dims<P: AlgebraicProblem>(
    problem: &P,
    theta: &[f64],
    config: &SolverConfig,
) -> Result<()> {
    if theta.len() != problem.n_params() {
        return Err(AdError::Dimension {
            expected: problem.n_params(),
            found: theta.len(),
        });
    }
    check_finite("parameter", theta)?;
    config.validate(problem.n_states())
}

fn use_analytic<P: AlgebraicProblem>(problem: &P, config: &SolverConfig) -> Result<bool> {
    let available = problem
        .jac_y::<f64>(&config.y0, &vec![0.0; problem.n_params()])
        .is_some();
    match config.jy {
        JySource::Auto => Ok(available),
        JySource::Analytic if available => Ok(true),
        JySource::Analytic => Err(AdError::MissingJacobian),
        JySource::AutoDiff => Ok(false),
    }
}

/// `J_y` on plain floats: analytic, or by forward sweeps (`N` inputs and `N`
/// outputs, so the mode heuristic picks forward).
fn jy_f64<P: AlgebraicProblem>(
    problem: &P,
    theta: &[f64],
    y: &[f64],
    analytic: bool,
    sweeps: &mut usize,
) -> Result<Vec<f64>> {
    if analytic {
        return problem.jac_y(y, theta).ok_or(AdError::MissingJacobian);
    }
    let n = problem.n_states();
    debug_assert_eq!(choose_mode(n, n), Mode::Forward);
    *sweeps += n;
    let j = jacobian_forward(&InY { problem, theta }, y)?;
    Ok(j.as_slice().to_vec())
}

/// Solves `f(y, theta) = 0` from `config.y0`; stops when `max |f| <= tol`.
pub fn newton_solve<P: AlgebraicProblem>(
    problem: &P,
    theta: &[f64],
    config: &SolverConfig,
) -> Result<Solution> {
    check_dims(problem, theta, config)?;
    let analytic = use_analytic(problem, config)?;
    let mut sweeps = 0;
    let (y, iterations) = newton_iterate(
        |y: &[f64]| problem.residual(y, theta),
        |y: &[f64]| jy_f64(problem, theta, y, analytic, &mut sweeps),
        config.y0.clone(),
        config,
    )?;
    Ok(Solution {
        y,
        iterations,
        jy_sweeps: sweeps,
    })
}

/// Records the full Newton trace with `theta` as tape inputs and reads
/// `d y / d theta` off `N` reverse sweeps. Needs an analytic `J_y` that can
/// itself be recorded.
pub fn solve_and_diff_naive<P: AlgebraicProblem>(
    problem: &P,
    theta: &[f64],
    config: &SolverConfig,
) -> Result<Sensitivities> {
    check_dims(problem, theta, config)?;
    let tape = Tape::new();
    let params = theta
        .iter()
        .map(|&t| tape.new_input(t))
        .collect::<Result<Vec<_>>>()?;
    let y0 = config
        .y0
        .iter()
        .map(|&v| tape.constant(v))
        .collect::<Result<Vec<_>>>()?;
    let traced = newton_iterate(
        |y| problem.residual(y, &params),
        |y| problem.jac_y(y, &params).ok_or(AdError::MissingJacobian),
        y0,
        config,
    );
    // a domain error on the tape explains a NaN residual better than non-convergence
    tape.check()?;
    let (y, iterations) = traced?;

    let mut jacobian = JacobianMatrix::zeros(y.len(), theta.len());
    for (i, &yi) in y.iter().enumerate() {
        let adj = tape.reverse_sweep(yi, 1.0)?;
        for (j, &p) in params.iter().enumerate() {
            jacobian.set(i, j, adj.get(p));
        }
    }
    Ok(Sensitivities {
        y: y.iter().map(|v| v.value()).collect(),
        jacobian,
        iterations,
        tape_nodes: tape.len(),
        tape_high_water: tape.high_water_mark(),
        jy_sweeps: 0,
    })
}

/// Super-node differentiation: solve on floats, then
/// `J = -[J_y(y*, theta)]^{-1} J_theta(y*, theta)`.
pub fn solve_and_diff_ift<P: AlgebraicProblem>(
    problem: &P,
    theta: &[f64],
    config: &SolverConfig,
) -> Result<Sensitivities> {
    let solution = newton_solve(problem, theta, config)?;
    let analytic = use_analytic(problem, config)?;
    let n = problem.n_states();
    let k = problem.n_params();
    let y = &solution.y;

    let mut sweeps = solution.jy_sweeps;
    let jy = jy_f64(problem, theta, y, analytic, &mut sweeps)?;

    let in_theta = InTheta { problem, y };
    let mut tape = Tape::new();
    let jtheta = match choose_mode(k, n) {
        Mode::Reverse => jacobian_reverse_on(&mut tape, &in_theta, theta)?,
        Mode::Forward => jacobian_forward(&in_theta, theta)?,
    };

    let lu = lu_factor(jy, n)?;
    let mut jacobian = JacobianMatrix::zeros(n, k);
    for j in 0..k {
        let rhs: Vec<f64> = jtheta.column(j).iter().map(|v| -v).collect();
        for (i, v) in lu.solve(&rhs)?.into_iter().enumerate() {
            jacobian.set(i, j, v);
        }
    }
    Ok(Sensitivities {
        y: solution.y,
        jacobian,
        iterations: solution.iterations,
        tape_nodes: tape.len(),
        tape_high_water: tape.high_water_mark(),
        jy_sweeps: sweeps,
    })
}
