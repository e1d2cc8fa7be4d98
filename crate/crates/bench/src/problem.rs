//! Steady state of a one-compartment model with first-order absorption under
//! repeated dosing, one independent two-state block per patient.
//!
//! Per patient, between doses:
//!
//! ```text
//! dy1/dt = -k1 y1
//! dy2/dt =  k1 y1 - k2 y2
//! ```
//!
//! A dose adds `m` to the gut state `y1`. The pre-dose steady state solves
//! `g((y1 + m, y2), dt) - y = 0`, where `g` is the evolution operator over one
//! dosing interval.

use ad_core::solve::AlgebraicProblem;
use ad_core::{AdError, Result, Scalar};

use crate::sampling::UniformSource;

/// Rates closer than this are rejected; the closed form divides by `k2 - k1`.
pub const RATE_SEPARATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Population absorption and elimination rates, per time unit.
    pub k_pop: (f64, f64),
    pub dose: f64,
    pub dt: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            k_pop: (1.0, 0.5),
            dose: 1000.0,
            dt: 1.0,
        }
    }
}

/// Closed-form `g(y0, dt)` over any scalar. No checks; see [`evolve`].
pub fn evolve_scalar<S: Scalar>(y0: (S, S), k1: S, k2: S, dt: f64) -> (S, S) {
    let e1 = (k1 * -dt).exp();
    let e2 = (k2 * -dt).exp();
    let y1 = y0.0 * e1;
    let y2 = y0.1 * e2 + y0.0 * k1 / (k2 - k1) * (e1 - e2);
    (y1, y2)
}

pub fn evolve(y0: (f64, f64), k1: f64, k2: f64, dt: f64) -> Result<(f64, f64)> {
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(AdError::InvalidConfig(format!(
            "rates must be positive, got {k1}, {k2}"
        )));
    }
    if (k1 - k2).abs() <= RATE_SEPARATION {
        return Err(AdError::InvalidConfig(format!(
            "degenerate rates k1 = k2 = {k1}"
        )));
    }
    if !(dt >= 0.0) {
        return Err(AdError::InvalidConfig(format!("negative interval {dt}")));
    }
    Ok(evolve_scalar(y0, k1, k2, dt))
}

/// `n` patients. Parameters are laid out as
/// `[k1, k2, phi1_1, phi2_1, ..., phi1_n, phi2_n]` with patient rates
/// `k1_i = phi1_i k1` and `k2_i = phi2_i k2`; states as `[y1_1, y2_1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateProblem {
    pub n_patients: usize,
    pub constants: Constants,
    /// Per-patient `(phi1, phi2)`.
    pub phi: Vec<(f64, f64)>,
}

impl SteadyStateProblem {
    pub fn n_states(&self) -> usize {
        2 * self.n_patients
    }

    pub fn n_params(&self) -> usize {
        2 * self.n_patients + 2
    }

    /// The parameter vector at which the instance was drawn.
    pub fn theta(&self) -> Vec<f64> {
        let mut theta = vec![self.constants.k_pop.0, self.constants.k_pop.1];
        for &(p1, p2) in &self.phi {
            theta.extend([p1, p2]);
        }
        theta
    }

    pub fn rates(&self, patient: usize) -> (f64, f64) {
        let (p1, p2) = self.phi[patient];
        (p1 * self.constants.k_pop.0, p2 * self.constants.k_pop.1)
    }

    fn patient_rates<S: Scalar>(theta: &[S], i: usize) -> (S, S) {
        (theta[2 + 2 * i] * theta[0], theta[3 + 2 * i] * theta[1])
    }

    /// Residual with a dimension check, for callers outside the solver.
    pub fn steady_state_residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n_states() {
            return Err(AdError::Dimension {
                expected: self.n_states(),
                found: y.len(),
            });
        }
        Ok(self.residual(y, &self.theta()))
    }
}

impl AlgebraicProblem for SteadyStateProblem {
    fn n_states(&self) -> usize {
        SteadyStateProblem::n_states(self)
    }

    fn n_params(&self) -> usize {
        SteadyStateProblem::n_params(self)
    }

    fn residual<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        let Constants { dose, dt, .. } = self.constants;
        let mut r = Vec::with_capacity(y.len());
        for i in 0..self.n_patients {
            let (k1, k2) = Self::patient_rates(theta, i);
            let (y1, y2) = (y[2 * i], y[2 * i + 1]);
            let (g1, g2) = evolve_scalar((y1 + dose, y2), k1, k2, dt);
            r.push(g1 - y1);
            r.push(g2 - y2);
        }
        r
    }

    /// Block diagonal: `d g / d y0 - I` per patient, independent of `y`.
    fn jac_y<S: Scalar>(&self, y: &[S], theta: &[S]) -> Option<Vec<S>> {
        let n = self.n_states();
        let dt = self.constants.dt;
        let zero = y[0].lift(0.0);
        let mut j = vec![zero; n * n];
        for i in 0..self.n_patients {
            let (k1, k2) = Self::patient_rates(theta, i);
            let e1 = (k1 * -dt).exp();
            let e2 = (k2 * -dt).exp();
            let (r, c) = (2 * i, 2 * i);
            j[r * n + c] = e1 - 1.0;
            j[(r + 1) * n + c] = k1 / (k2 - k1) * (e1 - e2);
            j[(r + 1) * n + c + 1] = e2 - 1.0;
        }
        Some(j)
    }
}

pub fn build_problem(n_patients: usize, seed: u64) -> Result<SteadyStateProblem> {
    build_problem_with(n_patients, seed, Constants::default())
}

/// Draws `phi ~ U(0.7, 1.3)` patient by patient (`phi1` then `phi2`).
pub fn build_problem_with(
    n_patients: usize,
    seed: u64,
    constants: Constants,
) -> Result<SteadyStateProblem> {
    if n_patients == 0 {
        return Err(AdError::InvalidConfig("need at least one patient".into()));
    }
    let Constants { k_pop, dose, dt } = constants;
    if !(k_pop.0 > 0.0 && k_pop.1 > 0.0 && k_pop.0.is_finite() && k_pop.1.is_finite()) {
        return Err(AdError::InvalidConfig(format!(
            "population rates must be positive, got {k_pop:?}"
        )));
    }
    if !(dose >= 0.0 && dose.is_finite()) {
        return Err(AdError::InvalidConfig(format!(
            "dose must be non-negative, got {dose}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(AdError::InvalidConfig(format!(
            "dosing interval must be positive, got {dt}"
        )));
    }
    let mut rng = UniformSource::new(seed);
    let phi: Vec<(f64, f64)> = (0..n_patients)
        .map(|_| (rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3)))
        .collect();
    let problem = SteadyStateProblem {
        n_patients,
        constants,
        phi,
    };
    for i in 0..n_patients {
        let (k1, k2) = problem.rates(i);
        if (k1 - k2).abs() <= RATE_SEPARATION {
            return Err(AdError::InvalidConfig(format!(
                "patient {i} has degenerate rates {k1}"
            )));
        }
    }
    Ok(problem)
}
