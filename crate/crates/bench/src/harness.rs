//! Timed runs of the two experiments and CSV output.

use std::fs::File;
use std::hint::black_box;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ad_core::fixtures::LogNormal;
use ad_core::jacobian::jacobian_reverse;
use ad_core::matexp::{Implementation, MatExpMap};
use ad_core::solve::{
    solve_and_diff_ift, solve_and_diff_naive, JySource, Sensitivities, SolverConfig,
};
use ad_core::{JacobianMatrix, Tape, VectorFunction};
use thiserror::Error;

use crate::problem::{build_problem_with, Constants, SteadyStateProblem};
use crate::sampling::random_matrices;

pub const CSV_HEADER: [&str; 5] = ["bench_name", "method", "n_states", "rep", "runtime_ns"];

/// Relative tolerance for the three algebra methods to agree.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchName {
    Matexp,
    Algebra,
}

impl BenchName {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchName::Matexp => "matexp",
            BenchName::Algebra => "algebra",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraMethod {
    Naive,
    IftAnalyticJy,
    IftAdJy,
}

impl AlgebraMethod {
    pub const ALL: [AlgebraMethod; 3] = [
        AlgebraMethod::Naive,
        AlgebraMethod::IftAnalyticJy,
        AlgebraMethod::IftAdJy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgebraMethod::Naive => "naive",
            AlgebraMethod::IftAnalyticJy => "ift_analytic_Jy",
            AlgebraMethod::IftAdJy => "ift_ad_Jy",
        }
    }

    pub fn run(
        self,
        problem: &SteadyStateProblem,
        theta: &[f64],
        config: &SolverConfig,
    ) -> ad_core::Result<Sensitivities> {
        match self {
            AlgebraMethod::Naive => {
                solve_and_diff_naive(problem, theta, &config.clone().with_jy(JySource::Analytic))
            }
            AlgebraMethod::IftAnalyticJy => {
                solve_and_diff_ift(problem, theta, &config.clone().with_jy(JySource::Analytic))
            }
            AlgebraMethod::IftAdJy => {
                solve_and_diff_ift(problem, theta, &config.clone().with_jy(JySource::AutoDiff))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    /// State counts for the algebra experiment; each must be even.
    pub states: Vec<usize>,
    pub tol: f64,
    /// Fixed Newton step multiplier.
    pub step_size: f64,
    pub max_iter: usize,
    pub constants: Constants,
    pub n_matrices: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            states: vec![4, 12, 20, 28],
            tol: 1e-10,
            step_size: 0.5,
            max_iter: 1000,
            constants: Constants::default(),
            n_matrices: 1000,
        }
    }
}

impl BenchParams {
    pub fn solver_config(&self, n_states: usize) -> SolverConfig {
        SolverConfig::new(vec![0.0; n_states])
            .with_tol(self.tol)
            .with_step_size(self.step_size)
            .with_max_iter(self.max_iter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub bench_name: &'static str,
    pub method: &'static str,
    pub n_states: usize,
    /// 1-based.
    pub rep: usize,
    /// Zero when the run failed.
    pub runtime_ns: u64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub n_states: usize,
    /// Largest relative difference of either IFT Jacobian from the naive one.
    pub max_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub seed: u64,
    pub records: Vec<BenchRecord>,
    pub cross_checks: Vec<CrossCheck>,
}

impl BenchReport {
    pub fn failures(&self) -> impl Iterator<Item = &BenchRecord> {
        self.records.iter().filter(|r| r.failure.is_some())
    }

    pub fn cross_check_failures(&self) -> impl Iterator<Item = &CrossCheck> {
        self.cross_checks
            .iter()
            .filter(|c| !(c.max_rel_diff <= CROSS_CHECK_TOL))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn time_ns(f: impl FnOnce()) -> u64 {
    let start = Instant::now();
    f();
    (start.elapsed().as_nanos() as u64).max(1)
}

/// Runs one warm-up (discarded) and `repeats` timed repetitions per method
/// and size. Rows come back sorted by `(bench, method, n_states, rep)`.
pub fn run_bench(
    name: BenchName,
    params: &BenchParams,
    repeats: usize,
    seed: u64,
) -> Result<BenchReport, BenchError> {
    if repeats == 0 {
        return Err(BenchError::InvalidParams(
            "repeats must be at least 1".into(),
        ));
    }
    let mut report = BenchReport {
        seed,
        records: Vec::new(),
        cross_checks: Vec::new(),
    };
    match name {
        BenchName::Matexp => run_matexp(params, repeats, seed, &mut report)?,
        BenchName::Algebra => run_algebra(params, repeats, seed, &mut report)?,
    }
    report.records.sort_by(|a, b| {
        (a.bench_name, a.method, a.n_states, a.rep).cmp(&(
            b.bench_name,
            b.method,
            b.n_states,
            b.rep,
        ))
    });
    Ok(report)
}

fn rows(
    bench: BenchName,
    method: &'static str,
    n_states: usize,
    repeats: usize,
    mut timed: impl FnMut() -> Result<u64, String>,
) -> Vec<BenchRecord> {
    (1..=repeats)
        .map(|rep| {
            let (runtime_ns, failure) = match timed() {
                Ok(ns) => (ns, None),
                Err(e) => (0, Some(e)),
            };
            BenchRecord {
                bench_name: bench.as_str(),
                method,
                n_states,
                rep,
                runtime_ns,
                failure,
            }
        })
        .collect()
}

/// Value and all 16 sensitivities for every matrix.
pub fn matexp_workload(imp: Implementation, matrices: &[[f64; 4]]) -> ad_core::Result<f64> {
    let mut checksum = 0.0;
    for m in matrices {
        let j = jacobian_reverse(&MatExpMap(imp), m)?;
        checksum += j.as_slice().iter().sum::<f64>();
    }
    Ok(checksum)
}

fn run_matexp(
    params: &BenchParams,
    repeats: usize,
    seed: u64,
    report: &mut BenchReport,
) -> Result<(), BenchError> {
    if params.n_matrices == 0 {
        return Err(BenchError::InvalidParams("need at least one matrix".into()));
    }
    let matrices = random_matrices(params.n_matrices, seed);
    for imp in [Implementation::Standard, Implementation::Optimized] {
        let run = || matexp_workload(imp, black_box(&matrices)).map_err(|e| e.to_string());
        let warm = run();
        let mut timed = || {
            if let Err(e) = &warm {
                return Err(e.clone());
            }
            let mut out = Ok(0.0);
            let ns = time_ns(|| out = run());
            black_box(out?);
            Ok(ns)
        };
        report
            .records
            .extend(rows(BenchName::Matexp, imp.name(), 2, repeats, &mut timed));
    }
    Ok(())
}

fn run_algebra(
    params: &BenchParams,
    repeats: usize,
    seed: u64,
    report: &mut BenchReport,
) -> Result<(), BenchError> {
    if params.states.is_empty() {
        return Err(BenchError::InvalidParams("no state counts given".into()));
    }
    if let Some(&n) = params.states.iter().find(|&&n| n == 0 || n % 2 != 0) {
        return Err(BenchError::InvalidParams(format!(
            "state count {n} is not a positive even number (two states per patient)"
        )));
    }
    for &n_states in &params.states {
        let problem =
            build_problem_with(n_states / 2, seed, params.constants).map_err(|e| e.to_string());
        let config = params.solver_config(n_states);
        let mut jacobians: Vec<Option<JacobianMatrix>> = Vec::new();
        for method in AlgebraMethod::ALL {
            let run = || -> Result<Sensitivities, String> {
                let p = problem.as_ref().map_err(|e| e.clone())?;
                method
                    .run(p, &p.theta(), &config)
                    .map_err(|e| e.to_string())
            };
            let warm = run();
            jacobians.push(warm.as_ref().ok().map(|s| s.jacobian.clone()));
            let mut timed = || {
                if let Err(e) = &warm {
                    return Err(e.clone());
                }
                let mut out = Err(String::new());
                let ns = time_ns(|| out = run());
                black_box(out?);
                Ok(ns)
            };
            report.records.extend(rows(
                BenchName::Algebra,
                method.name(),
                n_states,
                repeats,
                &mut timed,
            ));
        }
        if let [Some(naive), Some(analytic), Some(ad)] = &jacobians[..] {
            report.cross_checks.push(CrossCheck {
                n_states,
                max_rel_diff: naive.max_rel_diff(analytic).max(naive.max_rel_diff(ad)),
            });
        }
    }
    Ok(())
}

/// Writes a `# seed=` comment line, the header, and one line per record.
pub fn write_csv(path: &Path, report: &BenchReport) -> Result<(), BenchError> {
    let io_err = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io_err)?;
    writeln!(file, "# seed={}", report.seed).map_err(io_err)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| io_err(e.into());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.records {
        w.write_record([
            r.bench_name.to_string(),
            r.method.to_string(),
            r.n_states.to_string(),
            r.rep.to_string(),
            r.runtime_ns.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// DOT graph of the log-normal log density at `(y, mu, sigma) = (10, 5, 2)`.
pub fn log_normal_dot() -> ad_core::Result<String> {
    let tape = Tape::new();
    let x = [10.0, 5.0, 2.0]
        .iter()
        .map(|&v| tape.new_input(v))
        .collect::<ad_core::Result<Vec<_>>>()?;
    let out = LogNormal.eval(&x);
    tape.export_dot(out[0])
}
