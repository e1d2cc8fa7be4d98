use std::path::PathBuf;
use std::process::ExitCode;

use ad_bench::harness::{log_normal_dot, run_bench, write_csv, BenchName, BenchParams};
use ad_bench::problem::Constants;
use clap::Parser;

/// Times the matrix-exponential or steady-state sensitivity experiment and
/// writes one CSV row per (method, size, repetition).
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[arg(long, value_enum)]
    name: BenchName,
    /// Timed repetitions per method and size (one extra warm-up is discarded).
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated state counts for the algebra experiment.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 12, 20, 28])]
    states: Vec<usize>,
    /// Residual max-norm at which Newton stops.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Fixed Newton step multiplier in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    step_size: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    #[arg(long, default_value_t = 0.5)]
    k2: f64,
    #[arg(long, default_value_t = 1000.0)]
    dose: f64,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    /// Number of random matrices for the matexp experiment.
    #[arg(long, default_value_t = 1000)]
    matrices: usize,
    /// Also write the log-normal example graph in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    if let Some(path) = &cli.dot {
        let written = log_normal_dot()
            .map_err(|e| e.to_string())
            .and_then(|dot| std::fs::write(path, dot).map_err(|e| e.to_string()));
        if let Err(e) = written {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }

    let params = BenchParams {
        states: cli.states,
        tol: cli.tol,
        step_size: cli.step_size,
        max_iter: cli.max_iter,
        constants: Constants {
            k_pop: (cli.k1, cli.k2),
            dose: cli.dose,
            dt: cli.dt,
        },
        n_matrices: cli.matrices,
    };
    let report = match run_bench(cli.name, &params, cli.repeats, cli.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_csv(&cli.out, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }

    let mut failed = false;
    for r in report.failures().filter(|r| r.rep == 1) {
        eprintln!(
            "failed: {} {} n_states={}: {}",
            r.bench_name,
            r.method,
            r.n_states,
            r.failure.as_deref().unwrap_or("")
        );
        failed = true;
    }
    for c in report.cross_check_failures() {
        eprintln!(
            "failed: methods disagree at n_states={} (max relative difference {:e})",
            c.n_states, c.max_rel_diff
        );
        failed = true;
    }
    if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
