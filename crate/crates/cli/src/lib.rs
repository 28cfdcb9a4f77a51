//! Command-line front end for `torusdet`.

pub mod args;
pub mod compute;
pub mod output;
pub mod suite;

use std::ffi::OsString;

use args::{parse_args, read_tau_grid, Command, GridError, RunConfig};
use num_complex::Complex64;
use output::{exit_code, with_sink, write_records, write_reports, EXIT_FAIL, EXIT_IO, EXIT_USAGE};

/// Runs a full invocation and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let grid = match &cfg.tau_grid {
        Some(path) => match read_tau_grid(path) {
            Ok(g) => Some(g),
            Err(GridError::Io(e)) => {
                eprintln!("error: cannot read --tau-grid {}: {e}", path.display());
                return EXIT_IO;
            }
            Err(GridError::Format(msg)) => {
                eprintln!("error: invalid value for '--tau-grid': {}: {msg}", path.display());
                return EXIT_USAGE;
            }
        },
        None => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.threads {
        builder = builder.num_threads(k);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_IO;
        }
    };
    pool.install(|| execute(&cfg, grid))
}

fn execute(cfg: &RunConfig, grid: Option<Vec<Complex64>>) -> i32 {
    let sink = cfg.out.as_deref();
    let written = match cfg.command {
        Command::Verify { target } => {
            let taus = grid.or_else(|| cfg.tau.map(|t| vec![t]));
            let reports = suite::run_suite(cfg, target, taus.as_deref());
            with_sink(sink, |w| write_reports(&reports, cfg.format, w)).map(|_| exit_code(&reports))
        }
        _ => {
            let taus = grid.unwrap_or_else(|| vec![cfg.tau.unwrap_or(compute::I)]);
            match compute::run_compute(cfg, &taus) {
                Ok(rows) => with_sink(sink, |w| write_records(&rows, cfg.format, w)).map(|_| 0),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_FAIL;
                }
            }
        }
    };
    written.unwrap_or_else(|e| {
        eprintln!("error: cannot write output: {e}");
        EXIT_IO
    })
}
