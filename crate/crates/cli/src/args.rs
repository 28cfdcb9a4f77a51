//! Command-line parsing and validation into a [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use torusdet::spectral::HodgeComponent;

/// Largest complex dimension accepted on the command line.
pub const MAX_N: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "torusdet", version, about = "Determinants of Laplacians on flat complex tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Dedekind eta at each modulus.
    Eta,
    /// Weight-4 and weight-6 lattice sums, invariants and discriminant.
    Eisenstein,
    /// Epstein zeta of the period lattice at `--s`.
    Epstein,
    /// log det′ of the Hodge Laplacian on (0,q)-forms.
    Detlap,
    /// Heat trace at `--t`, or the fitted short-time expansion.
    Heat,
    /// Kuranishi fixed point for the standard harmonic basis.
    Kuranishi,
    /// Hessian of a determinant potential against the WP metric.
    Hessian,
    /// Run a group of verification checks.
    Verify {
        #[arg(value_enum)]
        target: VerifyTarget,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Kronecker,
    Spectral,
    Exterior,
    Kuranishi,
    Hessian,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Params {
    /// Modulus "a+bi" in the upper half-plane.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    tau: Option<Complex64>,
    /// Base modulus of a deformation family.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    tau0: Option<Complex64>,
    /// Complex dimension, 1 to 4.
    #[arg(long, global = true, value_parser = parse_dimension)]
    n: Option<usize>,
    /// Form degree, at most `--n`.
    #[arg(long, global = true)]
    q: Option<usize>,
    /// full | prime | doubleprime
    #[arg(long, global = true, value_parser = parse_component)]
    component: Option<HodgeComponent>,
    /// Complex argument of the Epstein zeta.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_complex)]
    s: Option<Complex64>,
    /// Heat time.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_positive)]
    t: Option<f64>,
    /// Overrides every default tolerance of the run.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_positive)]
    tol: Option<f64>,
    /// Finite-difference step for Hessians.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_step)]
    step: Option<f64>,
    /// Shell cutoff for direct Eisenstein sums.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_positive)]
    cutoff: Option<f64>,
    /// CSV file with header `re,im`, one modulus per row.
    #[arg(long = "tau-grid", global = true)]
    tau_grid: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Output does not depend on it.
    #[arg(long, global = true, value_parser = parse_threads)]
    threads: Option<usize>,
    /// Smaller samples and grids for the verification suite.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub tau: Option<Complex64>,
    pub tau0: Option<Complex64>,
    pub n: Option<usize>,
    pub q: Option<usize>,
    pub component: Option<HodgeComponent>,
    pub s: Option<Complex64>,
    pub t: Option<f64>,
    pub tol: Option<f64>,
    pub step: Option<f64>,
    pub cutoff: Option<f64>,
    pub tau_grid: Option<PathBuf>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub quick: bool,
}

impl RunConfig {
    /// Configuration for a subcommand with every parameter at its default.
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            tau: None,
            tau0: None,
            n: None,
            q: None,
            component: None,
            s: None,
            t: None,
            tol: None,
            step: None,
            cutoff: None,
            tau_grid: None,
            format: Format::Json,
            out: None,
            threads: None,
            quick: false,
        }
    }
}

pub type UsageError = clap::Error;

fn usage(msg: impl std::fmt::Display) -> UsageError {
    Cli::command().error(ErrorKind::ValueValidation, msg)
}

/// Parses and validates a full argument vector (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let p = cli.params;
    let cfg = RunConfig {
        command: cli.command,
        tau: p.tau,
        tau0: p.tau0,
        n: p.n,
        q: p.q,
        component: p.component,
        s: p.s,
        t: p.t,
        tol: p.tol,
        step: p.step,
        cutoff: p.cutoff,
        tau_grid: p.tau_grid,
        format: p.format,
        out: p.out,
        threads: p.threads,
        quick: p.quick,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), UsageError> {
    for (flag, v) in [("--tau", cfg.tau), ("--tau0", cfg.tau0)] {
        if let Some(z) = v {
            if !(z.im > 0.0) {
                return Err(usage(format!("{flag}: {z} is not in the upper half-plane")));
            }
        }
    }
    if let (Some(q), n) = (cfg.q, cfg.n.unwrap_or(1)) {
        if q > n {
            return Err(usage(format!("--q: degree {q} exceeds the dimension {n}")));
        }
    }
    if cfg.tau.is_some() && cfg.tau_grid.is_some() {
        return Err(usage("--tau-grid: cannot be combined with --tau"));
    }
    if let (Command::Eisenstein, Some(cut)) = (cfg.command, cfg.cutoff) {
        if cut.fract() != 0.0 || cut > u32::MAX as f64 {
            return Err(usage(format!("--cutoff: the Eisenstein shell cutoff must be an integer, got {cut}")));
        }
    }
    Ok(())
}

/// `a+bi`, `a-bi`, `a`, `bi`, `i`, `-i`, with optional exponents.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty complex number".into());
    }
    let bad = || format!("'{text}' is not a complex number of the form a+bi");
    let num = |x: &str| -> Result<f64, String> {
        let v: f64 = x.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(s)?, 0.0));
    };
    // split at the last sign that does not belong to an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => num(other)?,
    };
    Ok(Complex64::new(re, im))
}

fn parse_positive(text: &str) -> Result<f64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("'{text}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive and finite"))
    }
}

fn parse_step(text: &str) -> Result<f64, String> {
    let v = parse_positive(text)?;
    if v < 0.1 {
        Ok(v)
    } else {
        Err(format!("step {v} must be below 0.1"))
    }
}

fn parse_dimension(text: &str) -> Result<usize, String> {
    let n: usize = text.trim().parse().map_err(|_| format!("'{text}' is not a dimension"))?;
    if (1..=MAX_N).contains(&n) {
        Ok(n)
    } else {
        Err(format!("dimension {n} outside 1..={MAX_N}"))
    }
}

fn parse_threads(text: &str) -> Result<usize, String> {
    let k: usize = text.trim().parse().map_err(|_| format!("'{text}' is not a thread count"))?;
    if k >= 1 {
        Ok(k)
    } else {
        Err("thread count must be at least 1".into())
    }
}

fn parse_component(text: &str) -> Result<HodgeComponent, String> {
    text.parse().map_err(|e: torusdet::Error| e.to_string())
}

#[derive(Debug)]
pub enum GridError {
    Io(std::io::Error),
    Format(String),
}

/// Reads a `re,im` CSV grid of moduli.
pub fn read_tau_grid(path: &Path) -> Result<Vec<Complex64>, GridError> {
    let file = std::fs::File::open(path).map_err(GridError::Io)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| GridError::Format(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "re" || &header[1] != "im" {
        return Err(GridError::Format(format!("header must be 're,im', found '{}'", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| GridError::Format(e.to_string()))?;
        let field = |k: usize| -> Result<f64, GridError> {
            rec[k].parse::<f64>().map_err(|_| GridError::Format(format!("row {}: '{}' is not a number", line + 2, &rec[k])))
        };
        let z = Complex64::new(field(0)?, field(1)?);
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(GridError::Format(format!("row {}: {z} is not in the upper half-plane", line + 2)));
        }
        out.push(z);
    }
    if out.is_empty() {
        return Err(GridError::Format("grid has no rows".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, UsageError> {
        parse_args(std::iter::once("torusdet").chain(args.iter().copied()))
    }

    #[test]
    fn complex_syntax() {
        assert_eq!(parse_complex("0+1i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("-0.5-2i").unwrap(), Complex64::new(-0.5, -2.0));
        assert_eq!(parse_complex("1e-3+2.5E1i").unwrap(), Complex64::new(1e-3, 25.0));
        assert_eq!(parse_complex("-1e+2-1e-2i").unwrap(), Complex64::new(-100.0, -0.01));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_complex("2.5i").unwrap(), Complex64::new(0.0, 2.5));
        for bad in ["", "1+", "a+bi", "1+2j", "1,5+2i", "nan", "inf+1i", "1++2i"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn examples_parse() {
        let cfg = parse(&["eta", "--tau", "0+1i"]).unwrap();
        assert_eq!(cfg.command, Command::Eta);
        assert_eq!(cfg.tau, Some(Complex64::new(0.0, 1.0)));
        let cfg = parse(&["detlap", "--n", "2", "--q", "1", "--component", "doubleprime", "--tau-grid", "g.csv", "--format", "json"])
            .unwrap();
        assert_eq!(cfg.n, Some(2));
        assert_eq!(cfg.component, Some(HodgeComponent::DoublePrime));
        assert_eq!(cfg.tau_grid.as_deref(), Some(Path::new("g.csv")));
        let cfg = parse(&["verify", "all", "--quick", "--threads", "8"]).unwrap();
        assert_eq!(cfg.command, Command::Verify { target: VerifyTarget::All });
        assert!(cfg.quick);
    }

    #[test]
    fn usage_errors_name_the_flag() {
        let e = parse(&["eta", "--tol", "-1"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("--tol"));
        let e = parse(&["eta", "--tau", "0-1i"]).unwrap_err();
        assert!(e.to_string().contains("--tau"));
        let e = parse(&["detlap", "--n", "1", "--q", "2"]).unwrap_err();
        assert!(e.to_string().contains("--q"));
        assert_eq!(parse(&["eta", "--bogus", "1"]).unwrap_err().exit_code(), 2);
        assert_eq!(parse(&["eta", "--format", "xml"]).unwrap_err().exit_code(), 2);
        assert_eq!(parse(&["eta", "--threads", "0"]).unwrap_err().exit_code(), 2);
        assert!(parse(&["hessian", "--step", "0.5"]).unwrap_err().to_string().contains("--step"));
    }
}
