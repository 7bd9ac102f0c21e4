//! Command-line front end.
//!
//! Every command builds its whole output as a string first and then writes
//! it to stdout or `--out`, so identical inputs give byte-identical files.
//! Exit codes: 0 success, 1 check failed, 2 usage or domain error, 3 resource
//! budget exceeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::divergences::{
    divergence_curve, ns_distributions, petz_divergence, petz_quasi, rev_relative_entropy,
    rsand_divergence, sand_divergence, umegaki, ExtendedReal,
};
use crate::error::Error;
use crate::exponents::{hoeffding_exponent, stein_cross_check, stein_exponent, uniform_grid, STEIN_CHECK_NS};
use crate::matrix::{DensityMatrix, C64};
use crate::random::{random_state, seeded_rng};
use crate::symmetry::{twirl_pinch_deviation, Budget, ProjectionFamily};
use crate::testing::{finite_n_sweep_within, SweepMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Deviation allowed by the twirl and Nussbaum-Szkoła checks.
pub const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "qrenyi", version, about = "Quantum Renyi divergences and hypothesis-testing exponents")]
pub struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for randomly generated states (used when state files are omitted).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Largest n-copy dimension d^n a command may build.
    #[arg(long, global = true)]
    pub budget: Option<u128>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Umegaki, Petz, sandwiched and reverse sandwiched divergences at one order.
    Divergence {
        rho: PathBuf,
        sigma: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// CSV of the three Renyi families over a grid of orders in (0,1).
    Curve {
        rho: PathBuf,
        sigma: PathBuf,
        /// Number of evenly spaced interior orders, or a comma-separated list.
        #[arg(long, default_value = "19")]
        grid: String,
    },
    /// Hoeffding exponent at a rate, or the Stein exponent.
    Exponent {
        rho: PathBuf,
        sigma: PathBuf,
        #[command(flatten)]
        mode: ExponentMode,
    },
    /// Exact finite-n errors and exponents.
    FiniteN {
        rho: PathBuf,
        sigma: PathBuf,
        #[command(flatten)]
        mode: SweepArgs,
        /// Comma-separated, strictly ascending list of block lengths.
        #[arg(long, default_value = "2,4,8,12")]
        n: String,
    },
    /// Discrete twirl of sigma^{⊗n} against its type-class pinching.
    TwirlCheck {
        /// State file; a random state of dimension `--dim` if omitted.
        sigma: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Nussbaum-Szkoła moments against tr sigma^s rho^{1-s}.
    NsCheck {
        /// State files; a seeded random pair of dimension `--dim` if omitted.
        rho: Option<PathBuf>,
        sigma: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ExponentMode {
    /// Type-II rate r for the Hoeffding exponent.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Report the Stein exponent and its pinched cross-check.
    #[arg(long)]
    pub stein: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SweepArgs {
    /// Type-II budget 2^{-n r} (Hoeffding sweep).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Type-I budget (Stein sweep).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// On-disk state: `{"dim": d, "matrix": [[[re, im], ...], ...], "label": "..."}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub label: Option<String>,
}

impl StateFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_density(&self) -> std::result::Result<DensityMatrix, String> {
        let d = self.dim;
        if d == 0 {
            return Err("field `dim`: must be at least 1".into());
        }
        if self.matrix.len() != d {
            return Err(format!(
                "field `matrix`: expected {d} rows, found {}",
                self.matrix.len()
            ));
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != d {
                return Err(format!(
                    "field `matrix[{i}]`: expected {d} entries, found {}",
                    row.len()
                ));
            }
            for (j, z) in row.iter().enumerate() {
                if !(z[0].is_finite() && z[1].is_finite()) {
                    return Err(format!("field `matrix[{i}][{j}]`: entry is not finite"));
                }
            }
        }
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            let [re, im] = self.matrix[i][j];
            C64::new(re, im)
        });
        DensityMatrix::from_matrix(m).map_err(|e| format!("field `matrix`: {e}"))
    }
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource { .. } => EXIT_BUDGET,
            Error::NonConvergence { .. } | Error::EigenNoConvergence { .. } => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Output of a command: text plus the exit code to report after writing it.
pub struct Report {
    pub text: String,
    pub code: i32,
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed,
/// `inf` for +∞.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn fmt_ext(x: ExtendedReal) -> String {
    fmt_num(x.to_f64())
}

fn load_state(path: &Path) -> CliResult<DensityMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let file = StateFile::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    file.to_density()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn budget_from(limit: Option<u128>) -> Budget {
    let mut b = Budget::default();
    if let Some(n) = limit {
        b.strings = n;
        b.dense_dim = n;
    }
    b
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let grid: Vec<f64> = if text.contains(',') {
        text.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::usage(format!("--grid: `{t}` is not a number")))
            })
            .collect::<CliResult<_>>()?
    } else {
        let k: usize = text
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("--grid: `{text}` is neither a count nor a list")))?;
        if k == 0 {
            return Err(Failure::usage("--grid: need at least one point"));
        }
        uniform_grid(k)
    };
    if let Some(a) = grid.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(Failure::usage(format!("--grid: order {a} is outside (0,1)")));
    }
    Ok(grid)
}

fn parse_n_list(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Failure::usage(format!("--n: `{t}` is not a positive integer")))
        })
        .collect()
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha != 1.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--alpha must lie in (0,1) or (1,inf), got {alpha}; the order-1 limits are the umegaki and rev rows"
        )))
    }
}

fn cmd_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> CliResult<Report> {
    check_alpha(alpha)?;
    let mut t = String::new();
    writeln!(t, "alpha: {}", fmt_num(alpha)).unwrap();
    writeln!(t, "umegaki: {} bits", fmt_ext(umegaki(rho, sigma)?)).unwrap();
    writeln!(t, "petz: {} bits", fmt_ext(petz_divergence(rho, sigma, alpha)?)).unwrap();
    writeln!(t, "sandwiched: {} bits", fmt_ext(sand_divergence(rho, sigma, alpha)?)).unwrap();
    writeln!(t, "reverse_sandwiched: {} bits", fmt_ext(rsand_divergence(rho, sigma, alpha)?)).unwrap();
    match rev_relative_entropy(rho, sigma) {
        Ok(v) => writeln!(t, "reverse_relative_entropy: {} bits", fmt_ext(v)).unwrap(),
        Err(Error::Domain(msg)) => writeln!(t, "reverse_relative_entropy: undefined ({msg})").unwrap(),
        Err(e) => return Err(e.into()),
    }
    Ok(Report { text: t, code: EXIT_OK })
}

fn cmd_curve(rho: &DensityMatrix, sigma: &DensityMatrix, grid: &str) -> CliResult<Report> {
    let alphas = parse_grid(grid)?;
    let curve = divergence_curve(rho, sigma, &alphas)?;
    let mut t = String::from("alpha,petz,sand,rsand,umegaki,rev\n");
    let rev = fmt_ext(curve.reverse_relative_entropy);
    let um = fmt_ext(curve.umegaki);
    for (i, &a) in curve.alphas.iter().enumerate() {
        writeln!(
            t,
            "{},{},{},{},{um},{rev}",
            fmt_num(a),
            fmt_ext(curve.petz[i]),
            fmt_ext(curve.sandwiched[i]),
            fmt_ext(curve.reverse_sandwiched[i]),
        )
        .unwrap();
    }
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Report { text: t, code: EXIT_OK })
}

fn cmd_exponent(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    mode: &ExponentMode,
    budget: &Budget,
) -> CliResult<Report> {
    let mut t = String::new();
    if mode.stein {
        let d = stein_exponent(rho, sigma)?;
        writeln!(t, "stein_exponent: {} bits", fmt_ext(d)).unwrap();
        writeln!(t, "pinched cross-check (1/n) D(rho^n || P(sigma^n)):").unwrap();
        writeln!(t, "n,pinched_rate").unwrap();
        for n in STEIN_CHECK_NS {
            match stein_cross_check(rho, sigma, &[n], budget) {
                Ok(rows) => writeln!(t, "{n},{}", fmt_ext(rows[0].pinched_rate)).unwrap(),
                Err(Error::Resource { .. }) => writeln!(t, "{n},skipped (budget)").unwrap(),
                Err(e) => return Err(e.into()),
            }
        }
    } else {
        let r = mode.rate.expect("clap enforces one mode");
        let h = hoeffding_exponent(rho, sigma, r)?;
        writeln!(t, "rate: {}", fmt_num(h.rate_r)).unwrap();
        writeln!(t, "hoeffding_exponent: {} bits", fmt_num(h.exponent)).unwrap();
        writeln!(t, "optimizer_alpha: {}", fmt_num(h.optimizer_alpha)).unwrap();
        writeln!(t, "residual: {}", fmt_num(h.residual)).unwrap();
        writeln!(t, "iterations: {}", h.iterations).unwrap();
        writeln!(t, "reverse_relative_entropy: {} bits", fmt_num(h.rev_relative_entropy)).unwrap();
    }
    Ok(Report { text: t, code: EXIT_OK })
}

/// Asymptotic Hoeffding exponent for the footer row. For `r ≥ D_rev` the
/// supremum is attained as `α → 1` and equals 0.
fn asymptotic_hoeffding(rho: &DensityMatrix, sigma: &DensityMatrix, r: f64) -> CliResult<f64> {
    if let Ok(ExtendedReal::Finite(d)) = rev_relative_entropy(rho, sigma) {
        if r >= d {
            return Ok(0.0);
        }
    }
    match hoeffding_exponent(rho, sigma, r) {
        Ok(h) => Ok(h.exponent),
        Err(Error::Degenerate(msg)) => {
            eprintln!("warning: no asymptotic value: {msg}");
            Ok(f64::NAN)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_finite_n(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    mode: &SweepArgs,
    n_list: &str,
    budget: &Budget,
) -> CliResult<Report> {
    let ns = parse_n_list(n_list)?;
    let (sweep, asymptotic) = match (mode.rate, mode.epsilon) {
        (Some(rate), None) => {
            let rows = finite_n_sweep_within(rho, sigma, SweepMode::Hoeffding { rate }, &ns, budget)?;
            (rows, asymptotic_hoeffding(rho, sigma, rate)?)
        }
        (None, Some(epsilon)) => {
            let rows = finite_n_sweep_within(rho, sigma, SweepMode::Stein { epsilon }, &ns, budget)?;
            let d = match stein_exponent(rho, sigma) {
                Ok(v) => v.to_f64(),
                Err(Error::Domain(msg)) => {
                    eprintln!("warning: no asymptotic value: {msg}");
                    f64::NAN
                }
                Err(e) => return Err(e.into()),
            };
            (rows, d)
        }
        _ => unreachable!("clap enforces exactly one mode"),
    };
    let mut t = String::from("n,error,exponent\n");
    for row in &sweep {
        writeln!(t, "{},{},{}", row.n, fmt_num(row.error), fmt_ext(row.exponent)).unwrap();
    }
    writeln!(t, "asymptotic,,{}", fmt_num(asymptotic)).unwrap();
    Ok(Report { text: t, code: EXIT_OK })
}

fn check_report(t: &mut String, deviation: f64) -> i32 {
    let pass = deviation <= CHECK_TOL;
    writeln!(t, "max_deviation: {}", fmt_num(deviation)).unwrap();
    writeln!(t, "tolerance: {}", fmt_num(CHECK_TOL)).unwrap();
    writeln!(t, "result: {}", if pass { "pass" } else { "fail" }).unwrap();
    if pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn random_full_rank(seed: u64, dim: usize, count: usize) -> CliResult<Vec<DensityMatrix>> {
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| random_state(&mut rng, dim, dim).map_err(Failure::from))
        .collect()
}

fn cmd_twirl_check(sigma: &DensityMatrix, n: usize, budget: &Budget) -> CliResult<Report> {
    if n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let family = ProjectionFamily::computational(sigma.dim())?;
    let dev = twirl_pinch_deviation(sigma, &family, n, budget)?;
    let mut t = String::new();
    writeln!(t, "n: {n}").unwrap();
    writeln!(t, "dim: {}", sigma.dim()).unwrap();
    let code = check_report(&mut t, dev);
    Ok(Report { text: t, code })
}

fn cmd_ns_check(rho: &DensityMatrix, sigma: &DensityMatrix) -> CliResult<Report> {
    let ns = ns_distributions(rho, sigma)?;
    let mut t = String::from("s,ns_moment,direct,abs_diff\n");
    let mut worst = 0.0f64;
    for k in 1..=9 {
        let s = k as f64 / 10.0;
        let lhs = ns.mixed_moment(s);
        let rhs = petz_quasi(rho, sigma, 1.0 - s)?.to_f64();
        let diff = (lhs - rhs).abs();
        worst = worst.max(diff);
        writeln!(t, "{},{},{},{}", fmt_num(s), fmt_num(lhs), fmt_num(rhs), fmt_num(diff)).unwrap();
    }
    let code = check_report(&mut t, worst);
    Ok(Report { text: t, code })
}

fn dispatch(cli: &Cli) -> CliResult<Report> {
    let budget = budget_from(cli.budget);
    match &cli.command {
        Command::Divergence { rho, sigma, alpha } => {
            cmd_divergence(&load_state(rho)?, &load_state(sigma)?, *alpha)
        }
        Command::Curve { rho, sigma, grid } => cmd_curve(&load_state(rho)?, &load_state(sigma)?, grid),
        Command::Exponent { rho, sigma, mode } => {
            cmd_exponent(&load_state(rho)?, &load_state(sigma)?, mode, &budget)
        }
        Command::FiniteN { rho, sigma, mode, n } => {
            cmd_finite_n(&load_state(rho)?, &load_state(sigma)?, mode, n, &budget)
        }
        Command::TwirlCheck { sigma, n, dim } => {
            let sigma = match sigma {
                Some(p) => load_state(p)?,
                None => random_full_rank(cli.seed, *dim, 1)?.remove(0),
            };
            cmd_twirl_check(&sigma, *n, &budget)
        }
        Command::NsCheck { rho, sigma, dim } => {
            let (rho, sigma) = match (rho, sigma) {
                (Some(r), Some(s)) => (load_state(r)?, load_state(s)?),
                (None, None) => {
                    let mut v = random_full_rank(cli.seed, *dim, 2)?;
                    let s = v.pop().unwrap();
                    (v.pop().unwrap(), s)
                }
                _ => return Err(Failure::usage("ns-check takes both state files or neither")),
            };
            cmd_ns_check(&rho, &sigma)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let report = match dispatch(&cli) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &report.text)
            .map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", report.text);
            Ok(())
        }
    };
    match written {
        Ok(()) => report.code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.1985945466212065), "0.198594546621");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(1.5e-7), "1.5e-7");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1e-5), "0.00001");
        assert_eq!(fmt_num(2.5e13), "2.5e13");
    }

    #[test]
    fn state_file_errors_name_the_field() {
        let bad_rows = StateFile::parse(r#"{"dim": 2, "matrix": [[[1,0],[0,0]]]}"#).unwrap();
        assert!(bad_rows.to_density().unwrap_err().contains("expected 2 rows"));
        let bad_entry = StateFile::parse(r#"{"dim": 2, "matrix": [[[1,0]],[[0,0],[0,0]]]}"#).unwrap();
        assert!(bad_entry.to_density().unwrap_err().contains("matrix[0]"));
        let err = StateFile::parse("{\"dim\": 2,\n \"matrix\": [[[1,0,3]]]}").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        assert!(StateFile::parse(r#"{"dim": 1, "matrix": [[[1,0]]], "lable": "x"}"#).is_err());
        let ok = StateFile::parse(r#"{"dim": 1, "matrix": [[[1,0]]], "label": "pure"}"#).unwrap();
        assert_eq!(ok.label.as_deref(), Some("pure"));
        assert!(ok.to_density().is_ok());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("3").unwrap(), vec![0.25, 0.5, 0.75]);
        assert_eq!(parse_grid("0.1, 0.9").unwrap(), vec![0.1, 0.9]);
        assert_eq!(parse_grid("0.5,1.0").unwrap_err().code, EXIT_USAGE);
        assert_eq!(parse_grid("x").unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn error_codes() {
        let f: Failure = Error::Resource { what: "x", requested: 10, limit: 1 }.into();
        assert_eq!(f.code, EXIT_BUDGET);
        let f: Failure = Error::Domain("x".into()).into();
        assert_eq!(f.code, EXIT_USAGE);
    }
}
