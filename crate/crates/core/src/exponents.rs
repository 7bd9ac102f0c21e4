//! Single-letter error exponents.
//!
//! Everything is expressed through `g(β) = log₂ Q_sand,β(σ‖ρ)` on `(0,1)`.
//! The Hoeffding exponent at rate `r` is
//! `H(r) = sup_{s∈(0,1)} (-g(s) - s·r)/(1-s)`, attained where
//! `r = (s-1)g'(s) - g(s)`. The right-hand side decreases from `D_rev` at
//! `s = 0` to `0` at `s = 1` when `g` is strictly convex, so the optimizer is
//! found by bisection. The Stein exponent is `D_rev = -g'(0⁺)`.

use serde::Serialize;

use crate::divergences::{rev_relative_entropy, ExtendedReal, SandwichedCumulant};
use crate::error::{Error, Result};
use crate::matrix::DensityMatrix;
use crate::testing::{reduce_to_classical_within, ClassicalPair};
use crate::symmetry::Budget;

/// Step of the central differences for `g'`.
pub const DERIVATIVE_STEP: f64 = 1e-5;
/// Bisection stops once `|y(s) - r|` is below this.
pub const SOLVER_RESIDUAL_TOL: f64 = 1e-10;
/// Second differences below this (in absolute value) count as zero.
pub const CONVEXITY_TOL: f64 = 1e-9;
/// Bisection bracket `[S_MIN, 1 - S_MIN]`.
const S_MIN: f64 = 1e-6;
const PROBE_POINTS: usize = 64;
const MAX_BISECTIONS: usize = 200;

/// `g` sampled on a grid, with divided differences at the interior points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantCurve {
    pub grid: Vec<f64>,
    /// `g(β)` in bits.
    pub values: Vec<f64>,
    /// Central first differences at `grid[1..len-1]`.
    pub first_differences: Vec<f64>,
    /// Central second differences (scaled by the squared mean spacing, so on
    /// a uniform grid this is `g[i+1] - 2g[i] + g[i-1]`) at `grid[1..len-1]`.
    pub second_differences: Vec<f64>,
}

/// Shape of `g` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    StrictlyConvex,
    Affine,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub grid: Vec<f64>,
    pub second_differences: Vec<f64>,
    pub classification: Convexity,
}

/// Solution of the Hoeffding problem at one rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentResult {
    /// Rate `r` in bits per copy.
    pub rate_r: f64,
    /// `H(r)` in bits per copy.
    pub exponent: f64,
    /// `1 - s_r`.
    pub optimizer_alpha: f64,
    pub iterations: usize,
    /// `|y(s_r) - r|`.
    pub residual: f64,
    /// Reverse relative entropy, the upper end of the admissible rates.
    pub rev_relative_entropy: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Argument("grid must not be empty".into()));
    }
    if grid.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
        return Err(Error::Argument("grid points must lie in (0,1)".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn differences(grid: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for i in 1..grid.len().saturating_sub(1) {
        let h1 = grid[i] - grid[i - 1];
        let h2 = grid[i + 1] - grid[i];
        let s1 = (values[i] - values[i - 1]) / h1;
        let s2 = (values[i + 1] - values[i]) / h2;
        first.push((values[i + 1] - values[i - 1]) / (h1 + h2));
        let mean = 0.5 * (h1 + h2);
        second.push((s2 - s1) / mean * mean * mean);
    }
    (first, second)
}

fn sample(g: &SandwichedCumulant, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&b| g.value(b)).collect()
}

/// `g(β) = log₂ Q_sand,β(σ‖ρ)` on `grid`. Requires `ρ` of full rank; `σ` may
/// be rank deficient.
pub fn g_curve(rho: &DensityMatrix, sigma: &DensityMatrix, grid: &[f64]) -> Result<CumulantCurve> {
    check_grid(grid)?;
    if !rho.is_full_rank() {
        return Err(Error::Domain("cumulant curve needs a full-rank rho".into()));
    }
    let g = SandwichedCumulant::new(rho, sigma)?;
    let values = sample(&g, grid);
    let (first_differences, second_differences) = differences(grid, &values);
    Ok(CumulantCurve {
        grid: grid.to_vec(),
        values,
        first_differences,
        second_differences,
    })
}

fn classify(second: &[f64]) -> Convexity {
    if second.iter().all(|d| d.abs() <= CONVEXITY_TOL) {
        Convexity::Affine
    } else if second.iter().all(|&d| d >= CONVEXITY_TOL) {
        Convexity::StrictlyConvex
    } else {
        Convexity::Indeterminate
    }
}

/// Second differences of `g` and their classification. Needs at least three
/// grid points; rank-deficient states are allowed.
pub fn convexity_report(rho: &DensityMatrix, sigma: &DensityMatrix, grid: &[f64]) -> Result<ConvexityReport> {
    check_grid(grid)?;
    if grid.len() < 3 {
        return Err(Error::Argument("convexity needs at least three grid points".into()));
    }
    let g = SandwichedCumulant::new(rho, sigma)?;
    let values = sample(&g, grid);
    let (_, second) = differences(grid, &values);
    Ok(ConvexityReport {
        grid: grid.to_vec(),
        classification: classify(&second),
        second_differences: second,
    })
}

/// Uniform grid of `k` interior points of `(0,1)`.
pub fn uniform_grid(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

/// `g'(s)` by the five-point stencil, centred no closer than `10h` to the
/// ends of `(0,1)`.
fn derivative(g: &SandwichedCumulant, s: f64) -> f64 {
    let h = DERIVATIVE_STEP;
    let c = s.clamp(10.0 * h, 1.0 - 10.0 * h);
    (g.value(c - 2.0 * h) - 8.0 * g.value(c - h) + 8.0 * g.value(c + h) - g.value(c + 2.0 * h))
        / (12.0 * h)
}

/// `y(s) = (s-1)g'(s) - g(s)`.
fn first_order_map(g: &SandwichedCumulant, s: f64) -> f64 {
    (s - 1.0) * derivative(g, s) - g.value(s)
}

/// Hoeffding exponent `H(r)` for `0 < r < D_rev`.
pub fn hoeffding_exponent(rho: &DensityMatrix, sigma: &DensityMatrix, r: f64) -> Result<ExponentResult> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("rate must be positive, got {r}")));
    }
    let g = SandwichedCumulant::new(rho, sigma)?;

    // An affine g has y ≡ const, so there is no root to bracket. Detect it
    // before anything else so it is never mistaken for a bracketing failure
    // of a different kind.
    let probes: Vec<f64> = (0..PROBE_POINTS)
        .map(|i| S_MIN + (1.0 - 2.0 * S_MIN) * i as f64 / (PROBE_POINTS - 1) as f64)
        .collect();
    let y_probe: Vec<f64> = probes.iter().map(|&s| first_order_map(&g, s)).collect();
    let (_, second) = differences(&probes, &sample(&g, &probes));
    if classify(&second) == Convexity::Affine {
        return Err(Error::Degenerate(
            "g(beta) is affine, so the first-order condition has no unique root; \
             this happens when sigma is not full rank or the states coincide"
                .into(),
        ));
    }
    if !rho.is_full_rank() || !sigma.is_full_rank() {
        return Err(Error::Domain("Hoeffding exponent needs full-rank states".into()));
    }
    if y_probe.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Degenerate(
            "first-order map is not strictly decreasing on the probe grid".into(),
        ));
    }
    let d_rev = rev_relative_entropy(rho, sigma)?.unwrap();
    if r >= d_rev {
        return Err(Error::Domain(format!(
            "rate must lie in (0, {d_rev}), the reverse relative entropy; got {r}"
        )));
    }

    let (mut lo, mut hi) = (S_MIN, 1.0 - S_MIN);
    let (y_lo, y_hi) = (y_probe[0] - r, y_probe[PROBE_POINTS - 1] - r);
    if !(y_lo > 0.0 && y_hi < 0.0) {
        return Err(Error::Degenerate(format!(
            "rate {r} is not bracketed by the first-order map on [{lo}, {hi}]: \
             values {} and {}",
            y_lo + r,
            y_hi + r
        )));
    }
    let mut s = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        s = 0.5 * (lo + hi);
        let y = first_order_map(&g, s) - r;
        residual = y.abs();
        if residual <= SOLVER_RESIDUAL_TOL {
            break;
        }
        if y > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= f64::EPSILON * s {
            break;
        }
    }
    if residual > SOLVER_RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            what: "Hoeffding first-order condition",
            table: vec![s, residual],
        });
    }
    let exponent = (-g.value(s) - s * r) / (1.0 - s);
    Ok(ExponentResult {
        rate_r: r,
        exponent,
        optimizer_alpha: 1.0 - s,
        iterations,
        residual,
        rev_relative_entropy: d_rev,
    })
}

/// Stein exponent, the reverse relative entropy. Full-rank states only.
pub fn stein_exponent(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    rev_relative_entropy(rho, sigma)
}

/// Block sizes used by the Stein cross-check.
pub const STEIN_CHECK_NS: [usize; 3] = [4, 8, 12];

/// Relative entropy of a classical pair in bits; `+∞` if `q` misses mass of `p`.
pub fn classical_relative_entropy(pair: &ClassicalPair) -> ExtendedReal {
    let mut total = 0.0;
    for (&p, &q) in pair.p().iter().zip(pair.q()) {
        if p <= 0.0 {
            continue;
        }
        if q <= 0.0 {
            return ExtendedReal::PosInfinity;
        }
        total += p * (p / q).log2();
    }
    ExtendedReal::Finite(total)
}

/// `(1/n) D(ρ^{⊗n} ‖ P(σ^{⊗n}))` with `P` the type-class pinching. The two
/// operators commute, so this is the relative entropy of the reduced
/// classical pair.
pub fn pinched_relative_entropy_rate(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    n: usize,
    budget: &Budget,
) -> Result<ExtendedReal> {
    let pair = reduce_to_classical_within(rho, sigma, n, budget)?;
    Ok(match classical_relative_entropy(&pair) {
        ExtendedReal::Finite(v) => ExtendedReal::Finite(v / n as f64),
        inf => inf,
    })
}

/// One row of the Stein cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteinCheckRow {
    pub n: usize,
    pub pinched_rate: ExtendedReal,
}

/// `(1/n) D(ρ^{⊗n} ‖ P(σ^{⊗n}))` for each `n`, an independent estimator of
/// the Stein exponent that approaches it from below.
pub fn stein_cross_check(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    ns: &[usize],
    budget: &Budget,
) -> Result<Vec<SteinCheckRow>> {
    ns.iter()
        .map(|&n| {
            Ok(SteinCheckRow {
                n,
                pinched_rate: pinched_relative_entropy_rate(rho, sigma, n, budget)?,
            })
        })
        .collect()
}
