//! Exact finite-n error probabilities for testing `ρ^{⊗n}` against the
//! orbit of `σ^{⊗n}` under the diagonal unitaries of `ρ`'s eigenbasis.
//!
//! Any test can be twirled without changing its Type-I error (the null is
//! invariant) or increasing its worst-case Type-II error, and the twirled
//! alternative is the type-class pinching of `σ^{⊗n}`. On each block `ρ^{⊗n}`
//! is a scalar, so diagonalising the pinched blocks turns the problem into
//! classical Neyman–Pearson testing between two distributions.
//!
//! A test `m ∈ [0,1]^k` is the probability of accepting the null on each atom:
//! Type-I error is `Σ p(1-m)` and Type-II error is `Σ q m`.

use serde::Serialize;

use crate::divergences::ExtendedReal;
use crate::error::{Error, Result};
use crate::matrix::{eigenvalues, DensityMatrix};
use crate::symmetry::{pinch_tensor_power_within, Budget, ProjectionFamily};

/// Tolerance on the total mass of each distribution.
pub const MASS_TOL: f64 = 1e-9;

/// Two aligned distributions: `p` under the null, `q` under the alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl ClassicalPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch(p.len(), q.len()));
        }
        if p.is_empty() {
            return Err(Error::Empty);
        }
        for (name, v) in [("p", &p), ("q", &q)] {
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Argument(format!(
                    "{name} must be finite and nonnegative"
                )));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > MASS_TOL {
                return Err(Error::Argument(format!("{name} sums to {s}, not 1")));
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Atom indices by likelihood ratio `p/q`, largest first. Atoms with
    /// `q = 0 < p` lead; atoms with `p = q = 0` trail; ties keep index order.
    fn ratio_order(&self) -> Vec<usize> {
        let key = |i: usize| {
            let (p, q) = (self.p[i], self.q[i]);
            match (p > 0.0, q > 0.0) {
                (true, false) => f64::INFINITY,
                (false, false) => -1.0,
                _ => p / q,
            }
        };
        let keys: Vec<f64> = (0..self.len()).map(key).collect();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
        order
    }
}

/// An optimal randomized test and its errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub type1_error: f64,
    pub type2_error: f64,
    /// The atom accepted with probability strictly between 0 and 1, or the
    /// number of atoms if there is none.
    pub threshold_index: usize,
    /// Acceptance probability on the threshold atom.
    pub randomization: f64,
    /// Acceptance probability per atom.
    pub acceptance: Vec<f64>,
}

/// Smallest Type-I error with Type-II error at most `type2_budget`.
pub fn classical_np_type1(pair: &ClassicalPair, type2_budget: f64) -> Result<TestResult> {
    if !(type2_budget > 0.0 && type2_budget <= 1.0) {
        return Err(Error::Argument(format!(
            "Type-II budget must lie in (0,1], got {type2_budget}"
        )));
    }
    let order = pair.ratio_order();
    let k = pair.len();
    let mut m = vec![0.0; k];
    let mut left = type2_budget;
    let mut threshold = k;
    let mut cut = k;
    for (pos, &i) in order.iter().enumerate() {
        let q = pair.q[i];
        if q <= left {
            m[i] = 1.0;
            left -= q;
        } else {
            m[i] = left / q;
            threshold = i;
            cut = pos;
            break;
        }
    }
    // Type-I error from the rejected tail, so it keeps full relative
    // accuracy when it is small.
    let mut type1 = 0.0;
    if cut < k {
        type1 += pair.p[order[cut]] * (1.0 - m[order[cut]]);
        type1 += order[cut + 1..].iter().map(|&i| pair.p[i]).sum::<f64>();
    }
    let type2 = order[..cut.min(k)]
        .iter()
        .map(|&i| pair.q[i])
        .sum::<f64>()
        + if cut < k { pair.q[order[cut]] * m[order[cut]] } else { 0.0 };
    Ok(finish(type1, type2, threshold, m))
}

/// Smallest Type-II error with Type-I error at most `type1_budget`.
pub fn classical_np_type2(pair: &ClassicalPair, type1_budget: f64) -> Result<TestResult> {
    if !(type1_budget > 0.0 && type1_budget < 1.0) {
        return Err(Error::Argument(format!(
            "Type-I budget must lie in (0,1), got {type1_budget}"
        )));
    }
    let order = pair.ratio_order();
    let k = pair.len();
    let mut m = vec![1.0; k];
    let mut left = type1_budget;
    let mut threshold = k;
    // Reject from the least likely end while the budget allows.
    let mut cut = 0;
    for (pos, &i) in order.iter().enumerate().rev() {
        let p = pair.p[i];
        if p <= left {
            m[i] = 0.0;
            left -= p;
        } else {
            m[i] = 1.0 - left / p;
            threshold = i;
            cut = pos + 1;
            break;
        }
    }
    let type2 = order[..cut].iter().map(|&i| pair.q[i] * m[i]).sum::<f64>();
    let type1 = order.iter().map(|&i| pair.p[i] * (1.0 - m[i])).sum::<f64>();
    Ok(finish(type1, type2, threshold, m))
}

fn finish(type1: f64, type2: f64, threshold: usize, acceptance: Vec<f64>) -> TestResult {
    let randomization = acceptance.get(threshold).copied().unwrap_or(1.0);
    TestResult {
        type1_error: type1.clamp(0.0, 1.0),
        type2_error: type2.clamp(0.0, 1.0),
        threshold_index: threshold,
        randomization,
        acceptance,
    }
}

/// Classical pair for the n-copy problem: per pinched block and per
/// eigenvalue of that block (descending), `p` is the block's scalar value of
/// `ρ^{⊗n}` and `q` the eigenvalue. Blocks come in lexicographic type order.
pub fn reduce_to_classical(rho: &DensityMatrix, sigma: &DensityMatrix, n: usize) -> Result<ClassicalPair> {
    reduce_to_classical_within(rho, sigma, n, &Budget::default())
}

/// [`reduce_to_classical`] with explicit size limits.
pub fn reduce_to_classical_within(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    n: usize,
    budget: &Budget,
) -> Result<ClassicalPair> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    if n == 0 {
        return Err(Error::Argument("need n >= 1".into()));
    }
    let family = ProjectionFamily::from_state(rho);
    let pinched = pinch_tensor_power_within(sigma, &family, n, budget)?;
    let mut p = Vec::with_capacity(pinched.total_dim());
    let mut q = Vec::with_capacity(pinched.total_dim());
    for block in &pinched.blocks {
        let w = block.scalar_weight.expect("family built from a state");
        let mut ev = eigenvalues(block.matrix.matrix());
        ev.sort_by(|a, b| b.total_cmp(a));
        for v in ev {
            p.push(w);
            q.push(v.max(0.0));
        }
    }
    // Rounding in the block spectra is far below the mass tolerance, but
    // renormalise so both sides are exact distributions.
    let sq: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= sq);
    let sp: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sp);
    ClassicalPair::new(p, q)
}

fn check_rate(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Argument(format!("rate must be positive, got {r}")));
    }
    Ok(())
}

/// Optimal worst-case Type-I error with worst-case Type-II error at most
/// `2^{-n r}`.
pub fn alpha_nr(rho: &DensityMatrix, sigma: &DensityMatrix, n: usize, r: f64) -> Result<f64> {
    check_rate(r)?;
    let pair = reduce_to_classical(rho, sigma, n)?;
    alpha_from_pair(&pair, n, r)
}

/// [`alpha_nr`] on an already reduced pair.
pub fn alpha_from_pair(pair: &ClassicalPair, n: usize, r: f64) -> Result<f64> {
    check_rate(r)?;
    Ok(classical_np_type1(pair, (-(n as f64) * r).exp2())?.type1_error)
}

/// Optimal worst-case Type-II error with Type-I error at most `ε`.
pub fn beta_neps(rho: &DensityMatrix, sigma: &DensityMatrix, n: usize, epsilon: f64) -> Result<f64> {
    let pair = reduce_to_classical(rho, sigma, n)?;
    beta_from_pair(&pair, epsilon)
}

/// [`beta_neps`] on an already reduced pair.
pub fn beta_from_pair(pair: &ClassicalPair, epsilon: f64) -> Result<f64> {
    Ok(classical_np_type2(pair, epsilon)?.type2_error)
}

/// Which error is minimised in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SweepMode {
    /// Type-I error under a Type-II budget `2^{-n·rate}`.
    Hoeffding { rate: f64 },
    /// Type-II error under a Type-I budget `epsilon`.
    Stein { epsilon: f64 },
}

/// One row of [`finite_n_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub error: f64,
    /// `-log₂(error)/n`, `+∞` if the error vanishes.
    pub exponent: ExtendedReal,
}

/// `-log₂(error)/n`.
pub fn error_exponent(error: f64, n: usize) -> ExtendedReal {
    if error <= 0.0 {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::Finite(-error.log2() / n as f64)
    }
}

/// Exact errors and exponents for each `n` in `n_list` (strictly ascending).
pub fn finite_n_sweep(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    mode: SweepMode,
    n_list: &[usize],
) -> Result<Vec<SweepRow>> {
    finite_n_sweep_within(rho, sigma, mode, n_list, &Budget::default())
}

/// [`finite_n_sweep`] with explicit size limits.
pub fn finite_n_sweep_within(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    mode: SweepMode,
    n_list: &[usize],
    budget: &Budget,
) -> Result<Vec<SweepRow>> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Argument(
            "n list must be nonempty, positive and strictly ascending".into(),
        ));
    }
    match mode {
        SweepMode::Hoeffding { rate } => check_rate(rate)?,
        SweepMode::Stein { epsilon } => {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(Error::Argument(format!("epsilon must lie in (0,1), got {epsilon}")));
            }
        }
    }
    n_list
        .iter()
        .map(|&n| {
            let pair = reduce_to_classical_within(rho, sigma, n, budget)?;
            let error = match mode {
                SweepMode::Hoeffding { rate } => alpha_from_pair(&pair, n, rate)?,
                SweepMode::Stein { epsilon } => beta_from_pair(&pair, epsilon)?,
            };
            Ok(SweepRow {
                n,
                error,
                exponent: error_exponent(error, n),
            })
        })
        .collect()
}
