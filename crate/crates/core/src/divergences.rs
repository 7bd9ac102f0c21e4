//! Quantum relative entropies and Rényi divergences, in bits.
//!
//! Every divergence returns an [`ExtendedReal`]: support-condition failures
//! give [`ExtendedReal::PosInfinity`] explicitly rather than an `f64`
//! infinity produced by arithmetic.
//!
//! The reverse sandwiched divergence of order `α` is
//! `α/(1-α) · D_sand,1-α(σ‖ρ)`, and the reverse relative entropy is its limit
//! as `α → 1`. Both are evaluated through [`SandwichedCumulant`], i.e. the
//! function `g(β) = log₂ Q_sand,β(σ‖ρ)`, with `(1-α)·D_rsand,α = -g(1-α)` and
//! `D_rev = -g'(0⁺)`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{power_from_spectrum, trace_product, DensityMatrix, C64};
use crate::sandwich::SandwichTrace;

/// Threshold on `‖Π₀ ρ Π₀‖_F` for `supp ρ ⊆ supp σ`, with `Π₀` the kernel
/// projector of `σ`; also used for `tr(Π_ρ Π_σ)` when testing orthogonality.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Required agreement of the last two extrapolated `D_rev` estimates.
pub const REV_AGREEMENT_TOL: f64 = 1e-7;

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// The finite value, panicking on `+∞`. Meant for tests and for values
    /// known to be finite by construction.
    #[track_caller]
    pub fn unwrap(self) -> f64 {
        self.finite().expect("ExtendedReal is +inf")
    }

    /// Numeric view, mapping `+∞` to `f64::INFINITY`. Use only at output
    /// boundaries.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `self <= other + tol`, with `+∞ <= +∞`.
    pub fn le_within(self, other: ExtendedReal, tol: f64) -> bool {
        match (self, other) {
            (_, ExtendedReal::PosInfinity) => true,
            (ExtendedReal::PosInfinity, ExtendedReal::Finite(_)) => false,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a <= b + tol,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::PosInfinity => s.serialize_str("inf"),
        }
    }
}

/// Petz, sandwiched and reverse sandwiched divergences on a grid of orders,
/// plus the two `α → 1` limits as constant rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenyiCurve {
    pub alphas: Vec<f64>,
    pub petz: Vec<ExtendedReal>,
    pub sandwiched: Vec<ExtendedReal>,
    pub reverse_sandwiched: Vec<ExtendedReal>,
    pub umegaki: ExtendedReal,
    pub reverse_relative_entropy: ExtendedReal,
    /// Per-point failures; the affected entries are set to `+∞`.
    pub warnings: Vec<String>,
}

/// Nussbaum–Szkoła distributions, row-major over `(i, j)` with `i` indexing
/// eigenvectors of `ρ` and `j` those of `σ` (both in ascending eigenvalue
/// order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NSPair {
    pub dim: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl NSPair {
    pub fn p_at(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.dim + j]
    }

    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.dim + j]
    }

    /// `Σ_ij Q^s P^{1-s}` with `0^x = 0` for `x > 0`.
    pub fn mixed_moment(&self, s: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(&p, &q)| {
                if p <= 0.0 || q <= 0.0 {
                    0.0
                } else {
                    q.powf(s) * p.powf(1.0 - s)
                }
            })
            .sum()
    }
}

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(())
}

/// Bitwise-equal inputs, for which every divergence is exactly zero.
fn identical(rho: &DensityMatrix, sigma: &DensityMatrix) -> bool {
    rho.matrix() == sigma.matrix()
}

fn check_order(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha == 1.0 {
        return Err(Error::Argument(format!(
            "Renyi order must lie in (0,1) or (1,inf), got {alpha}"
        )));
    }
    Ok(())
}

/// `supp ρ ⊆ supp σ`, decided by the weight of `ρ` on the kernel of `σ`.
pub fn support_contained(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<bool> {
    check_pair(rho, sigma)?;
    let k = sigma.kernel_projector();
    let w = &k * rho.matrix() * &k;
    Ok(w.norm() <= SUPPORT_TOL)
}

fn support_projector(state: &DensityMatrix) -> DMatrix<C64> {
    let thr = state.spectrum().zero_threshold();
    state
        .spectrum()
        .map(|l| if l <= thr { 0.0 } else { 1.0 })
        .into_matrix()
}

/// Whether the supports of the two states are orthogonal, in which case all
/// quasi-divergences of order in `(0,1)` vanish.
fn supports_orthogonal(rho: &DensityMatrix, sigma: &DensityMatrix) -> bool {
    trace_product(&support_projector(rho), &support_projector(sigma)) <= SUPPORT_TOL
}

/// `(1/(α-1)) log₂ Q` from a quasi-divergence.
fn from_quasi(quasi: ExtendedReal, alpha: f64) -> ExtendedReal {
    match quasi {
        ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
        ExtendedReal::Finite(q) if q <= 0.0 => ExtendedReal::PosInfinity,
        ExtendedReal::Finite(q) => ExtendedReal::Finite(q.log2() / (alpha - 1.0)),
    }
}

/// Umegaki relative entropy `tr ρ(log ρ - log σ)`.
pub fn umegaki(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    if identical(rho, sigma) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    if !support_contained(rho, sigma)? {
        return Ok(ExtendedReal::PosInfinity);
    }
    let entropy_part: f64 = rho
        .clamped_eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.log2())
        .sum();
    // tr ρ log σ = Σ_j log μ_j ⟨v_j|ρ|v_j⟩ over the support of σ.
    let sd = sigma.spectrum();
    let thr = sd.zero_threshold();
    let v = sd.eigenvectors();
    let rho_m = rho.matrix();
    let mut cross = 0.0;
    for (j, &mu) in sd.eigenvalues().iter().enumerate() {
        if mu <= thr {
            continue;
        }
        let col = v.column(j);
        let w = (col.adjoint() * rho_m * col)[(0, 0)].re;
        cross += w * mu.log2();
    }
    Ok(ExtendedReal::Finite(entropy_part - cross))
}

/// Petz quasi-divergence `tr ρ^α σ^{1-α}`.
pub fn petz_quasi(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<ExtendedReal> {
    check_order(alpha)?;
    check_pair(rho, sigma)?;
    if identical(rho, sigma) {
        return Ok(ExtendedReal::Finite(1.0));
    }
    if alpha > 1.0 && !support_contained(rho, sigma)? {
        return Ok(ExtendedReal::PosInfinity);
    }
    if alpha < 1.0 && supports_orthogonal(rho, sigma) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    let ra = power_from_spectrum(rho.spectrum(), alpha)?;
    let sb = power_from_spectrum(sigma.spectrum(), 1.0 - alpha)?;
    Ok(ExtendedReal::Finite(trace_product(ra.matrix(), sb.matrix())))
}

/// Petz Rényi divergence.
pub fn petz_divergence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: f64,
) -> Result<ExtendedReal> {
    Ok(from_quasi(petz_quasi(rho, sigma, alpha)?, alpha))
}

/// `tr[(B^q A B^q)^α]` with `q = (1-α)/(2α)`, for `α` in `(-∞,0) ∪ (0,1) ∪
/// (1,∞)`, ignoring support conditions (the caller checks them).
fn sandwiched_trace(outer: &DensityMatrix, inner: &DensityMatrix, alpha: f64) -> Result<f64> {
    let st = SandwichTrace::new(outer.spectrum(), inner.hermitian())?;
    if alpha > 0.0 && alpha < 1.0 {
        Ok(st.log_renyi_trace(alpha).exp())
    } else {
        Ok(st.trace_power((1.0 - alpha) / (2.0 * alpha), alpha))
    }
}

/// Sandwiched quasi-divergence `tr[(σ^{(1-α)/2α} ρ σ^{(1-α)/2α})^α]`.
pub fn sand_quasi(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<ExtendedReal> {
    check_order(alpha)?;
    check_pair(rho, sigma)?;
    if identical(rho, sigma) {
        return Ok(ExtendedReal::Finite(1.0));
    }
    if alpha > 1.0 && !support_contained(rho, sigma)? {
        return Ok(ExtendedReal::PosInfinity);
    }
    if alpha < 1.0 && supports_orthogonal(rho, sigma) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    Ok(ExtendedReal::Finite(sandwiched_trace(sigma, rho, alpha)?))
}

/// Sandwiched Rényi divergence.
pub fn sand_divergence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: f64,
) -> Result<ExtendedReal> {
    Ok(from_quasi(sand_quasi(rho, sigma, alpha)?, alpha))
}

/// Reverse sandwiched Rényi divergence `α/(1-α) · D_sand,1-α(σ‖ρ)`.
///
/// For `α > 1` the inner order `1-α` is negative; that quasi-divergence is
/// finite exactly when `supp ρ ⊆ supp σ` and is evaluated with
/// pseudo-inverses on the supports.
pub fn rsand_divergence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: f64,
) -> Result<ExtendedReal> {
    check_order(alpha)?;
    check_pair(rho, sigma)?;
    if identical(rho, sigma) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    let beta = 1.0 - alpha;
    let quasi = if alpha > 1.0 {
        if !support_contained(rho, sigma)? {
            return Ok(ExtendedReal::PosInfinity);
        }
        sandwiched_trace(rho, sigma, beta)?
    } else {
        if supports_orthogonal(rho, sigma) {
            return Ok(ExtendedReal::PosInfinity);
        }
        sandwiched_trace(rho, sigma, beta)?
    };
    if quasi <= 0.0 {
        return Ok(ExtendedReal::PosInfinity);
    }
    // α/(1-α) · log₂Q/(β-1) = log₂Q/(α-1).
    Ok(ExtendedReal::Finite(quasi.log2() / (alpha - 1.0)))
}

/// Reverse relative entropy `lim_{α→1} D_rsand,α(ρ‖σ)` for full-rank states.
pub fn rev_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    if !rho.is_full_rank() || !sigma.is_full_rank() {
        return Err(Error::Domain(
            "reverse relative entropy needs full-rank states".into(),
        ));
    }
    if identical(rho, sigma) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    let g = SandwichedCumulant::new(rho, sigma)?;
    Ok(ExtendedReal::Finite(g.reverse_limit()?))
}

/// The function `g(β) = log₂ Q_sand,β(σ‖ρ)` on `β ∈ (0,1)`.
///
/// For full-rank `ρ` the function vanishes at both ends of the interval. The
/// underlying factorisation is computed once, so repeated evaluation is
/// cheap.
#[derive(Debug, Clone)]
pub struct SandwichedCumulant {
    trace: SandwichTrace,
}

impl SandwichedCumulant {
    pub fn new(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Self> {
        check_pair(rho, sigma)?;
        Ok(Self {
            trace: SandwichTrace::new(rho.spectrum(), sigma.hermitian())?,
        })
    }

    /// `g(β)` in bits for `β ∈ (0,1)`; `-∞` if `Q` vanishes.
    pub fn value(&self, beta: f64) -> f64 {
        self.trace.log_renyi_trace(beta) / std::f64::consts::LN_2
    }

    /// `-g(β)/β`, whose limit at `β → 0` is the reverse relative entropy.
    pub fn slope_estimate(&self, beta: f64) -> f64 {
        -self.value(beta) / beta
    }

    /// `-g'(0⁺)` by second-order Richardson extrapolation of `-g(β)/β` at
    /// `β = 2^-k`. Uses `k = 4..=12`; if the last two estimates disagree the
    /// sequence is extended (up to `k = 20`) before giving up.
    pub fn reverse_limit(&self) -> Result<f64> {
        const K_MIN: i32 = 4;
        const K_FIRST: i32 = 12;
        const K_MAX: i32 = 20;
        let f: Vec<f64> = (K_MIN..=K_MAX)
            .map(|k| self.slope_estimate(2f64.powi(-k)))
            .collect();
        // The error of -g(β)/β is a power series in β, so halving β twice
        // removes the β and β² terms.
        let r1: Vec<f64> = (1..f.len()).map(|i| 2.0 * f[i] - f[i - 1]).collect();
        let r2: Vec<f64> = (1..r1.len())
            .map(|i| (4.0 * r1[i] - r1[i - 1]) / 3.0)
            .collect();
        // r2[i] corresponds to k = K_MIN + 2 + i.
        for k_last in K_FIRST..=K_MAX {
            let i = (k_last - K_MIN - 2) as usize;
            if (r2[i] - r2[i - 1]).abs() <= REV_AGREEMENT_TOL {
                return Ok(r2[i].max(0.0));
            }
        }
        Err(Error::NonConvergence {
            what: "reverse relative entropy extrapolation",
            table: r2,
        })
    }
}

/// Evaluates the three Rényi families on `alphas` and the two limits.
pub fn divergence_curve(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alphas: &[f64],
) -> Result<RenyiCurve> {
    check_pair(rho, sigma)?;
    if alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::Argument("curve orders must lie in (0,1)".into()));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument(
            "curve orders must be strictly increasing".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut point = |name: &str, alpha: f64, r: Result<ExtendedReal>| match r {
        Ok(v) => v,
        Err(e) => {
            warnings.push(format!("{name} at alpha={alpha}: {e}"));
            ExtendedReal::PosInfinity
        }
    };
    let mut petz = Vec::with_capacity(alphas.len());
    let mut sandwiched = Vec::with_capacity(alphas.len());
    let mut reverse_sandwiched = Vec::with_capacity(alphas.len());
    for &a in alphas {
        petz.push(point("petz", a, petz_divergence(rho, sigma, a)));
        sandwiched.push(point("sandwiched", a, sand_divergence(rho, sigma, a)));
        reverse_sandwiched.push(point("reverse sandwiched", a, rsand_divergence(rho, sigma, a)));
    }
    let umegaki = point("umegaki", 1.0, umegaki(rho, sigma));
    let reverse_relative_entropy = point("reverse relative entropy", 1.0, rev_relative_entropy(rho, sigma));
    Ok(RenyiCurve {
        alphas: alphas.to_vec(),
        petz,
        sandwiched,
        reverse_sandwiched,
        umegaki,
        reverse_relative_entropy,
        warnings,
    })
}

/// Nussbaum–Szkoła pair `P(i,j) = λ_i|⟨u_i|v_j⟩|²`, `Q(i,j) = μ_j|⟨u_i|v_j⟩|²`.
pub fn ns_distributions(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<NSPair> {
    check_pair(rho, sigma)?;
    let d = rho.dim();
    let lam = rho.clamped_eigenvalues();
    let mu = sigma.clamped_eigenvalues();
    let overlap = rho.spectrum().eigenvectors().adjoint() * sigma.spectrum().eigenvectors();
    let mut p = Vec::with_capacity(d * d);
    let mut q = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let w = overlap[(i, j)].norm_sqr();
            p.push(lam[i] * w);
            q.push(mu[j] * w);
        }
    }
    Ok(NSPair { dim: d, p, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::matrix_power;
    use crate::random::{random_state, seeded_rng};
    use proptest::prelude::*;

    fn worked_pair() -> (DensityMatrix, DensityMatrix) {
        (
            DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap(),
            DensityMatrix::from_real_rows(&[&[0.7, 0.3], &[0.3, 0.3]]).unwrap(),
        )
    }

    fn commuting_pair() -> (DensityMatrix, DensityMatrix) {
        (
            DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap(),
            DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap(),
        )
    }

    fn close(a: ExtendedReal, b: f64, tol: f64) -> bool {
        matches!(a, ExtendedReal::Finite(v) if (v - b).abs() <= tol)
    }

    /// `Σ λ_k log₂(λ_k/δ_k)` with `δ_k` the LDL pivots of σ in ρ's eigenbasis,
    /// ordered by decreasing λ. Closed form for the reverse relative entropy.
    fn rev_closed_form(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let sd = rho.spectrum();
        let d = sd.dim();
        let u = sd.eigenvectors();
        // Columns in decreasing-eigenvalue order.
        let order: Vec<usize> = (0..d).rev().collect();
        let s = u.adjoint() * sigma.matrix() * u;
        let mut a = DMatrix::from_fn(d, d, |i, j| s[(order[i], order[j])]);
        let mut total = 0.0;
        for k in 0..d {
            let pivot = a[(k, k)].re;
            let lam = sd.eigenvalues()[order[k]];
            total += lam * (lam / pivot).log2();
            for i in k + 1..d {
                for j in k + 1..d {
                    let upd = a[(i, k)] * a[(k, j)] / a[(k, k)];
                    a[(i, j)] -= upd;
                }
            }
        }
        total
    }

    #[test]
    fn extended_real_display() {
        assert_eq!(ExtendedReal::PosInfinity.to_string(), "inf");
        assert_eq!(ExtendedReal::Finite(0.5).to_string(), "0.5");
        assert_eq!(serde_json::to_string(&ExtendedReal::PosInfinity).unwrap(), "\"inf\"");
    }

    #[test]
    fn umegaki_examples() {
        let (r, s) = commuting_pair();
        assert!(close(umegaki(&r, &r).unwrap(), 0.0, 1e-10));
        let want = 0.8 * 1.6f64.log2() + 0.2 * 0.4f64.log2();
        assert!(close(umegaki(&r, &s).unwrap(), want, 1e-12));
        assert!((want - 0.278072).abs() < 1e-6);
        let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(umegaki(&mixed, &pure).unwrap(), ExtendedReal::PosInfinity);
        assert!(umegaki(&pure, &mixed).unwrap().is_finite());
    }

    #[test]
    fn umegaki_worked_pair() {
        let (r, s) = worked_pair();
        assert!(close(umegaki(&r, &s).unwrap(), 0.370_597_037_227_179_9, 1e-12));
    }

    #[test]
    fn petz_examples() {
        let (r, s) = commuting_pair();
        assert!(close(petz_quasi(&r, &r, 0.3).unwrap(), 1.0, 1e-12));
        assert!(close(petz_quasi(&r, &r, 2.5).unwrap(), 1.0, 1e-12));
        let want = 0.4f64.sqrt() + 0.1f64.sqrt();
        assert!(close(petz_quasi(&r, &s, 0.5).unwrap(), want, 1e-12));
        assert!(close(petz_divergence(&r, &s, 0.5).unwrap(), -2.0 * want.log2(), 1e-12));
        assert!(close(petz_divergence(&r, &s, 0.5).unwrap(), 0.152_003_1, 1e-6));
        assert!(close(petz_divergence(&r, &r, 0.7).unwrap(), 0.0, 1e-12));
        let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(petz_quasi(&mixed, &pure, 2.0).unwrap(), ExtendedReal::PosInfinity);
        assert!(matches!(petz_quasi(&r, &s, 1.0), Err(Error::Argument(_))));
        assert!(matches!(petz_quasi(&r, &s, -0.5), Err(Error::Argument(_))));
    }

    #[test]
    fn orthogonal_supports_give_infinity_below_one() {
        let a = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(petz_divergence(&a, &b, 0.5).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(sand_divergence(&a, &b, 0.5).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(rsand_divergence(&a, &b, 0.5).unwrap(), ExtendedReal::PosInfinity);
    }

    #[test]
    fn sandwiched_examples() {
        let (r, s) = commuting_pair();
        assert!(close(sand_quasi(&r, &r, 0.4).unwrap(), 1.0, 1e-12));
        assert!(close(sand_divergence(&r, &r, 3.0).unwrap(), 0.0, 1e-12));
        let want = 0.4f64.sqrt() + 0.1f64.sqrt();
        assert!(close(sand_quasi(&r, &s, 0.5).unwrap(), want, 1e-12));
        let (r, s) = worked_pair();
        let a = sand_divergence(&r, &s, 0.5).unwrap().unwrap();
        let b = sand_divergence(&s, &r, 0.5).unwrap().unwrap();
        assert!((a - b).abs() < 1e-9);
        // Independent route: -2 log₂ ‖√ρ √σ‖₁.
        let rs = matrix_power(r.hermitian(), 0.5).unwrap();
        let ss = matrix_power(s.hermitian(), 0.5).unwrap();
        let m = rs.matrix() * ss.matrix();
        let fid: f64 = m.singular_values().iter().sum();
        assert!((a + 2.0 * fid.log2()).abs() < 1e-12);
    }

    #[test]
    fn sandwiched_above_one_matches_direct() {
        let (r, s) = worked_pair();
        for &alpha in &[1.5, 2.0, 4.0] {
            let q = (1.0 - alpha) / (2.0 * alpha);
            let sq = matrix_power(s.hermitian(), q).unwrap();
            let inner = sq.matrix() * r.matrix() * sq.matrix();
            let inner = crate::matrix::HermitianMatrix::new(inner).unwrap();
            let direct = matrix_power(&inner, alpha).unwrap().trace();
            assert!(close(sand_quasi(&r, &s, alpha).unwrap(), direct, 1e-10));
        }
    }

    #[test]
    fn reverse_sandwiched_examples() {
        let (r, s) = worked_pair();
        assert!(close(rsand_divergence(&r, &r, 0.3).unwrap(), 0.0, 1e-12));
        assert!(close(rsand_divergence(&r, &r, 2.0).unwrap(), 0.0, 1e-12));
        let half = sand_divergence(&r, &s, 0.5).unwrap().unwrap();
        assert!(close(rsand_divergence(&r, &s, 0.5).unwrap(), half, 1e-9));
        let rs8 = rsand_divergence(&r, &s, 0.8).unwrap().unwrap();
        let sd8 = sand_divergence(&r, &s, 0.8).unwrap().unwrap();
        assert!(sd8 - rs8 >= 1e-6, "{rs8} vs {sd8}");
    }

    #[test]
    fn reverse_sandwiched_ill_conditioned_reference() {
        // A pair where forming ρ^{α/(1-α)} in floating point drops an
        // eigenvalue of the sandwich; reference value from 60-digit
        // arithmetic.
        let c = |re, im| C64::new(re, im);
        let r = DensityMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[
            c(0.29294610413555333, 0.0), c(0.040171065095440425, -0.3476332891071224),
            c(0.040171065095440425, 0.3476332891071224), c(0.7070538958644467, 0.0),
        ]))
        .unwrap();
        let s = DensityMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[
            c(0.6669735934486501, 0.0), c(-0.3720299512118625, 0.05069053771356337),
            c(-0.3720299512118625, -0.05069053771356337), c(0.3330264065513499, 0.0),
        ]))
        .unwrap();
        let v = rsand_divergence(&r, &s, 0.9272311996624296).unwrap().unwrap();
        assert!((v - 1.156_642_432_866_184_4).abs() < 1e-11, "{v}");
    }

    #[test]
    fn reverse_sandwiched_above_one() {
        let (r, s) = worked_pair();
        for &alpha in &[1.5, 2.0] {
            let e = alpha / (2.0 * (1.0 - alpha));
            let rp = matrix_power(r.hermitian(), e).unwrap();
            let m = rp.matrix() * s.matrix() * rp.matrix();
            let m = crate::matrix::HermitianMatrix::new(m).unwrap();
            let t = matrix_power(&m, 1.0 - alpha).unwrap().trace();
            let want = t.log2() / (alpha - 1.0);
            assert!(close(rsand_divergence(&r, &s, alpha).unwrap(), want, 1e-10));
        }
        let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(rsand_divergence(&mixed, &pure, 2.0).unwrap(), ExtendedReal::PosInfinity);
        assert!(rsand_divergence(&pure, &mixed, 2.0).unwrap().is_finite());
    }

    #[test]
    fn reverse_relative_entropy_examples() {
        let (r, s) = worked_pair();
        assert!(close(rev_relative_entropy(&r, &r).unwrap(), 0.0, 1e-10));
        let d = rev_relative_entropy(&r, &s).unwrap().unwrap();
        assert!((d - 0.198_594_546_621_206_5).abs() < 1e-8, "{d}");
        assert!((d - rev_closed_form(&r, &s)).abs() < 1e-8);
        let u = umegaki(&r, &s).unwrap().unwrap();
        assert!(u - d >= 1e-4);
        let (r, s) = commuting_pair();
        let d = rev_relative_entropy(&r, &s).unwrap().unwrap();
        assert!((d - umegaki(&r, &s).unwrap().unwrap()).abs() < 1e-6);
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(rev_relative_entropy(&pure, &s), Err(Error::Domain(_))));
        assert!(matches!(rev_relative_entropy(&s, &pure), Err(Error::Domain(_))));
    }

    #[test]
    fn curve_rows() {
        let (r, s) = worked_pair();
        let alphas: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
        let c = divergence_curve(&r, &s, &alphas).unwrap();
        assert!(c.warnings.is_empty());
        let u = c.umegaki.unwrap();
        for i in 0..alphas.len() {
            let (p, sd) = (c.petz[i].unwrap(), c.sandwiched[i].unwrap());
            assert!(sd <= p + 1e-12 && p <= u + 1e-12, "alpha={}", alphas[i]);
        }
        let c = divergence_curve(&r, &r, &alphas).unwrap();
        for row in [&c.petz, &c.sandwiched, &c.reverse_sandwiched] {
            assert!(row.iter().all(|v| close(*v, 0.0, 1e-10)));
        }
        let (r, s) = commuting_pair();
        let c = divergence_curve(&r, &s, &alphas).unwrap();
        for i in 0..alphas.len() {
            assert!((c.petz[i].unwrap() - c.sandwiched[i].unwrap()).abs() < 1e-10);
        }
        assert!(divergence_curve(&r, &s, &[0.5, 0.4]).is_err());
        assert!(divergence_curve(&r, &s, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn curve_reports_failures_as_infinity() {
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let c = divergence_curve(&pure, &mixed, &[0.5]).unwrap();
        assert_eq!(c.reverse_relative_entropy, ExtendedReal::PosInfinity);
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn ns_examples() {
        let r = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let s = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let ns = ns_distributions(&r, &s).unwrap();
        // Ascending eigenvalue order: index 0 is the smaller eigenvalue.
        assert!((ns.p_at(0, 0) - 0.2).abs() < 1e-15 && (ns.p_at(1, 1) - 0.8).abs() < 1e-15);
        assert!((ns.q_at(0, 0) - 0.3).abs() < 1e-15 && (ns.q_at(1, 1) - 0.7).abs() < 1e-15);
        assert_eq!(ns.p_at(0, 1), 0.0);
        let ns = ns_distributions(&r, &r).unwrap();
        assert_eq!(ns.p, ns.q);
    }

    #[test]
    fn ns_identity_worked_pair() {
        let (r, s) = worked_pair();
        let ns = ns_distributions(&r, &s).unwrap();
        assert!((ns.p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((ns.q.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for k in 1..=9 {
            let sv = k as f64 / 10.0;
            let lhs = ns.mixed_moment(sv);
            let rhs = petz_quasi(&s, &r, sv).unwrap().unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    fn pair_strategy() -> impl Strategy<Value = (DensityMatrix, DensityMatrix)> {
        (2usize..=4, any::<u64>()).prop_map(|(d, seed)| {
            let mut rng = seeded_rng(seed);
            let r = random_state(&mut rng, d, d).unwrap();
            let s = random_state(&mut rng, d, d).unwrap();
            (r, s)
        })
    }

    /// Pairs with all eigenvalues at least `0.1/d`: the gap between the Petz
    /// divergence at `1-h` and the relative entropy is about `h·V/(2 ln 2)`
    /// with `V` the variance of the log-likelihood ratio, which blows up as
    /// eigenvalues approach zero.
    fn well_conditioned_pair_strategy() -> impl Strategy<Value = (DensityMatrix, DensityMatrix)> {
        pair_strategy().prop_map(|(r, s)| {
            let d = r.dim();
            let mix = |x: &DensityMatrix| {
                let id = DMatrix::<C64>::identity(d, d).unscale(d as f64);
                DensityMatrix::from_matrix(x.matrix().scale(0.9) + id.scale(0.1)).unwrap()
            };
            (mix(&r), mix(&s))
        })
    }

    /// Random pinching onto the blocks of a random partition of the
    /// computational basis after a random unitary change of basis.
    fn pinch(state: &DensityMatrix, u: &DMatrix<C64>, labels: &[usize]) -> DensityMatrix {
        let m = u.adjoint() * state.matrix() * u;
        let d = m.nrows();
        let p = DMatrix::from_fn(d, d, |i, j| {
            if labels[i] == labels[j] {
                m[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        DensityMatrix::from_matrix(u * p * u.adjoint()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ordering_of_families((r, s) in pair_strategy(), alpha in 0.02f64..0.98) {
            let sd = sand_divergence(&r, &s, alpha).unwrap();
            let p = petz_divergence(&r, &s, alpha).unwrap();
            let u = umegaki(&r, &s).unwrap();
            prop_assert!(sd.le_within(p, 1e-9));
            prop_assert!(p.le_within(u, 1e-9));
            prop_assert!(u.unwrap() >= -1e-9);
        }

        #[test]
        fn petz_monotone_in_order((r, s) in pair_strategy()) {
            let mut prev = f64::NEG_INFINITY;
            for k in 1..20 {
                let v = petz_divergence(&r, &s, k as f64 * 0.05).unwrap().unwrap();
                prop_assert!(v >= prev - 1e-9);
                prev = v;
            }
        }

        #[test]
        fn half_order_coincidence((r, s) in pair_strategy()) {
            let a = rsand_divergence(&r, &s, 0.5).unwrap().unwrap();
            let b = sand_divergence(&r, &s, 0.5).unwrap().unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn reverse_sandwiched_matches_direct_formula((r, s) in pair_strategy(), alpha in 0.05f64..0.95) {
            let e = alpha / (2.0 * (1.0 - alpha));
            // The direct route forms ρ^{2e}; once its condition number nears
            // 1/ε the small eigenvalues of the sandwich are lost in rounding
            // and it stops being a usable reference.
            let ev = r.spectrum().eigenvalues();
            let spread = (ev[ev.len() - 1] / ev[0]).powf(2.0 * e);
            prop_assume!(spread < 1e6);
            let rp = matrix_power(r.hermitian(), e).unwrap();
            let m = rp.matrix() * s.matrix() * rp.matrix();
            let m = crate::matrix::HermitianMatrix::new(m).unwrap();
            let t = matrix_power(&m, 1.0 - alpha).unwrap().trace();
            let direct = t.log2() / (alpha - 1.0);
            let v = rsand_divergence(&r, &s, alpha).unwrap().unwrap();
            prop_assert!((v - direct).abs() < 1e-9, "{} vs {}", v, direct);
        }

        #[test]
        fn reverse_sandwiched_data_processing(
            (r, s) in pair_strategy(),
            alpha in 0.02f64..0.5,
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let mut rng = seeded_rng(seed);
            let d = r.dim();
            let u = crate::random::random_unitary(&mut rng, d);
            let labels: Vec<usize> = (0..d).map(|_| rng.random_range(0..d)).collect();
            let (pr, ps) = (pinch(&r, &u, &labels), pinch(&s, &u, &labels));
            let before = rsand_divergence(&r, &s, alpha).unwrap();
            let after = rsand_divergence(&pr, &ps, alpha).unwrap();
            prop_assert!(after.le_within(before, 1e-9));
        }

        #[test]
        fn ns_trace_identity((r, s) in pair_strategy()) {
            let ns = ns_distributions(&r, &s).unwrap();
            for k in 1..=9 {
                let sv = k as f64 / 10.0;
                let rhs = petz_quasi(&s, &r, sv).unwrap().unwrap();
                prop_assert!((ns.mixed_moment(sv) - rhs).abs() < 1e-10);
            }
        }

        #[test]
        fn petz_tends_to_umegaki((r, s) in well_conditioned_pair_strategy()) {
            let p = petz_divergence(&r, &s, 1.0 - 1e-4).unwrap().unwrap();
            let u = umegaki(&r, &s).unwrap().unwrap();
            prop_assert!((p - u).abs() < 1e-3);
        }

        #[test]
        fn reverse_entropy_bounds_and_closed_form((r, s) in pair_strategy()) {
            if let Ok(v) = rev_relative_entropy(&r, &s) {
                let v = v.unwrap();
                let u = umegaki(&r, &s).unwrap().unwrap();
                prop_assert!(v >= 0.0 && v <= u + 1e-7);
                prop_assert!((v - rev_closed_form(&r, &s)).abs() < 1e-6);
            }
        }
    }
}
