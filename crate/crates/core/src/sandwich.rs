//! Trace functionals `tr[(B^q A B^q)^p]` that stay accurate when `B^q` has an
//! enormous dynamic range.
//!
//! For small Rényi orders the sandwiching exponent `q = (1-β)/(2β)` grows
//! without bound, the eigenvalues of `B^q A B^q` spread over far more decades
//! than `f64` can hold, and yet each of them contributes an O(1) amount to the
//! trace once raised to the small power `p = β`. Forming the matrix explicitly
//! loses everything below `ε·‖B^q A B^q‖`.
//!
//! Instead we factor `A = C C†`, write `B^q A B^q = G G†` with `G = D^q C` in
//! the eigenbasis of `B`, and run a one-sided Jacobi iteration on the rows of
//! `G`. Each row is stored as a unit direction plus a natural-log scale, so
//! rotations between rows of wildly different size never form the small or
//! large numbers explicitly. One-sided Jacobi is relatively accurate on
//! row-graded matrices, which is exactly the shape of `D^q C`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::matrix::{decompose_labeled, eigenvalues, power_from_spectrum, HermitianMatrix,
    SpectralDecomposition, C64, ZERO_EIGENVALUE_RTOL};

/// Rows whose residual after projecting out the others falls under this
/// fraction of their norm are treated as linearly dependent.
const DEPENDENCE_RTOL: f64 = 1e-7;
const MAX_SWEEPS: usize = 80;

/// Precomputed data for evaluating `tr[(B^q A B^q)^p]` at many `(q, p)`.
#[derive(Debug, Clone)]
pub struct SandwichTrace {
    /// `ln λ_i` of `B` for the rows kept in `rows`.
    log_outer: Vec<f64>,
    /// Rows of a factor `C` with `C C† = U† A U`, one per support index of `B`
    /// whose row is not negligible.
    rows: Vec<DVector<C64>>,
    /// Whether the kept rows are linearly independent; if not, the graded
    /// iteration would manufacture spurious tiny eigenvalues and we fall back
    /// to forming the matrix.
    graded: bool,
    outer: SpectralDecomposition,
    inner: HermitianMatrix,
}

/// A row `exp(graded + offset) · dir` with `dir` a unit vector. `graded` is
/// the `q·ln λ` part, kept apart so callers can cancel it analytically.
#[derive(Debug, Clone)]
struct ScaledRow {
    graded: f64,
    offset: f64,
    dir: DVector<C64>,
}

impl ScaledRow {
    fn log_scale(&self) -> f64 {
        self.graded + self.offset
    }
}

impl SandwichTrace {
    /// `outer` is the spectral decomposition of `B` (PSD), `inner` is `A` (PSD).
    pub fn new(outer: &SpectralDecomposition, inner: &HermitianMatrix) -> Result<Self> {
        let u = outer.eigenvectors();
        let inner_rot = inner.in_basis(u);
        let sd = decompose_labeled(&inner_rot, "sandwich inner factor")?;
        let a_thr = sd.zero_threshold();
        let support: Vec<usize> = (0..sd.dim())
            .filter(|&k| sd.eigenvalues()[k] > a_thr)
            .collect();
        let d = outer.dim();
        // C̃ = V diag(sqrt a) restricted to the support of A: d x rank(A).
        let factor = DMatrix::from_fn(d, support.len(), |i, c| {
            let k = support[c];
            sd.eigenvectors()[(i, k)] * sd.eigenvalues()[k].sqrt()
        });

        let b_thr = outer.zero_threshold();
        let diag_max = (0..d)
            .map(|i| inner_rot.matrix()[(i, i)].re)
            .fold(0.0f64, f64::max);
        let mut log_outer = Vec::new();
        let mut rows = Vec::new();
        for i in 0..d {
            let lambda = outer.eigenvalues()[i];
            if lambda <= b_thr {
                continue;
            }
            let row: DVector<C64> = factor.row(i).transpose();
            if row.norm_squared() <= ZERO_EIGENVALUE_RTOL * diag_max {
                continue;
            }
            log_outer.push(lambda.ln());
            rows.push(row);
        }
        let graded = rows_independent(&rows);
        Ok(Self {
            log_outer,
            rows,
            graded,
            outer: outer.clone(),
            inner: inner.clone(),
        })
    }

    /// Natural logarithms of the nonzero eigenvalues of `B^q A B^q`, with
    /// `B^q` taken on the support of `B`.
    pub fn log_eigenvalues(&self, q: f64) -> Vec<f64> {
        if self.graded {
            self.graded_log_eigenvalues(q)
        } else {
            self.direct_log_eigenvalues(q)
        }
    }

    /// `tr[(B^q A B^q)^p]`. Zero eigenvalues contribute nothing for any `p`
    /// (for `p <= 0` this is the pseudo-inverse convention).
    pub fn trace_power(&self, q: f64, p: f64) -> f64 {
        self.log_eigenvalues(q).iter().map(|&l| (p * l).exp()).sum()
    }

    /// `ln tr[(B^q A B^q)^β]` with `q = (1-β)/(2β)`, the Rényi-order
    /// pairing used by sandwiched quasi-divergences.
    ///
    /// On the graded route each eigenvalue is `exp(2q ln λ_i + 2 o_i)`, so its
    /// `β`-th power is `λ_i^{1-β} exp(2β o_i)` exactly. Writing the trace as
    /// `Σλ_i + Σ λ_i expm1(β(2o_i - ln λ_i))` keeps full relative accuracy as
    /// `β → 0`, where the trace tends to `Σλ_i`.
    pub fn log_renyi_trace(&self, beta: f64) -> f64 {
        let q = (1.0 - beta) / (2.0 * beta);
        if !self.graded {
            return self.trace_power(q, beta).ln();
        }
        let rows = self.graded_rows(q);
        let mut mass_defect = -1.0;
        let mut excess = 0.0;
        for (row, &l) in rows.iter().zip(&self.log_outer) {
            let lambda = l.exp();
            mass_defect += lambda;
            excess += lambda * (beta * (2.0 * row.offset - l)).exp_m1();
        }
        (mass_defect + excess).ln_1p()
    }

    fn graded_rows(&self, q: f64) -> Vec<ScaledRow> {
        let mut rows: Vec<ScaledRow> = self
            .rows
            .iter()
            .zip(&self.log_outer)
            .map(|(r, &l)| {
                let n = r.norm();
                ScaledRow {
                    graded: q * l,
                    offset: n.ln(),
                    dir: r / C64::new(n, 0.0),
                }
            })
            .collect();
        one_sided_jacobi(&mut rows);
        rows
    }

    fn graded_log_eigenvalues(&self, q: f64) -> Vec<f64> {
        self.graded_rows(q)
            .iter()
            .map(|r| 2.0 * r.log_scale())
            .collect()
    }

    fn direct_log_eigenvalues(&self, q: f64) -> Vec<f64> {
        let Ok(bq) = power_from_spectrum(&self.outer, q) else {
            return Vec::new();
        };
        let m = bq.matrix() * self.inner.matrix() * bq.matrix();
        let m = HermitianMatrix::from_raw(m);
        let vals = eigenvalues(m.matrix());
        let radius = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let thr = ZERO_EIGENVALUE_RTOL * radius;
        vals.into_iter().filter(|&v| v > thr).map(f64::ln).collect()
    }
}

fn rows_independent(rows: &[DVector<C64>]) -> bool {
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(rows.len());
    for r in rows {
        let n0 = r.norm();
        let mut w = r.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let n = w.norm();
        if n <= DEPENDENCE_RTOL * n0 {
            return false;
        }
        basis.push(w / C64::new(n, 0.0));
    }
    true
}

/// Orthogonalises the rows by plane rotations applied on the left. The Gram
/// matrix `G G†` stays unitarily similar throughout, and at convergence its
/// eigenvalues are the squared row norms `exp(2·log_scale)`.
fn one_sided_jacobi(rows: &mut [ScaledRow]) {
    let k = rows.len();
    if k < 2 {
        return;
    }
    let dim = rows[0].dir.len() as f64;
    let tol = 4.0 * f64::EPSILON * dim.max(1.0);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let (hi, lo) = if rows[i].log_scale() >= rows[j].log_scale() {
                    (i, j)
                } else {
                    (j, i)
                };
                let gamma = rows[lo].dir.dotc(&rows[hi].dir);
                let g_abs = gamma.norm();
                if g_abs <= tol {
                    continue;
                }
                rotated = true;
                let kappa = ((rows[lo].graded - rows[hi].graded)
                    + (rows[lo].offset - rows[hi].offset))
                    .exp();
                let phase = gamma / g_abs;
                let one_minus = 1.0 - kappa * kappa;
                let den = one_minus + (one_minus * one_minus + 4.0 * kappa * kappa * g_abs * g_abs).sqrt();
                // tan θ = κ · t_over_k; both stay finite when κ underflows.
                let t_over_k = 2.0 * g_abs / den;
                let t = kappa * t_over_k;
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn_times_k = cs * t * kappa;
                let sn_over_k = cs * t_over_k;

                let u_hi = rows[hi].dir.clone();
                let u_lo = rows[lo].dir.clone();
                let new_hi = u_hi.scale(cs) + u_lo.clone() * (phase * sn_times_k);
                let new_lo = u_lo.scale(cs) - u_hi * (phase.conj() * sn_over_k);
                renormalise(&mut rows[hi], new_hi);
                renormalise(&mut rows[lo], new_lo);
            }
        }
        if !rotated {
            break;
        }
    }
}

fn renormalise(row: &mut ScaledRow, dir: DVector<C64>) {
    let n = dir.norm();
    row.offset += n.ln();
    row.dir = dir / C64::new(n, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{spectral_decompose, DensityMatrix};

    fn worked_pair() -> (DensityMatrix, DensityMatrix) {
        (
            DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap(),
            DensityMatrix::from_real_rows(&[&[0.7, 0.3], &[0.3, 0.3]]).unwrap(),
        )
    }

    fn naive(outer: &DensityMatrix, inner: &DensityMatrix, q: f64, p: f64) -> f64 {
        let bq = crate::matrix::matrix_power(outer.hermitian(), q).unwrap();
        let m = HermitianMatrix::from_raw(bq.matrix() * inner.matrix() * bq.matrix());
        eigenvalues(m.matrix())
            .into_iter()
            .filter(|&v| v > 1e-300)
            .map(|v| v.powf(p))
            .sum()
    }

    #[test]
    fn matches_direct_evaluation_in_moderate_range() {
        let (rho, sigma) = worked_pair();
        for (outer, inner) in [(&rho, &sigma), (&sigma, &rho)] {
            let st = SandwichTrace::new(outer.spectrum(), inner.hermitian()).unwrap();
            assert!(st.graded);
            for &beta in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                let q = (1.0 - beta) / (2.0 * beta);
                let a = st.trace_power(q, beta);
                let b = naive(outer, inner, q, beta);
                // The direct route loses digits as the powers of the outer
                // matrix spread, so only moderate agreement is expected.
                assert!((a - b).abs() < 1e-9, "beta={beta}: {a} vs {b}");
            }
            // Negative exponents (pseudo-inverse side) as well.
            for &alpha in &[1.5, 2.0, 3.0] {
                let q = (1.0 - alpha) / (2.0 * alpha);
                let a = st.trace_power(q, alpha);
                let b = naive(outer, inner, q, alpha);
                assert!((a - b).abs() < 1e-11 * b.abs().max(1.0), "alpha={alpha}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn graded_value_matches_high_precision_reference() {
        // 50-digit evaluation of tr[(ρ^4.5 σ ρ^4.5)^0.1].
        let (rho, sigma) = worked_pair();
        let st = SandwichTrace::new(rho.spectrum(), sigma.hermitian()).unwrap();
        let v = st.trace_power(4.5, 0.1);
        assert!((v - 0.986_329_163_433_562_08).abs() < 1e-15, "{v}");
        // Same with the roles swapped: tr[(σ^4.5 ρ σ^4.5)^0.1].
        let st = SandwichTrace::new(sigma.spectrum(), rho.hermitian()).unwrap();
        let v = st.trace_power(4.5, 0.1);
        assert!((v - 0.986_063_281_791_093_41).abs() < 1e-15, "{v}");
    }

    #[test]
    fn graded_eigenvalues_follow_ldl_pivots() {
        // For q -> inf the eigenvalues of D^q σ D^q behave like λ_k^{2q} δ_k
        // with δ_k the LDL pivots of σ in decreasing-λ order.
        let (rho, sigma) = worked_pair();
        let st = SandwichTrace::new(rho.spectrum(), sigma.hermitian()).unwrap();
        let q = 4000.0;
        let mut logs = st.log_eigenvalues(q);
        logs.sort_by(f64::total_cmp);
        let d1 = 0.7f64;
        let d2: f64 = (0.21 - 0.09) / 0.7;
        let want_small = 2.0 * q * 0.2f64.ln() + d2.ln();
        let want_big = 2.0 * q * 0.8f64.ln() + d1.ln();
        assert!((logs[0] - want_small).abs() < 1e-9 * want_small.abs());
        assert!((logs[1] - want_big).abs() < 1e-9 * want_big.abs());
        assert!(logs[0] < -5000.0);
    }

    #[test]
    fn renyi_trace_keeps_precision_near_zero_order() {
        let (rho, sigma) = worked_pair();
        let st = SandwichTrace::new(rho.spectrum(), sigma.hermitian()).unwrap();
        for &beta in &[0.2, 0.5, 0.8] {
            let q = (1.0 - beta) / (2.0 * beta);
            let a = st.log_renyi_trace(beta);
            let b = naive(&rho, &sigma, q, beta).ln();
            assert!((a - b).abs() < 1e-13, "beta={beta}: {a} vs {b}");
        }
        // -ln Q / β tends to Σ λ_k ln(λ_k / δ_k) in nats.
        let limit = 0.8 * (0.8f64 / 0.7).ln() + 0.2 * (0.2f64 / (0.12 / 0.7)).ln();
        let beta = 1e-9;
        let f = -st.log_renyi_trace(beta) / beta;
        assert!((f - limit).abs() < 1e-6, "{f} vs {limit}");
    }

    #[test]
    fn rank_deficient_inner_is_exact() {
        let rho = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let pure = DensityMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let st = SandwichTrace::new(rho.spectrum(), pure.hermitian()).unwrap();
        for &beta in &[1e-4, 0.3, 0.9] {
            let q = (1.0 - beta) / (2.0 * beta);
            let v = st.trace_power(q, beta);
            assert!((v - 0.8f64.powf(1.0 - beta)).abs() < 1e-14);
        }
    }

    #[test]
    fn dependent_rows_fall_back() {
        // Rank-one inner state in a generic direction: the two rows of C are
        // parallel and the direct route must be used.
        let v = [0.6f64, 0.8];
        let psi = DensityMatrix::from_real_rows(&[
            &[v[0] * v[0], v[0] * v[1]],
            &[v[1] * v[0], v[1] * v[1]],
        ])
        .unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let st = SandwichTrace::new(rho.spectrum(), psi.hermitian()).unwrap();
        assert!(!st.graded);
        let q = 0.25;
        let direct = naive(&rho, &psi, q, 2.0);
        assert!((st.trace_power(q, 2.0) - direct).abs() < 1e-14);
        let _ = spectral_decompose(psi.hermitian()).unwrap();
    }
}
