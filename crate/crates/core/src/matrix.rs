//! Dense Hermitian linear algebra.
//!
//! Every matrix function in the crate goes through [`spectral_decompose`]:
//! powers, logarithms and support projectors are all defined by mapping the
//! eigenvalues and keeping the eigenvectors. Eigenvalues whose magnitude is at
//! most [`ZERO_EIGENVALUE_RTOL`] times the spectral radius are treated as
//! exact zeros, and all logarithms are base 2.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;

/// Tolerance for `A_ij == conj(A_ji)` at construction.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `|tr(rho) - 1|` and on negative eigenvalues of a state.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of the spectral radius count as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-12;
/// Eigenvalues closer than this fraction of the spectral radius share an
/// eigenspace for tie-breaking purposes.
pub const DEGENERACY_RTOL: f64 = 1e-10;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Validates squareness and Hermiticity (within [`HERMITIAN_TOL`]) and
    /// stores the exactly symmetrised matrix `(A + A†)/2`.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::Empty);
        }
        let mut worst = 0.0f64;
        for i in 0..rows {
            for j in i..rows {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        if !worst.is_finite() || worst > HERMITIAN_TOL {
            return Err(Error::NotHermitian(worst));
        }
        Ok(Self::from_raw(entries))
    }

    /// Symmetrises without validation. Used for results of functional
    /// calculus, which are Hermitian up to rounding.
    pub(crate) fn from_raw(entries: DMatrix<C64>) -> Self {
        let adj = entries.adjoint();
        Self {
            entries: (entries + adj).scale(0.5),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Empty);
        }
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self {
            entries: DMatrix::from_diagonal(&v),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            entries: DMatrix::identity(dim, dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// True when every off-diagonal entry has modulus at most `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.entries[(i, j)].norm() <= tol))
    }

    /// True when all entries have zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// Conjugation `U† A U`.
    pub fn in_basis(&self, basis: &DMatrix<C64>) -> HermitianMatrix {
        Self::from_raw(basis.adjoint() * &self.entries * basis)
    }
}

/// A positive semidefinite, unit-trace Hermitian matrix with its spectrum.
///
/// Inputs within [`STATE_TOL`] of unit trace are accepted and rescaled to
/// trace one exactly, so limits like `β → 0` see a normalised state.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    base: HermitianMatrix,
    spectrum: SpectralDecomposition,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl DensityMatrix {
    pub fn new(base: HermitianMatrix) -> Result<Self> {
        let tr = base.trace();
        if !tr.is_finite() || (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let base = HermitianMatrix::from_raw(base.entries.unscale(tr));
        let spectrum = decompose_labeled(&base, "density matrix")?;
        let min = spectrum.eigenvalues[0];
        if min < -STATE_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { base, spectrum })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_rows(rows)?)
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_diagonal(probs)?)
    }

    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        Self::new(HermitianMatrix::new(entries)?)
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        Self::from_diagonal(&vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.base.matrix()
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// Eigenvalues (ascending) with values under the zero threshold set to 0.
    pub fn clamped_eigenvalues(&self) -> Vec<f64> {
        let thr = self.spectrum.zero_threshold();
        self.spectrum
            .eigenvalues
            .iter()
            .map(|&l| if l <= thr { 0.0 } else { l })
            .collect()
    }

    /// True when no eigenvalue falls under the zero threshold.
    pub fn is_full_rank(&self) -> bool {
        self.spectrum.rank() == self.dim()
    }

    /// Projector onto the kernel of the state.
    pub fn kernel_projector(&self) -> DMatrix<C64> {
        let thr = self.spectrum.zero_threshold();
        self.spectrum
            .map(|l| if l <= thr { 1.0 } else { 0.0 })
            .into_matrix()
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()))
    }

    pub fn zero_threshold(&self) -> f64 {
        ZERO_EIGENVALUE_RTOL * self.spectral_radius()
    }

    /// Number of eigenvalues above the zero threshold.
    pub fn rank(&self) -> usize {
        let thr = self.zero_threshold();
        self.eigenvalues.iter().filter(|&&l| l > thr).count()
    }

    /// `Σ f(λ_i) v_i v_i†`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let d = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let w = f(l);
            for i in 0..d {
                scaled[(i, k)] *= w;
            }
        }
        HermitianMatrix::from_raw(&scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending. Inside each cluster of (near-)equal
/// eigenvalues the eigenvectors are rebuilt by Gram-Schmidt on the cluster
/// projections of the standard basis vectors, taken in index order, so the
/// output depends only on the input bits and not on solver internals. This
/// also fixes the phase of simple eigenvectors.
pub fn spectral_decompose(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    decompose_labeled(a, "input")
}

pub(crate) fn decompose_labeled(a: &HermitianMatrix, label: &str) -> Result<SpectralDecomposition> {
    let d = a.dim();
    let max_iter = 1000 * d.max(4);
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if a.is_real() {
        let real = a.matrix().map(|z| z.re);
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, max_iter).ok_or_else(|| {
            Error::EigenNoConvergence {
                dim: d,
                label: label.to_string(),
            }
        })?;
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, max_iter)
            .ok_or_else(|| Error::EigenNoConvergence {
                dim: d,
                label: label.to_string(),
            })?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence {
            dim: d,
            label: label.to_string(),
        });
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let sorted = DMatrix::from_fn(d, d, |r, c| vectors[(r, order[c])]);

    let radius = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let tol = DEGENERACY_RTOL * radius;
    let mut eigenvectors = sorted.clone();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eigenvalues[end] - eigenvalues[end - 1] <= tol {
            end += 1;
        }
        canonical_cluster_basis(&sorted, start, end, &mut eigenvectors);
        start = end;
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Replaces columns `start..end` of `out` with the Gram-Schmidt basis of the
/// projections of `e_0, e_1, ...` onto the span of those columns of `v`.
fn canonical_cluster_basis(v: &DMatrix<C64>, start: usize, end: usize, out: &mut DMatrix<C64>) {
    let d = v.nrows();
    let k = end - start;
    // Coefficients of P e_j in the cluster basis: conj(v[j, start..end]).
    let coeff = |j: usize| DVector::from_fn(k, |c, _| v[(j, start + c)].conj());
    let mut accepted: Vec<DVector<C64>> = Vec::with_capacity(k);
    let mut taken = vec![false; d];
    let thresholds = [0.5 / (d as f64).sqrt(), 1e-8];
    for &thr in &thresholds {
        for j in 0..d {
            if accepted.len() == k {
                break;
            }
            if taken[j] {
                continue;
            }
            let mut w = coeff(j);
            for _ in 0..2 {
                for a in &accepted {
                    let proj = a.dotc(&w);
                    w -= a * proj;
                }
            }
            let norm = w.norm();
            if norm >= thr {
                taken[j] = true;
                accepted.push(w / C64::new(norm, 0.0));
            }
        }
    }
    if accepted.len() < k {
        // Only reachable through severe loss of orthogonality; keep the
        // solver's vectors in that case.
        return;
    }
    let block = v.columns(start, k).into_owned();
    for (c, a) in accepted.iter().enumerate() {
        let col = &block * a;
        out.set_column(start + c, &col);
    }
}

/// Ascending eigenvalues only; cheaper than [`spectral_decompose`].
pub fn eigenvalues(a: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = if a.iter().all(|z| z.im == 0.0) {
        a.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        a.symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    vals
}

fn check_psd(sd: &SpectralDecomposition) -> Result<()> {
    let min = sd.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -STATE_TOL * sd.spectral_radius().max(1.0) {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// `A^t` for positive semidefinite `A`.
///
/// Eigenvalues under the zero threshold are treated as 0, with `0^t = 0`
/// for `t > 0`. For `t <= 0` the power acts on the support only
/// (pseudo-inverse convention), so `A^0` is the support projector.
pub fn matrix_power(a: &HermitianMatrix, t: f64) -> Result<HermitianMatrix> {
    if !t.is_finite() {
        return Err(Error::Argument(format!("exponent must be finite, got {t}")));
    }
    let sd = decompose_labeled(a, "matrix_power argument")?;
    check_psd(&sd)?;
    power_from_spectrum(&sd, t)
}

pub(crate) fn power_from_spectrum(sd: &SpectralDecomposition, t: f64) -> Result<HermitianMatrix> {
    let thr = sd.zero_threshold();
    if t <= 0.0 && sd.rank() == 0 {
        return Err(Error::Domain(format!(
            "power {t} of the zero matrix is undefined"
        )));
    }
    Ok(sd.map(|l| if l <= thr { 0.0 } else { l.powf(t) }))
}

/// Base-2 matrix logarithm of a positive semidefinite matrix.
///
/// With `support_convention` zero eigenvalues map to 0 (log restricted to
/// the support); without it a zero eigenvalue is a domain error.
pub fn matrix_log(a: &HermitianMatrix, support_convention: bool) -> Result<HermitianMatrix> {
    let sd = decompose_labeled(a, "matrix_log argument")?;
    check_psd(&sd)?;
    log_from_spectrum(&sd, support_convention)
}

pub(crate) fn log_from_spectrum(
    sd: &SpectralDecomposition,
    support_convention: bool,
) -> Result<HermitianMatrix> {
    let thr = sd.zero_threshold();
    if !support_convention && (sd.rank() < sd.dim()) {
        return Err(Error::Domain(
            "logarithm of a singular matrix without support convention".into(),
        ));
    }
    Ok(sd.map(|l| if l <= thr { 0.0 } else { l.log2() }))
}

/// Real part of `tr[A B]`.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}
