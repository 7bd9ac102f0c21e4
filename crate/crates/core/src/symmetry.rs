//! Type classes, pinching of tensor powers, and the diagonal-unitary twirl.
//!
//! A [`ProjectionFamily`] fixes an orthonormal basis and assigns each basis
//! vector a label in `0..m`. A string `j⃗ ∈ [d]^n` has type `N(j⃗)`, the count
//! of each label along the string, and the type-class projector `Π_t` spans
//! the strings of type `t`. Pinching keeps the blocks `Π_t X Π_t`.
//!
//! Blocks of `σ^{⊗n}` are built entry by entry as `∏_ℓ σ_{j_ℓ k_ℓ}`, so the
//! full `d^n × d^n` matrix is never formed. The twirl is computed the slow
//! way, on the dense matrix, as an independent check.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{DensityMatrix, HermitianMatrix, C64, DEGENERACY_RTOL};

/// Size limits for the n-copy constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Maximum `d^n` for the blockwise pinching.
    pub strings: u128,
    /// Maximum `(n+1)^m` phase points in the discrete twirl.
    pub twirl_points: u128,
    /// Maximum `d^n` for constructions that form the dense n-copy matrix.
    pub dense_dim: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            strings: 200_000,
            twirl_points: 1_000_000,
            dense_dim: 2048,
        }
    }
}

fn check_budget(what: &'static str, requested: Option<u128>, limit: u128) -> Result<u128> {
    match requested {
        Some(r) if r <= limit => Ok(r),
        other => Err(Error::Resource {
            what,
            requested: other.unwrap_or(u128::MAX),
            limit,
        }),
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    (base as u128).checked_pow(u32::try_from(exp).ok()?)
}

/// Counts of each of `m` labels along a string of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector {
    counts: Vec<u32>,
}

impl TypeVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Argument("type vector needs at least one label".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }
}

/// `C(n+m-1, m-1)`, or `None` on overflow.
pub fn type_count(n: usize, m: usize) -> Option<u128> {
    if m == 0 {
        return None;
    }
    let k = (m - 1) as u128;
    let top = (n + m - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul(top - i)? / (i + 1);
    }
    Some(c)
}

/// Upper limit on the number of types produced by [`enumerate_types`].
pub const MAX_TYPES: u128 = 10_000_000;

/// All types of length `n` over `m` labels in lexicographic order.
pub fn enumerate_types(n: usize, m: usize) -> Result<Vec<TypeVector>> {
    if n == 0 || m == 0 {
        return Err(Error::Argument(format!(
            "need n >= 1 and m >= 1, got n={n}, m={m}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::Argument(format!("n={n} too large")));
    }
    check_budget("number of types", type_count(n, m), MAX_TYPES)?;
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    fill_types(&mut out, &mut cur, 0, n as u32);
    Ok(out)
}

fn fill_types(out: &mut Vec<TypeVector>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(TypeVector { counts: cur.clone() });
        return;
    }
    for c in 0..=left {
        cur[pos] = c;
        fill_types(out, cur, pos + 1, left - c);
    }
}

/// An orthonormal basis with a label per vector; vectors sharing a label
/// span one projection of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFamily {
    basis: DMatrix<C64>,
    labels: Vec<usize>,
    /// Eigenvalue of the reference state on each projection, if any.
    values: Option<Vec<f64>>,
}

impl ProjectionFamily {
    /// Eigenprojections of `rho`, ordered by decreasing eigenvalue. Eigenvalues
    /// within [`DEGENERACY_RTOL`] (relative to the largest) share a label.
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let sd = rho.spectrum();
        let d = sd.dim();
        let ev = rho.clamped_eigenvalues();
        let tol = DEGENERACY_RTOL * sd.spectral_radius();
        // Decreasing eigenvalue; the stable sort keeps index order on ties.
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| ev[b].total_cmp(&ev[a]));
        let mut labels = Vec::with_capacity(d);
        let mut values: Vec<f64> = Vec::new();
        let mut members: Vec<usize> = Vec::new();
        let mut cluster_start = f64::NAN;
        for &i in &order {
            if values.is_empty() || (cluster_start - ev[i]).abs() > tol {
                if let Some(last) = values.last_mut() {
                    *last /= members.len() as f64;
                }
                values.push(0.0);
                members.clear();
                cluster_start = ev[i];
            }
            *values.last_mut().unwrap() += ev[i];
            members.push(i);
            labels.push(values.len() - 1);
        }
        if let Some(last) = values.last_mut() {
            *last /= members.len() as f64;
        }
        let u = sd.eigenvectors();
        let basis = DMatrix::from_fn(d, d, |r, c| u[(r, order[c])]);
        Self {
            basis,
            labels,
            values: Some(values),
        }
    }

    /// The computational basis with one label per vector.
    pub fn computational(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            basis: DMatrix::identity(dim, dim),
            labels: (0..dim).collect(),
            values: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Number of distinct projections `m`.
    pub fn num_labels(&self) -> usize {
        self.labels.iter().max().map_or(0, |&l| l + 1)
    }

    /// Basis vectors as columns.
    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    /// `σ` expressed in the family's basis.
    fn rotate(&self, sigma: &DensityMatrix) -> Result<DMatrix<C64>> {
        if sigma.dim() != self.dim() {
            return Err(Error::DimensionMismatch(sigma.dim(), self.dim()));
        }
        Ok(sigma.hermitian().in_basis(&self.basis).into_matrix())
    }

    fn type_of(&self, string: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.num_labels()];
        for &j in string {
            c[self.labels[j]] += 1;
        }
        c
    }
}

/// One type-class block: the strings spanning it and the restricted matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeBlock {
    pub type_vector: TypeVector,
    /// Index strings of the block in lexicographic order.
    pub strings: Vec<Vec<usize>>,
    pub matrix: HermitianMatrix,
    /// `∏_ℓ λ_ℓ^{t_ℓ}`, the constant value of the reference state's n-th
    /// tensor power on this block.
    pub scalar_weight: Option<f64>,
}

/// Block-diagonal n-copy operator, blocks in lexicographic type order.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeBlockState {
    pub n: usize,
    pub m: usize,
    pub dim: usize,
    pub blocks: Vec<TypeBlock>,
}

impl TypeBlockState {
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.strings.len()).sum()
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.matrix.trace()).sum()
    }

    pub fn block(&self, t: &TypeVector) -> Option<&TypeBlock> {
        self.blocks.iter().find(|b| &b.type_vector == t)
    }

    /// The full `d^n × d^n` matrix in the family basis, zero off the blocks.
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let size = check_budget(
            "dense n-copy dimension",
            checked_pow(self.dim, self.n),
            Budget::default().dense_dim,
        )? as usize;
        let mut out = DMatrix::zeros(size, size);
        for b in &self.blocks {
            let idx: Vec<usize> = b.strings.iter().map(|s| string_index(s, self.dim)).collect();
            for (a, &ia) in idx.iter().enumerate() {
                for (c, &ic) in idx.iter().enumerate() {
                    out[(ia, ic)] = b.matrix.matrix()[(a, c)];
                }
            }
        }
        Ok(out)
    }
}

fn string_index(s: &[usize], d: usize) -> usize {
    s.iter().fold(0, |acc, &j| acc * d + j)
}

/// All strings of `[d]^n` in lexicographic order, grouped by type. Returns
/// the types and, per type, its strings.
fn strings_by_type(
    family: &ProjectionFamily,
    n: usize,
    budget: &Budget,
) -> Result<(Vec<TypeVector>, Vec<Vec<Vec<usize>>>)> {
    let d = family.dim();
    let total = check_budget("tensor-power strings d^n", checked_pow(d, n), budget.strings)? as usize;
    let types = enumerate_types(n, family.num_labels())?;
    let index: HashMap<&[u32], usize> = types
        .iter()
        .enumerate()
        .map(|(i, t)| (t.counts(), i))
        .collect();
    let mut groups = vec![Vec::new(); types.len()];
    let mut s = vec![0usize; n];
    for _ in 0..total {
        let t = family.type_of(&s);
        groups[index[t.as_slice()]].push(s.clone());
        // Increment the string as a base-d counter, last digit fastest.
        for pos in (0..n).rev() {
            s[pos] += 1;
            if s[pos] < d {
                break;
            }
            s[pos] = 0;
        }
    }
    Ok((types, groups))
}

fn scalar_weight(family: &ProjectionFamily, t: &TypeVector) -> Option<f64> {
    family.values().map(|v| {
        v.iter()
            .zip(t.counts())
            .map(|(&l, &c)| l.powi(c as i32))
            .product()
    })
}

/// Pinching of `σ^{⊗n}` onto the type classes of `family`.
pub fn pinch_tensor_power(
    sigma: &DensityMatrix,
    family: &ProjectionFamily,
    n: usize,
) -> Result<TypeBlockState> {
    pinch_tensor_power_within(sigma, family, n, &Budget::default())
}

/// [`pinch_tensor_power`] with explicit size limits.
pub fn pinch_tensor_power_within(
    sigma: &DensityMatrix,
    family: &ProjectionFamily,
    n: usize,
    budget: &Budget,
) -> Result<TypeBlockState> {
    let s = family.rotate(sigma)?;
    let (types, groups) = strings_by_type(family, n, budget)?;
    let blocks = types
        .into_iter()
        .zip(groups)
        .map(|(t, strings)| {
            let b = strings.len();
            let mut m = DMatrix::zeros(b, b);
            for a in 0..b {
                for c in a..b {
                    let v = strings[a]
                        .iter()
                        .zip(&strings[c])
                        .fold(C64::new(1.0, 0.0), |acc, (&j, &k)| acc * s[(j, k)]);
                    m[(a, c)] = v;
                    m[(c, a)] = v.conj();
                }
                m[(a, a)].im = 0.0;
            }
            TypeBlock {
                scalar_weight: scalar_weight(family, &t),
                type_vector: t,
                strings,
                matrix: HermitianMatrix::from_raw(m),
            }
        })
        .collect();
    Ok(TypeBlockState {
        n,
        m: family.num_labels(),
        dim: family.dim(),
        blocks,
    })
}

/// `σ^{⊗n}` in the family basis, as a dense matrix.
fn dense_tensor_power(s: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let mut out = s.clone();
    for _ in 1..n {
        out = out.kronecker(s);
    }
    out
}

/// Twirl of the dense `σ^{⊗n}` over the diagonal unitaries
/// `Σ_ℓ e^{iθ_ℓ} P_ℓ`, with each `θ_ℓ` averaged over the `(n+1)`-th roots of
/// unity. The phase on entry `(j⃗, k⃗)` is `e^{iθ·(N(j⃗) - N(k⃗))}`; its average
/// is evaluated by explicit summation over all `(n+1)^m` phase points, once
/// per distinct difference vector.
pub fn twirl_dense(
    sigma: &DensityMatrix,
    family: &ProjectionFamily,
    n: usize,
    budget: &Budget,
) -> Result<DMatrix<C64>> {
    if n == 0 {
        return Err(Error::Argument("need n >= 1".into()));
    }
    let d = family.dim();
    let m = family.num_labels();
    let points = check_budget("twirl phase points (n+1)^m", checked_pow(n + 1, m), budget.twirl_points)?;
    let size = check_budget("dense n-copy dimension", checked_pow(d, n), budget.dense_dim)? as usize;
    let x = dense_tensor_power(&family.rotate(sigma)?, n);

    let types: Vec<Vec<i64>> = (0..size)
        .map(|idx| {
            let mut s = vec![0usize; n];
            let mut r = idx;
            for pos in (0..n).rev() {
                s[pos] = r % d;
                r /= d;
            }
            family.type_of(&s).into_iter().map(i64::from).collect()
        })
        .collect();

    let step = 2.0 * PI / (n + 1) as f64;
    let mut cache: HashMap<Vec<i64>, C64> = HashMap::new();
    let mut average = |delta: Vec<i64>| -> C64 {
        *cache.entry(delta).or_insert_with_key(|delta| {
            let mut acc = C64::new(0.0, 0.0);
            let mut k = vec![0usize; m];
            for _ in 0..points {
                let phase: f64 = k
                    .iter()
                    .zip(delta)
                    .map(|(&kl, &dl)| step * kl as f64 * dl as f64)
                    .sum();
                acc += C64::from_polar(1.0, phase);
                for pos in 0..m {
                    k[pos] += 1;
                    if k[pos] <= n {
                        break;
                    }
                    k[pos] = 0;
                }
            }
            acc / points as f64
        })
    };
    let mut out = DMatrix::zeros(size, size);
    for a in 0..size {
        for c in 0..size {
            let delta: Vec<i64> = types[a].iter().zip(&types[c]).map(|(p, q)| p - q).collect();
            out[(a, c)] = average(delta) * x[(a, c)];
        }
    }
    Ok(out)
}

/// Discrete-root twirl of `σ^{⊗n}`, cut into type-class blocks.
pub fn twirl_exact_roots(
    sigma: &DensityMatrix,
    family: &ProjectionFamily,
    n: usize,
) -> Result<TypeBlockState> {
    twirl_exact_roots_within(sigma, family, n, &Budget::default())
}

/// [`twirl_exact_roots`] with explicit size limits.
pub fn twirl_exact_roots_within(
    sigma: &DensityMatrix,
    family: &ProjectionFamily,
    n: usize,
    budget: &Budget,
) -> Result<TypeBlockState> {
    let full = twirl_dense(sigma, family, n, budget)?;
    let (types, groups) = strings_by_type(family, n, budget)?;
    let d = family.dim();
    let blocks = types
        .into_iter()
        .zip(groups)
        .map(|(t, strings)| {
            let idx: Vec<usize> = strings.iter().map(|s| string_index(s, d)).collect();
            let m = DMatrix::from_fn(idx.len(), idx.len(), |a, c| full[(idx[a], idx[c])]);
            TypeBlock {
                scalar_weight: scalar_weight(family, &t),
                type_vector: t,
                strings,
                matrix: HermitianMatrix::from_raw(m),
            }
        })
        .collect();
    Ok(TypeBlockState {
        n,
        m: family.num_labels(),
        dim: d,
        blocks,
    })
}

/// Largest entrywise deviation between the dense discrete twirl and the
/// blockwise pinching (zero off the blocks).
pub fn twirl_pinch_deviation(
    sigma: &DensityMatrix,
    family: &ProjectionFamily,
    n: usize,
    budget: &Budget,
) -> Result<f64> {
    let twirl = twirl_dense(sigma, family, n, budget)?;
    let pinch = pinch_tensor_power_within(sigma, family, n, budget)?.to_dense()?;
    Ok(crate::matrix::max_abs_diff(&twirl, &pinch))
}

/// Result of [`time_orbit_approximate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitApproximation {
    pub t_best: f64,
    /// Max-over-coordinates angular distance in radians, modulo a common
    /// phase.
    pub distance: f64,
}

/// Smallest angular radius of an arc containing all the given phases, which
/// is the max-coordinate distance to the best common phase.
fn phase_spread(phases: &mut [f64]) -> f64 {
    let two_pi = 2.0 * PI;
    for p in phases.iter_mut() {
        *p = p.rem_euclid(two_pi);
    }
    phases.sort_by(f64::total_cmp);
    let mut max_gap = phases[0] + two_pi - phases[phases.len() - 1];
    for w in phases.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    ((two_pi - max_gap) / 2.0).max(0.0)
}

/// Grid search over `t ∈ {k·t_max/steps : k = 0..=steps}` for the point of
/// the orbit `(e^{i t log λ_j})_j` closest to `(e^{iθ_j})_j` up to a global
/// phase. Ties go to the smallest `t`.
pub fn time_orbit_approximate(
    log_eigs: &[f64],
    target_phases: &[f64],
    t_max: f64,
    steps: usize,
) -> Result<OrbitApproximation> {
    if log_eigs.is_empty() || log_eigs.len() != target_phases.len() {
        return Err(Error::Argument(format!(
            "need equally many log-eigenvalues and phases, got {} and {}",
            log_eigs.len(),
            target_phases.len()
        )));
    }
    if steps == 0 || !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::Argument("need steps >= 1 and finite t_max >= 0".into()));
    }
    let mut buf = vec![0.0; log_eigs.len()];
    let mut best = OrbitApproximation {
        t_best: 0.0,
        distance: f64::INFINITY,
    };
    for k in 0..=steps {
        let t = k as f64 * t_max / steps as f64;
        for ((b, &l), &th) in buf.iter_mut().zip(log_eigs).zip(target_phases) {
            *b = t * l - th;
        }
        let dist = phase_spread(&mut buf);
        if dist < best.distance {
            best = OrbitApproximation { t_best: t, distance: dist };
        }
    }
    Ok(best)
}
