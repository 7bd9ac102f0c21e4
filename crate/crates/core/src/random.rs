//! Seeded random states and unitaries.
//!
//! States are drawn from the induced (Ginibre) measure: `G G† / tr(G G†)` with
//! `G` a `dim × rank` matrix of standard complex Gaussians. All generators
//! take an explicit RNG so runs are reproducible from a seed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{DensityMatrix, C64};

/// The RNG used throughout the crate for reproducible sampling.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// A random state of the given rank (`rank == dim` gives full rank almost
/// surely).
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::Empty);
    }
    if rank == 0 || rank > dim {
        return Err(Error::Argument(format!(
            "rank must lie in 1..={dim}, got {rank}"
        )));
    }
    let g = ginibre(rng, dim, rank);
    let mut w = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| w[(i, i)].re).sum();
    w.unscale_mut(tr);
    // Exact Hermitian symmetry before validation.
    let w = (&w + w.adjoint()).unscale(2.0);
    DensityMatrix::from_matrix(w)
}

/// A random real diagonal state (a classical distribution).
pub fn random_diagonal_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<DensityMatrix> {
    let w: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = w.iter().sum();
    DensityMatrix::from_diagonal(&w.iter().map(|x| x / s).collect::<Vec<_>>())
}

/// A Haar-random unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let qr = ginibre(rng, dim, dim).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_are_valid_and_reproducible() {
        let a = random_state(&mut seeded_rng(7), 3, 3).unwrap();
        let b = random_state(&mut seeded_rng(7), 3, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.is_full_rank());
        let low = random_state(&mut seeded_rng(8), 4, 2).unwrap();
        assert_eq!(low.spectrum().rank(), 2);
    }

    #[test]
    fn unitary_is_unitary() {
        let u = random_unitary(&mut seeded_rng(3), 4);
        let e = &u.adjoint() * &u - DMatrix::<C64>::identity(4, 4);
        assert!(e.norm() < 1e-12);
    }
}
