//! Quantum Rényi divergences, type-class pinching and exact composite
//! hypothesis-testing errors.
//!
//! ```
//! use qrenyi::divergences::rev_relative_entropy;
//! use qrenyi::exponents::hoeffding_exponent;
//! use qrenyi::matrix::DensityMatrix;
//!
//! let rho = DensityMatrix::from_diagonal(&[0.8, 0.2])?;
//! let sigma = DensityMatrix::from_real_rows(&[&[0.7, 0.3], &[0.3, 0.3]])?;
//! let d_rev = rev_relative_entropy(&rho, &sigma)?.unwrap();
//! assert!((d_rev - 0.198594546621).abs() < 1e-9);
//! let h = hoeffding_exponent(&rho, &sigma, 0.5 * d_rev)?;
//! assert!((h.exponent - 0.057398).abs() < 1e-6);
//! # Ok::<(), qrenyi::Error>(())
//! ```

pub mod cli;
pub mod divergences;
pub mod error;
pub mod exponents;
pub mod matrix;
pub mod random;
pub mod sandwich;
pub mod symmetry;
pub mod testing;

pub use error::{Error, Result};
