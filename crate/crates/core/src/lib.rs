//! Strictly ergodic Toeplitz Z^d-subshifts of prescribed topological entropy.
//!
//! The crate plans the scale of the construction, evaluates the resulting
//! Toeplitz array lazily at arbitrary big-integer coordinates, and checks the
//! finite identities behind it: periodic-position formulas, block
//! frequencies, entropy brackets and the skew-product representation.
//!
//! Module map:
//! - [`lattice`]: Z^d arithmetic, scales, shifted box domains, boundaries.
//! - [`theta`]: the θ decomposition maps and essential-period witnesses.
//! - [`planner`]: sequences p′, q′, λ, parameters M, N, q_n and the scale.
//! - [`blocks`]: permutation families and lazily evaluated blocks C_n^{(j)}.
//! - [`toeplitz`]: the array x, Per-sets, substitution and the full pipeline.
//! - [`analysis`]: census, frequencies ap(B,C), entropy and Birkhoff probes.
//! - [`skew`]: odometer coordinates, carries ε_t and derived arrays y^{(t)}.
//! - [`toy`]: small explicit constructions and a hole-filling oracle.
//! - [`formats`]: plan files, patch export and line-delimited records.

pub mod analysis;
pub mod blocks;
pub mod error;
pub mod formats;
pub mod interval;
pub mod lattice;
pub mod perm;
pub mod planner;
pub mod skew;
pub mod theta;
pub mod toeplitz;
pub mod toy;

pub use error::{Error, Result};
pub use lattice::{LatticeVector, Letter};
