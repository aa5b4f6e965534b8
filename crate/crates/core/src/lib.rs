//! Additive-structure toolkit for cyclic groups and the Boolean cube.
//!
//! The crate finds certified additive structure (arithmetic progressions,
//! translates of Bohr sets, affine subspaces) inside sumsets of dense sets.
//! It is organized around:
//!
//! * [`group`] — Z/NZ, characters, dense sets as bitsets, rational measures;
//! * [`bohr`] — Bohr sets, regular radii, progressions inside Bohr sets;
//! * [`spectral`] — discrete Fourier transforms, cutoff-weighted local
//!   transforms, smoothed cutoffs;
//! * [`chang`] — dissociated sets, Riesz products, spectrum containers;
//! * [`increment`] — density-increment lemmas and the iteration drivers that
//!   extract structure from pair and m-fold sumsets;
//! * [`model_f2`] — the same pipeline in the F2^n model where all error terms
//!   vanish;
//! * [`oracle`] — brute-force ground truth and the inequality audit catalog.
//!
//! Everything downstream of a witness is re-verified: progressions are checked
//! element by element, Bohr translates by full enumeration, and subspaces by
//! coset enumeration. Brute-force oracles never call the fast paths they audit.

pub mod bohr;
pub mod chang;
pub mod constants;
pub mod error;
pub mod group;
pub mod increment;
pub mod model_f2;
pub mod oracle;
pub mod spectral;

pub use constants::Constants;
pub use error::{Error, Result};
pub use group::{CyclicGroup, DenseSet, Measure, Rat};
