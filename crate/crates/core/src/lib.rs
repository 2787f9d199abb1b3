//! Numerical toolkit for polyconvex variational problems.
//!
//! The crate is organised bottom-up:
//!
//! * [`exterior`]: wedge bases, Gram inner products, minor matrices and
//!   interior products in small dimension.
//! * [`meshmaps`]: simplicial meshes, quadrature, continuous piecewise-affine
//!   maps, energy integration and weak residuals of minors.
//! * [`nulllag`]: test-field pairs `(χ, U)`, the `U̇` operator and the null
//!   Lagrangians they generate.
//! * [`youngmeasure`]: atomic Young measures on jet space, Kantorovich–Rubinstein
//!   distance, disintegration, structure and Jensen checks.
//! * [`variational`]: integrand descriptors, the direct-method minimizer and
//!   the energy-gap and weak-continuity experiments.
//!
//! All wedge objects use the lexicographic ordering of index subsets.

pub mod error;
pub mod exterior;
pub mod meshmaps;
pub mod nulllag;
pub mod reduce;
pub mod rng;
pub mod variational;
pub mod youngmeasure;

pub use error::{Error, Result};
