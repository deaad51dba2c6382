//! Exact calculus for bounded chain complexes of finitely generated free
//! modules: graded maps with Koszul signs, differential perturbations
//! satisfying the Maurer-Cartan equation, strong deformation retractions and
//! their perturbations in closed form, double-categorical composition of
//! retraction squares, and a Smith-normal-form homology oracle used to
//! cross-check everything.
//!
//! All arithmetic is exact (arbitrary-precision integers, prime fields,
//! reduced rationals) and every asserted identity is bit-exact matrix
//! equality; there are no tolerances anywhere.

pub mod bpl;
pub mod calculus;
pub mod complex;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod generator;
pub mod graded;
pub mod homology;
pub mod matrix;
pub mod ring;
pub mod sdr;
pub mod suites;

pub use crate::complex::{ChainComplex, HomComplex, Perturbation};
pub use crate::error::{Error, Result};
pub use crate::graded::{GradedMap, GradedModule};
pub use crate::matrix::Matrix;
pub use crate::ring::{Ring, Scalar};
pub use crate::sdr::{Sdr, SdrSquare};
