//! Two-weight norm inequalities for the Hardy–Littlewood maximal function
//! and fractional integrals, evaluated on exactly representable measures.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: exact rational cubes and the `3^n` shifted dyadic grids.
//! - [`measures`]: closed-form and lattice measures, cell sets, functions.
//! - [`operators`]: maximal, dyadic maximal and fractional operator fields.
//! - [`constants`]: Muckenhoupt constants, testing constants, norm bounds.
//! - [`whitney`]: Whitney decompositions of open sets with verification.
//! - [`proofcheck`]: instance-level checks of the stopping-time machinery.

pub mod constants;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod operators;
pub mod proofcheck;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{Cube, Rational, Rect, ShiftedGrid};
pub use measures::{CellSet, Lattice, LatticeFunction, Measure};
