//! Exact cube arithmetic and the shifted dyadic grids.
//!
//! All coordinates are [`Rational`]; cubes are half-open,
//! `corner + [0, side)^n`, so grid cubes of one level tile space exactly.

mod cube;
mod grid;
mod rational;

pub use cube::{Cube, Rect, MAX_DIM};
pub use grid::{cover_cube, CoverReport, ShiftedGrid, DEFAULT_SCALE_BOUND};
pub use rational::Rational;
