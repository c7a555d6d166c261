use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, Rational, Rect};

/// A finite, nonempty list of cubes of one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    cubes: Vec<Cube>,
}

impl CubeFamily {
    pub fn explicit(cubes: Vec<Cube>) -> Result<Self> {
        let Some(first) = cubes.first() else {
            return Err(Error::InvalidParameter("empty cube family".into()));
        };
        let n = first.dim();
        if let Some(bad) = cubes.iter().find(|q| q.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.dim() });
        }
        Ok(CubeFamily { cubes })
    }

    /// Cubes inside `window` with corners on the `step`-lattice anchored at
    /// `window.lo` and side lengths from `sides`.
    pub fn sweep(window: &Rect, step: Rational, sides: &[Rational]) -> Result<Self> {
        if !step.is_positive() {
            return Err(Error::InvalidParameter(format!("sweep step {step}")));
        }
        let n = window.dim();
        let mut cubes = Vec::new();
        for side in sides {
            if !side.is_positive() {
                return Err(Error::InvalidParameter(format!("side {side}")));
            }
            let counts: Vec<i128> = (0..n)
                .map(|d| ((window.hi[d] - window.lo[d] - *side) / step).floor() + 1)
                .collect();
            if counts.iter().any(|c| *c <= 0) {
                continue;
            }
            let total: i128 = counts.iter().product();
            for lin in 0..total {
                let mut rem = lin;
                let mut corner = vec![Rational::ZERO; n];
                for d in (0..n).rev() {
                    corner[d] = window.lo[d] + step * Rational::int(rem % counts[d]);
                    rem /= counts[d];
                }
                cubes.push(Cube::new(corner, *side)?);
            }
        }
        cubes.sort();
        CubeFamily::explicit(cubes)
    }

    /// Every cube inside `window` whose corner and side are multiples of
    /// `step` (all intervals `[a, b)` on the step lattice in 1D).
    pub fn aligned(window: &Rect, step: Rational) -> Result<Self> {
        let longest = (0..window.dim())
            .map(|d| ((window.hi[d] - window.lo[d]) / step).floor())
            .min()
            .unwrap_or(0);
        let sides: Vec<Rational> = (1..=longest).map(|k| step * Rational::int(k)).collect();
        CubeFamily::sweep(window, step, &sides)
    }

    /// Sweep with dyadic sides `2^j`, `j_min <= j <= j_max`.
    pub fn dyadic_sweep(window: &Rect, step: Rational, j_min: i32, j_max: i32) -> Result<Self> {
        let sides: Vec<Rational> = (j_min..=j_max).map(Rational::pow2).collect();
        CubeFamily::sweep(window, step, &sides)
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cubes[0].dim()
    }

    /// This family together with `more`, duplicates removed.
    pub fn extended(&self, more: &[Cube]) -> Result<Self> {
        let mut cubes = self.cubes.clone();
        cubes.extend_from_slice(more);
        cubes.sort();
        cubes.dedup();
        CubeFamily::explicit(cubes)
    }
}
