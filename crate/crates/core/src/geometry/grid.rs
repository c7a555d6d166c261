use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{Cube, Rational, MAX_DIM};
use crate::error::{Error, Result};

pub const DEFAULT_SCALE_BOUND: i32 = 40;

/// One of the `3^n` shifted dyadic grids
/// `{ 2^j (k + [0,1)^n + (-1)^j gamma) }` with `gamma in {0, 1/3, 2/3}^n`.
///
/// The shift is stored in thirds: `shifts[d] = 3 * gamma[d]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShiftedGrid {
    shifts: Vec<u8>,
    #[serde(default = "default_bound")]
    scale_bound: i32,
}

fn default_bound() -> i32 {
    DEFAULT_SCALE_BOUND
}

impl ShiftedGrid {
    pub fn new(shifts: Vec<u8>) -> Result<Self> {
        if shifts.is_empty() || shifts.len() > MAX_DIM || shifts.iter().any(|s| *s > 2) {
            return Err(Error::InvalidParameter(format!("grid shifts {shifts:?} (in thirds)")));
        }
        Ok(ShiftedGrid { shifts, scale_bound: DEFAULT_SCALE_BOUND })
    }

    /// The standard dyadic grid `gamma = 0`.
    pub fn standard(dim: usize) -> Self {
        ShiftedGrid { shifts: vec![0; dim], scale_bound: DEFAULT_SCALE_BOUND }
    }

    /// All `3^n` grids, ordered lexicographically by shift.
    pub fn all(dim: usize) -> Vec<ShiftedGrid> {
        (0..3usize.pow(dim as u32))
            .map(|mut m| {
                let mut shifts = vec![0u8; dim];
                for d in (0..dim).rev() {
                    shifts[d] = (m % 3) as u8;
                    m /= 3;
                }
                ShiftedGrid { shifts, scale_bound: DEFAULT_SCALE_BOUND }
            })
            .collect()
    }

    pub fn with_scale_bound(mut self, bound: i32) -> Self {
        self.scale_bound = bound;
        self
    }

    pub fn scale_bound(&self) -> i32 {
        self.scale_bound
    }

    pub fn dim(&self) -> usize {
        self.shifts.len()
    }

    pub fn shifts(&self) -> &[u8] {
        &self.shifts
    }

    pub fn gamma(&self) -> Vec<Rational> {
        self.shifts
            .iter()
            .map(|s| Rational::new(*s as i128, 3).expect("nonzero denominator"))
            .collect()
    }

    fn check_level(&self, j: i32) -> Result<()> {
        if j.abs() > self.scale_bound {
            return Err(Error::ScaleRange { level: j, bound: self.scale_bound });
        }
        Ok(())
    }

    /// `(-1)^j * 3 * gamma[d]`: the level-`j` offset in thirds.
    pub fn offset_thirds(&self, j: i32, d: usize) -> i64 {
        let g = self.shifts[d] as i64;
        if j.rem_euclid(2) == 0 {
            g
        } else {
            -g
        }
    }

    /// Corner coordinate `2^j (k + offset/3)` along axis `d`.
    pub fn coordinate(&self, j: i32, d: usize, k: i64) -> Rational {
        let thirds = Rational::new(3 * k as i128 + self.offset_thirds(j, d) as i128, 3)
            .expect("nonzero denominator");
        Rational::pow2(j) * thirds
    }

    /// The grid cube at level `j` with integer index `k`.
    pub fn cube(&self, j: i32, k: &[i64]) -> Result<Cube> {
        self.check_level(j)?;
        if k.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: k.len() });
        }
        let corner = k.iter().enumerate().map(|(d, kd)| self.coordinate(j, d, *kd)).collect();
        Cube::new(corner, Rational::pow2(j))
    }

    /// Index along axis `d` of the level-`j` cube containing coordinate `x`.
    pub fn axis_index(&self, j: i32, d: usize, x: Rational) -> i64 {
        let scaled = x * Rational::pow2(-j) * Rational::int(3) - Rational::int(self.offset_thirds(j, d) as i128);
        (scaled / Rational::int(3)).floor() as i64
    }

    /// Index of the level-`j` cube containing the point `x`.
    pub fn index_of(&self, j: i32, x: &[Rational]) -> Result<Vec<i64>> {
        self.check_level(j)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(x.iter().enumerate().map(|(d, xd)| self.axis_index(j, d, *xd)).collect())
    }

    /// Index along one axis of the level-`j+1` parent of the level-`j` index `k`.
    pub fn parent_axis_index(&self, j: i32, d: usize, k: i64) -> i64 {
        Integer::div_floor(&(k - self.offset_thirds(j + 1, d)), &2)
    }

    /// Index of the level-`j+1` parent of the level-`j` cube `k`.
    pub fn parent_index(&self, j: i32, k: &[i64]) -> Vec<i64> {
        k.iter().enumerate().map(|(d, kd)| self.parent_axis_index(j, d, *kd)).collect()
    }

    /// First of the two child indices along one axis of the level-`j` index `k`.
    pub fn first_child_axis_index(&self, j: i32, d: usize, k: i64) -> i64 {
        2 * k + self.offset_thirds(j, d)
    }

    /// Indices of the `2^n` level-`j-1` children of the level-`j` cube `k`.
    pub fn child_indices(&self, j: i32, k: &[i64]) -> Vec<Vec<i64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|m| {
                (0..n)
                    .map(|d| self.first_child_axis_index(j, d, k[d]) + (m >> (n - 1 - d) & 1) as i64)
                    .collect()
            })
            .collect()
    }

    /// If `q` is a cube of this grid, its `(level, index)`.
    pub fn locate(&self, q: &Cube) -> Option<(i32, Vec<i64>)> {
        let j = q.side().log2_exact()?;
        if j.abs() > self.scale_bound || q.dim() != self.dim() {
            return None;
        }
        let k = self.index_of(j, q.corner()).ok()?;
        let back = self.cube(j, &k).ok()?;
        (back == *q).then_some((j, k))
    }

    /// One grid cube per level in `j_min..=j_max`, each containing `x`.
    pub fn containing_chain(&self, x: &[Rational], j_min: i32, j_max: i32) -> Result<Vec<Cube>> {
        if j_min > j_max {
            return Err(Error::InvalidParameter(format!("level range {j_min}..={j_max}")));
        }
        (j_min..=j_max)
            .map(|j| {
                let k = self.index_of(j, x)?;
                self.cube(j, &k)
            })
            .collect()
    }
}

impl fmt::Display for ShiftedGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.gamma().iter().map(|g| g.to_string()).collect();
        write!(f, "gamma=({})", parts.join(","))
    }
}

/// Result of the one-third-trick cover search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub grid: ShiftedGrid,
    pub level: i32,
    pub cube: Cube,
    /// `side(Q') / side(Q)`.
    pub side_ratio: f64,
}

/// Finds a grid cube `Q'` in one of the shifted grids with
/// `Q ⊂ (9/10) Q'`, minimizing the side of `Q'`.
pub fn cover_cube(q: &Cube) -> Result<CoverReport> {
    let nine_tenths = Rational::new(9, 10)?;
    let grids = ShiftedGrid::all(q.dim());
    let center = q.center();
    // smallest level whose shrunken cube can hold Q
    let side = q.side().to_f64();
    let mut j = (side / 0.9).log2().floor() as i32 - 1;
    for _ in 0..16 {
        for g in &grids {
            if j.abs() > g.scale_bound() {
                continue;
            }
            let k = g.index_of(j, &center)?;
            let candidate = g.cube(j, &k)?;
            if candidate.dilate(nine_tenths)?.contains(q) {
                let side_ratio = (candidate.side() / q.side()).to_f64();
                return Ok(CoverReport { grid: g.clone(), level: j, cube: candidate, side_ratio });
            }
        }
        j += 1;
    }
    Err(Error::InvalidCube(format!("no shifted-grid cover found for {q}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn grid_cube_formula() {
        let g0 = ShiftedGrid::standard(1);
        assert_eq!(g0.cube(0, &[0]).unwrap().to_string(), "[0,1)");
        let g = ShiftedGrid::new(vec![1]).unwrap();
        // 2 * (0 + [0,1) - 1/3)
        assert_eq!(g.cube(1, &[0]).unwrap().to_string(), "[-2/3,4/3)");
        // even level: shift +1/3
        assert_eq!(g.cube(0, &[0]).unwrap().to_string(), "[1/3,4/3)");
        assert_eq!(g.cube(-1, &[0]).unwrap().to_string(), "[-1/6,1/3)");
    }

    #[test]
    fn scale_bound_is_enforced() {
        let g = ShiftedGrid::standard(1).with_scale_bound(5);
        assert!(matches!(g.cube(6, &[0]), Err(Error::ScaleRange { .. })));
        assert!(g.cube(-5, &[3]).is_ok());
    }

    #[test]
    fn children_of_grid_cubes_are_grid_cubes() {
        for g in ShiftedGrid::all(2) {
            for j in -3..=3 {
                for k0 in -3..=3 {
                    for k1 in -2..=2 {
                        let k = [k0, k1];
                        let parent = g.cube(j, &k).unwrap();
                        let from_index: Vec<Cube> =
                            g.child_indices(j, &k).iter().map(|c| g.cube(j - 1, c).unwrap()).collect();
                        assert_eq!(from_index, parent.children(), "{g} j={j} k={k:?}");
                        for c in g.child_indices(j, &k) {
                            assert_eq!(g.parent_index(j - 1, &c), k.to_vec());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn containing_chain_is_nested() {
        let g = ShiftedGrid::standard(1);
        let chain = g.containing_chain(&[r("1/10")], -2, 0).unwrap();
        let names: Vec<String> = chain.iter().map(|c| c.to_string()).collect();
        assert_eq!(names, ["[0,1/4)", "[0,1/2)", "[0,1)"]);
        assert!(g.containing_chain(&[r("0")], 1, 0).is_err());
    }

    #[test]
    fn locate_round_trips() {
        let g = ShiftedGrid::new(vec![2, 1]).unwrap();
        let c = g.cube(-3, &[5, -7]).unwrap();
        assert_eq!(g.locate(&c), Some((-3, vec![5, -7])));
        let off = Cube::new(vec![r("1/7"), r("0")], r("1/8")).unwrap();
        assert_eq!(g.locate(&off), None);
    }

    #[test]
    fn cover_of_small_interval() {
        let q = Cube::interval(r("0.4"), r("0.6")).unwrap();
        let rep = cover_cube(&q).unwrap();
        assert!(rep.cube.side() <= r("1.6"));
        assert!(rep.cube.dilate(r("9/10")).unwrap().contains(&q));
        assert!(rep.grid.locate(&rep.cube).is_some());
    }

    #[test]
    fn cover_of_cube_deep_inside_standard_cube() {
        let q = Cube::new(vec![r("3/8"), r("3/8")], r("1/4")).unwrap();
        let rep = cover_cube(&q).unwrap();
        assert!(rep.side_ratio <= 4.0);
    }
}
