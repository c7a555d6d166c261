//! Masses of all grid cubes above a grid-native lattice.

use crate::error::{Error, Result};
use crate::geometry::{Rational, ShiftedGrid};
use crate::measures::Lattice;

#[derive(Clone, Debug)]
struct Level {
    j: i32,
    lo: Vec<i64>,
    shape: Vec<usize>,
    mass: Vec<f64>,
}

impl Level {
    fn linear(&self, k: &[i64]) -> Option<usize> {
        let mut lin = 0usize;
        for d in 0..k.len() {
            let off = k[d] - self.lo[d];
            if off < 0 || off as usize >= self.shape[d] {
                return None;
            }
            lin = lin * self.shape[d] + off as usize;
        }
        Some(lin)
    }
}

/// Masses of the cubes of one grid at levels `j0..=j_top`, where the level
/// `j0` cubes are the cells of a lattice.
#[derive(Clone, Debug)]
pub struct DyadicTree {
    grid: ShiftedGrid,
    lattice: Lattice,
    levels: Vec<Level>,
}

impl DyadicTree {
    /// Level of the grid-native lattice used for data on `lattice`.
    pub fn base_level(lattice: &Lattice) -> i32 {
        let h = lattice.spacing();
        match h.log2_exact() {
            Some(j) => j,
            None => h.to_f64().log2().floor() as i32,
        }
    }

    /// Grid-native lattice covering `lattice`.
    pub fn native_lattice(grid: &ShiftedGrid, lattice: &Lattice) -> Result<Lattice> {
        if lattice.grid_alignment(grid).is_some() {
            return Ok(lattice.clone());
        }
        Lattice::grid_native(grid, Self::base_level(lattice), &lattice.extent())
    }

    /// Default top level: a few levels above the lattice diameter.
    pub fn default_top(lattice: &Lattice) -> i32 {
        let longest = *lattice.shape().iter().max().expect("nonempty shape") as f64;
        lattice.spacing().log2_exact().unwrap_or(0) + longest.log2().ceil() as i32 + 2
    }

    pub fn new(grid: &ShiftedGrid, lattice: &Lattice, masses: &[f64], j_top: i32) -> Result<Self> {
        let (j0, k0) = lattice.grid_alignment(grid).ok_or_else(|| {
            Error::LatticeMismatch(format!("lattice cells are not cubes of the grid {grid}"))
        })?;
        if masses.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!("{} masses for {} cells", masses.len(), lattice.len())));
        }
        if j_top < j0 {
            return Err(Error::InvalidParameter(format!("top level {j_top} below the lattice level {j0}")));
        }
        let n = lattice.dim();
        let mut levels = vec![Level { j: j0, lo: k0, shape: lattice.shape().to_vec(), mass: masses.to_vec() }];
        for j in j0..j_top {
            let below = levels.last().expect("base level");
            let lo: Vec<i64> = (0..n).map(|d| grid.parent_axis_index(j, d, below.lo[d])).collect();
            let shape: Vec<usize> = (0..n)
                .map(|d| {
                    let hi = grid.parent_axis_index(j, d, below.lo[d] + below.shape[d] as i64 - 1);
                    (hi - lo[d] + 1) as usize
                })
                .collect();
            let mut up = Level { j: j + 1, lo, shape, mass: vec![0.0; 0] };
            up.mass = vec![0.0; up.shape.iter().product()];
            let mut k = below.lo.clone();
            for (lin, m) in below.mass.iter().enumerate() {
                if *m == 0.0 {
                    continue;
                }
                let mut rem = lin;
                for d in (0..n).rev() {
                    k[d] = below.lo[d] + (rem % below.shape[d]) as i64;
                    rem /= below.shape[d];
                }
                let p = grid.parent_index(j, &k);
                let at = up.linear(&p).expect("parent inside the next level");
                up.mass[at] += m;
            }
            levels.push(up);
        }
        Ok(DyadicTree { grid: grid.clone(), lattice: lattice.clone(), levels })
    }

    pub fn grid(&self) -> &ShiftedGrid {
        &self.grid
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        self.levels.iter().map(|l| l.j)
    }

    /// Mass of the level-`j` cube with index `k` (zero away from the data).
    pub fn mass(&self, j: i32, k: &[i64]) -> f64 {
        let Some(level) = self.levels.iter().find(|l| l.j == j) else {
            return 0.0;
        };
        level.linear(k).map_or(0.0, |i| level.mass[i])
    }

    /// Per level, the mass of the level cube containing `x`.
    pub fn chain_masses(&self, x: &[Rational]) -> Result<Vec<(i32, f64)>> {
        self.levels
            .iter()
            .map(|l| {
                let k = self.grid.index_of(l.j, x)?;
                Ok((l.j, l.linear(&k).map_or(0.0, |i| l.mass[i])))
            })
            .collect()
    }

    /// For every base cell, the mass of its ancestor at level index `li`.
    fn ancestor_masses(&self, li: usize) -> Vec<f64> {
        let base = &self.levels[0];
        let n = base.lo.len();
        // ancestors factor over axes
        let maps: Vec<Vec<usize>> = (0..n)
            .map(|d| {
                (0..base.shape[d])
                    .map(|m| {
                        let mut k = base.lo[d] + m as i64;
                        for l in &self.levels[..li] {
                            k = self.grid.parent_axis_index(l.j, d, k);
                        }
                        (k - self.levels[li].lo[d]) as usize
                    })
                    .collect()
            })
            .collect();
        let level = &self.levels[li];
        (0..self.lattice.len())
            .map(|i| {
                let idx = self.lattice.multi(i);
                let mut lin = 0usize;
                for d in 0..n {
                    lin = lin * level.shape[d] + maps[d][idx[d]];
                }
                level.mass[lin]
            })
            .collect()
    }

    /// `max_j weight(j) * mass(ancestor at level j)` for every base cell.
    pub fn field(&self, weight: impl Fn(i32) -> f64) -> Vec<f64> {
        let mut out = vec![0.0f64; self.lattice.len()];
        for li in 0..self.levels.len() {
            let w = weight(self.levels[li].j);
            for (o, m) in out.iter_mut().zip(self.ancestor_masses(li)) {
                *o = o.max(w * m);
            }
        }
        out
    }

    /// `max_j num(Q_j) / den(Q_j)` over ancestors with `den > 0`.
    pub fn ratio_field(num: &DyadicTree, den: &DyadicTree) -> Result<Vec<f64>> {
        num.lattice.ensure_same(&den.lattice)?;
        if num.grid != den.grid || num.levels.len() != den.levels.len() {
            return Err(Error::InvalidParameter("trees over different grids or level ranges".into()));
        }
        let mut out = vec![0.0f64; num.lattice.len()];
        for li in 0..num.levels.len() {
            let a = num.ancestor_masses(li);
            let b = den.ancestor_masses(li);
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                if y > 0.0 {
                    *o = o.max(x / y);
                }
            }
        }
        Ok(out)
    }
}
