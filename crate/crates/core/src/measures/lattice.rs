use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, Rational, Rect, ShiftedGrid, MAX_DIM};

/// A finite box of congruent half-open cells `origin + spacing * (i + [0,1)^n)`.
///
/// Cells are numbered row-major with the last axis fastest, which is also
/// the lexicographic order of their multi-indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    origin: Vec<Rational>,
    spacing: Rational,
    shape: Vec<usize>,
}

impl Lattice {
    pub fn new(origin: Vec<Rational>, spacing: Rational, shape: Vec<usize>) -> Result<Self> {
        if origin.is_empty() || origin.len() > MAX_DIM || origin.len() != shape.len() {
            return Err(Error::InvalidParameter(format!(
                "lattice origin {origin:?} and shape {shape:?} disagree"
            )));
        }
        if !spacing.is_positive() {
            return Err(Error::InvalidParameter(format!("lattice spacing {spacing} must be positive")));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidParameter("lattice with an empty axis".into()));
        }
        Ok(Lattice { origin, spacing, shape })
    }

    /// Lattice of cells of side `spacing` exactly tiling `rect`.
    pub fn over_rect(rect: &Rect, spacing: Rational) -> Result<Self> {
        let mut shape = Vec::with_capacity(rect.dim());
        for d in 0..rect.dim() {
            let cells = (rect.hi[d] - rect.lo[d]) / spacing;
            if !cells.is_integer() || !cells.is_positive() {
                return Err(Error::Resolution(format!(
                    "spacing {spacing} does not divide side {} of the window",
                    rect.hi[d] - rect.lo[d]
                )));
            }
            shape.push(cells.numer() as usize);
        }
        Lattice::new(rect.lo.clone(), spacing, shape)
    }

    /// Lattice tiling the cube `[lo, hi)^n`.
    pub fn window(dim: usize, lo: Rational, hi: Rational, spacing: Rational) -> Result<Self> {
        Lattice::over_rect(&Rect::new(vec![lo; dim], vec![hi; dim])?, spacing)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn origin(&self) -> &[Rational] {
        &self.origin
    }

    pub fn spacing(&self) -> Rational {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.to_f64().powi(self.dim() as i32)
    }

    pub fn extent(&self) -> Rect {
        let hi = self
            .origin
            .iter()
            .zip(&self.shape)
            .map(|(o, s)| *o + self.spacing * Rational::int(*s as i128))
            .collect();
        Rect { lo: self.origin.clone(), hi }
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for d in (0..self.dim().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.shape[d + 1];
        }
        strides
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = i % self.shape[d];
            i /= self.shape[d];
        }
        idx
    }

    pub fn cell_cube(&self, i: usize) -> Cube {
        let idx = self.multi(i);
        let corner = idx
            .iter()
            .zip(&self.origin)
            .map(|(k, o)| *o + self.spacing * Rational::int(*k as i128))
            .collect();
        Cube::new(corner, self.spacing).expect("positive spacing")
    }

    pub fn midpoint(&self, i: usize) -> Vec<Rational> {
        let half = self.spacing / Rational::int(2);
        self.cell_cube(i).corner().iter().map(|c| *c + half).collect()
    }

    pub fn midpoint_f64(&self, i: usize) -> Vec<f64> {
        let h = self.spacing.to_f64();
        self.multi(i)
            .iter()
            .zip(&self.origin)
            .map(|(k, o)| o.to_f64() + h * (*k as f64 + 0.5))
            .collect()
    }

    /// Coordinate along axis `d` in cell units relative to the origin.
    pub fn units(&self, d: usize, x: Rational) -> Rational {
        (x - self.origin[d]) / self.spacing
    }

    /// Cell containing `x`, if inside the lattice.
    pub fn locate(&self, x: &[Rational]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let k = self.units(d, x[d]).floor();
            if k < 0 || k >= self.shape[d] as i128 {
                return None;
            }
            idx.push(k as usize);
        }
        Some(self.linear(&idx))
    }

    /// Per-axis half-open index ranges of the cells meeting the interior of `rect`.
    pub fn cell_range(&self, rect: &Rect) -> Option<Vec<(usize, usize)>> {
        let mut ranges = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let lo = self.units(d, rect.lo[d]).floor().max(0);
            let hi = self.units(d, rect.hi[d]).ceil().min(self.shape[d] as i128);
            if lo >= hi {
                return None;
            }
            ranges.push((lo as usize, hi as usize));
        }
        Some(ranges)
    }

    /// Integer cell box exactly equal to `rect`, if `rect` is aligned
    /// (indices may fall outside the lattice).
    pub fn aligned_range(&self, rect: &Rect) -> Option<Vec<(i64, i64)>> {
        (0..self.dim())
            .map(|d| {
                let (a, b) = (self.units(d, rect.lo[d]), self.units(d, rect.hi[d]));
                (a.is_integer() && b.is_integer()).then(|| (a.numer() as i64, b.numer() as i64))
            })
            .collect()
    }

    /// Iterates the linear indices of all cells in a per-axis index box.
    pub fn cells_in(&self, ranges: &[(usize, usize)]) -> impl Iterator<Item = usize> + '_ {
        let strides = self.strides();
        let total: usize = ranges.iter().map(|(a, b)| b - a).product();
        let ranges = ranges.to_vec();
        (0..total).map(move |mut m| {
            let mut lin = 0;
            for d in (0..ranges.len()).rev() {
                let w = ranges[d].1 - ranges[d].0;
                lin += (ranges[d].0 + m % w) * strides[d];
                m /= w;
            }
            lin
        })
    }

    /// Same extent with each cell split into `factor^n` cells.
    pub fn refine(&self, factor: usize) -> Result<Lattice> {
        if factor == 0 {
            return Err(Error::InvalidParameter("refinement factor 0".into()));
        }
        Lattice::new(
            self.origin.clone(),
            self.spacing / Rational::int(factor as i128),
            self.shape.iter().map(|s| s * factor).collect(),
        )
    }

    /// Lattice with the same spacing grown by `pad` cells on every side.
    pub fn padded(&self, pad: usize) -> Lattice {
        let shift = self.spacing * Rational::int(pad as i128);
        Lattice {
            origin: self.origin.iter().map(|o| *o - shift).collect(),
            spacing: self.spacing,
            shape: self.shape.iter().map(|s| s + 2 * pad).collect(),
        }
    }

    /// The level-`level` cubes of `grid` meeting `rect`, as a lattice.
    pub fn grid_native(grid: &ShiftedGrid, level: i32, rect: &Rect) -> Result<Lattice> {
        if rect.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), got: rect.dim() });
        }
        grid.cube(level, &vec![0; grid.dim()])?;
        let mut origin = Vec::with_capacity(rect.dim());
        let mut shape = Vec::with_capacity(rect.dim());
        for d in 0..rect.dim() {
            let lo = grid.axis_index(level, d, rect.lo[d]);
            let mut hi = grid.axis_index(level, d, rect.hi[d]);
            if grid.coordinate(level, d, hi) < rect.hi[d] {
                hi += 1;
            }
            origin.push(grid.coordinate(level, d, lo));
            shape.push((hi - lo).max(1) as usize);
        }
        Lattice::new(origin, Rational::pow2(level), shape)
    }

    /// If every cell is a cube of `grid`, the level and the index of cell 0.
    pub fn grid_alignment(&self, grid: &ShiftedGrid) -> Option<(i32, Vec<i64>)> {
        if grid.dim() != self.dim() {
            return None;
        }
        let j = self.spacing.log2_exact()?;
        let mut k0 = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let k = grid.axis_index(j, d, self.origin[d]);
            if grid.coordinate(j, d, k) != self.origin[d] {
                return None;
            }
            k0.push(k);
        }
        Some((j, k0))
    }

    pub fn ensure_same(&self, other: &Lattice) -> Result<()> {
        if self != other {
            return Err(Error::LatticeMismatch(format!(
                "lattice with origin {:?}, spacing {}, shape {:?} vs origin {:?}, spacing {}, shape {:?}",
                self.origin, self.spacing, self.shape, other.origin, other.spacing, other.shape
            )));
        }
        Ok(())
    }
}

/// A finite union of cells of one lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    lattice: Lattice,
    mask: Vec<bool>,
}

impl CellSet {
    pub fn empty(lattice: &Lattice) -> Self {
        CellSet { lattice: lattice.clone(), mask: vec![false; lattice.len()] }
    }

    pub fn full(lattice: &Lattice) -> Self {
        CellSet { lattice: lattice.clone(), mask: vec![true; lattice.len()] }
    }

    pub fn from_mask(lattice: &Lattice, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!(
                "mask of length {} for lattice with {} cells",
                mask.len(),
                lattice.len()
            )));
        }
        Ok(CellSet { lattice: lattice.clone(), mask })
    }

    pub fn from_fn(lattice: &Lattice, f: impl Fn(usize) -> bool) -> Self {
        CellSet { lattice: lattice.clone(), mask: (0..lattice.len()).map(f).collect() }
    }

    /// Cells lying inside `rect`.
    pub fn inside_rect(lattice: &Lattice, rect: &Rect) -> Self {
        CellSet::from_fn(lattice, |i| rect.contains_rect(&lattice.cell_cube(i).rect()))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.mask[i] = true;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|b| *b)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|b| *b)
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn complement(&self) -> CellSet {
        CellSet { lattice: self.lattice.clone(), mask: self.mask.iter().map(|b| !b).collect() }
    }

    fn zip_with(&self, other: &CellSet, op: impl Fn(bool, bool) -> bool) -> Result<CellSet> {
        self.lattice.ensure_same(&other.lattice)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| op(*a, *b)).collect();
        Ok(CellSet { lattice: self.lattice.clone(), mask })
    }

    pub fn union(&self, other: &CellSet) -> Result<CellSet> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &CellSet) -> Result<CellSet> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &CellSet) -> Result<CellSet> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &CellSet) -> Result<bool> {
        self.lattice.ensure_same(&other.lattice)?;
        Ok(self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn indexing_round_trip() {
        let l = Lattice::new(vec![r("-1"), r("0")], r("1/4"), vec![3, 5]).unwrap();
        for i in 0..l.len() {
            assert_eq!(l.linear(&l.multi(i)), i);
            assert_eq!(l.locate(&l.midpoint(i)), Some(i));
        }
        assert_eq!(l.multi(7), vec![1, 2]);
    }

    #[test]
    fn cell_range_is_half_open() {
        let l = Lattice::window(1, r("0"), r("4"), r("1")).unwrap();
        let rect = Rect::new(vec![r("1/2")], vec![r("2")]).unwrap();
        assert_eq!(l.cell_range(&rect), Some(vec![(0, 2)]));
        let outside = Rect::new(vec![r("5")], vec![r("6")]).unwrap();
        assert_eq!(l.cell_range(&outside), None);
        assert_eq!(l.aligned_range(&rect), None);
        let aligned = Rect::new(vec![r("-1")], vec![r("2")]).unwrap();
        assert_eq!(l.aligned_range(&aligned), Some(vec![(-1, 2)]));
    }

    #[test]
    fn window_requires_divisible_spacing() {
        assert!(Lattice::window(1, r("0"), r("1"), r("1/3")).is_ok());
        assert!(matches!(
            Lattice::window(1, r("0"), r("1"), r("2/5")),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn cellset_algebra() {
        let l = Lattice::window(1, r("0"), r("4"), r("1")).unwrap();
        let a = CellSet::from_fn(&l, |i| i < 2);
        let b = CellSet::from_fn(&l, |i| i % 2 == 0);
        assert_eq!(a.union(&b).unwrap().count(), 3);
        assert_eq!(a.intersection(&b).unwrap().count(), 1);
        assert_eq!(a.difference(&b).unwrap().cells().collect::<Vec<_>>(), vec![1]);
        assert!(a.intersection(&b).unwrap().is_subset(&a).unwrap());
        let other = Lattice::window(1, r("0"), r("4"), r("1/2")).unwrap();
        assert!(a.union(&CellSet::empty(&other)).is_err());
    }
}
