//! Positive measures used as weights, and functions living on lattices.
//!
//! Closed-form measures (Lebesgue, exponential density, indicator density)
//! integrate exactly over any box through their antiderivatives. Lattice
//! measures carry one mass per cell; boxes that cut cells receive the
//! proportional share `mass * |box ∩ cell| / |cell|`.

mod lattice;
pub(crate) mod prefix;
mod spec;

use std::sync::Arc;

pub use lattice::{CellSet, Lattice};
pub use spec::{MeasureKind, MeasureParams, MeasureSpec, RectSpec};

use prefix::PrefixTable;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Rational, Rect};

/// How a closed-form measure is turned into cell masses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Density at the cell midpoint times the cell volume.
    Midpoint,
    /// Exact mass of each cell.
    Exact,
}

/// Mass per cell of a lattice, with a compensated prefix table.
#[derive(Clone, Debug)]
pub struct LatticeMeasure {
    lattice: Lattice,
    masses: Vec<f64>,
    prefix: PrefixTable,
}

impl LatticeMeasure {
    pub fn new(lattice: Lattice, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!(
                "{} masses for {} cells",
                masses.len(),
                lattice.len()
            )));
        }
        if let Some(bad) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidParameter(format!("cell mass {bad} is not a finite nonnegative number")));
        }
        let prefix = PrefixTable::new(lattice.shape(), &masses);
        Ok(LatticeMeasure { lattice, masses, prefix })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Exact sum over an integer cell box (indices may overhang the lattice).
    pub fn box_sum(&self, lo: &[i64], hi: &[i64]) -> f64 {
        self.prefix.box_sum(lo, hi)
    }

    fn mass_rect(&self, rect: &Rect) -> f64 {
        if let Some(r) = self.lattice.aligned_range(rect) {
            let (lo, hi): (Vec<i64>, Vec<i64>) = r.into_iter().unzip();
            return self.prefix.box_sum(&lo, &hi);
        }
        let split = |x: Rational, d: usize| {
            let u = self.lattice.units(d, x);
            let k = u.floor();
            (k as i64, (u - Rational::int(k)).to_f64())
        };
        let lo: Vec<_> = (0..rect.dim()).map(|d| split(rect.lo[d], d)).collect();
        let hi: Vec<_> = (0..rect.dim()).map(|d| split(rect.hi[d], d)).collect();
        self.prefix.frac_box_sum(&lo, &hi)
    }
}

/// A locally finite positive Borel measure on `R^n`, `n <= 3`.
#[derive(Clone, Debug)]
pub enum Measure {
    Lebesgue { dim: usize },
    /// Density `prod_d exp(rate * y_d)`, optionally truncated to `support`.
    Exp { dim: usize, rate: f64, support: Option<Rect> },
    /// Density `1_rect`.
    Indicator { rect: Rect },
    Lattice(Arc<LatticeMeasure>),
}

impl Measure {
    pub fn lebesgue(dim: usize) -> Self {
        Measure::Lebesgue { dim }
    }

    /// `e^y dy` on the line.
    pub fn exp_1d() -> Self {
        Measure::Exp { dim: 1, rate: 1.0, support: None }
    }

    pub fn indicator(rect: Rect) -> Self {
        Measure::Indicator { rect }
    }

    pub fn lattice(lattice: Lattice, masses: Vec<f64>) -> Result<Self> {
        Ok(Measure::Lattice(Arc::new(LatticeMeasure::new(lattice, masses)?)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Lebesgue { dim } | Measure::Exp { dim, .. } => *dim,
            Measure::Indicator { rect } => rect.dim(),
            Measure::Lattice(l) => l.lattice.dim(),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Measure::Lattice(_))
    }

    pub fn as_lattice(&self) -> Option<&LatticeMeasure> {
        match self {
            Measure::Lattice(l) => Some(l),
            _ => None,
        }
    }

    /// `|Q|_mu`.
    pub fn mass(&self, q: &Cube) -> Result<f64> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: q.dim() });
        }
        Ok(self.mass_rect(&q.rect()))
    }

    /// Mass of a half-open box of matching dimension.
    pub fn mass_rect(&self, rect: &Rect) -> f64 {
        if rect.is_empty() {
            return 0.0;
        }
        match self {
            Measure::Lebesgue { .. } => rect.volume().to_f64(),
            Measure::Indicator { rect: support } => rect.intersect(support).volume().to_f64(),
            Measure::Exp { rate, support, .. } => {
                let clipped = match support {
                    Some(s) => rect.intersect(s),
                    None => rect.clone(),
                };
                if clipped.is_empty() {
                    return 0.0;
                }
                (0..clipped.dim())
                    .map(|d| exp_segment(*rate, clipped.lo[d].to_f64(), clipped.hi[d].to_f64()))
                    .product()
            }
            Measure::Lattice(l) => l.mass_rect(rect),
        }
    }

    /// Density at `x` (cell average for lattice measures; zero off the lattice).
    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            Measure::Lebesgue { .. } => 1.0,
            Measure::Indicator { rect } => {
                let inside = (0..rect.dim()).all(|d| rect.lo[d].to_f64() <= x[d] && x[d] < rect.hi[d].to_f64());
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Measure::Exp { rate, support, .. } => {
                if let Some(s) = support {
                    let inside = (0..s.dim()).all(|d| s.lo[d].to_f64() <= x[d] && x[d] < s.hi[d].to_f64());
                    if !inside {
                        return 0.0;
                    }
                }
                x.iter().map(|xi| (rate * xi).exp()).product()
            }
            Measure::Lattice(l) => {
                let lat = &l.lattice;
                let h = lat.spacing().to_f64();
                let mut idx = Vec::with_capacity(lat.dim());
                for d in 0..lat.dim() {
                    let k = ((x[d] - lat.origin()[d].to_f64()) / h).floor();
                    if k < 0.0 || k >= lat.shape()[d] as f64 {
                        return 0.0;
                    }
                    idx.push(k as usize);
                }
                l.masses[lat.linear(&idx)] / lat.cell_volume()
            }
        }
    }

    /// Cell masses of this measure on `lattice`.
    pub fn cell_masses(&self, lattice: &Lattice, sampling: Sampling) -> Vec<f64> {
        if let Measure::Lattice(l) = self {
            if l.lattice == *lattice {
                return l.masses.clone();
            }
        }
        let vol = lattice.cell_volume();
        (0..lattice.len())
            .map(|i| match (sampling, self) {
                (Sampling::Midpoint, m) if m.is_closed_form() => m.density(&lattice.midpoint_f64(i)) * vol,
                _ => self.mass_rect(&lattice.cell_cube(i).rect()),
            })
            .collect()
    }

    /// Lattice measure with the cell masses of `self` on `lattice`.
    pub fn discretize(&self, lattice: &Lattice, sampling: Sampling) -> Result<Measure> {
        if lattice.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: lattice.dim() });
        }
        Measure::lattice(lattice.clone(), self.cell_masses(lattice, sampling))
    }

    /// `mu` restricted to the cells of `e`. Closed-form measures are first
    /// discretized on `e`'s lattice by midpoint sampling.
    pub fn restrict(&self, e: &CellSet) -> Result<Measure> {
        let base = match self {
            Measure::Lattice(l) => {
                l.lattice.ensure_same(e.lattice())?;
                l.masses.clone()
            }
            _ => {
                if e.lattice().dim() != self.dim() {
                    return Err(Error::DimensionMismatch { expected: self.dim(), got: e.lattice().dim() });
                }
                self.cell_masses(e.lattice(), Sampling::Midpoint)
            }
        };
        let masses = base
            .iter()
            .zip(e.mask())
            .map(|(m, keep)| if *keep { *m } else { 0.0 })
            .collect();
        Measure::lattice(e.lattice().clone(), masses)
    }

    /// The lattice measure `f mu` on `f`'s lattice, using exact cell masses
    /// of closed-form measures.
    pub fn weighted(&self, f: &LatticeFunction) -> Result<Measure> {
        let base = match self {
            Measure::Lattice(l) => {
                l.lattice.ensure_same(&f.lattice)?;
                l.masses.clone()
            }
            _ => {
                if f.lattice.dim() != self.dim() {
                    return Err(Error::DimensionMismatch { expected: self.dim(), got: f.lattice.dim() });
                }
                self.cell_masses(&f.lattice, Sampling::Exact)
            }
        };
        let masses = base.iter().zip(&f.values).map(|(m, v)| m * v).collect();
        Measure::lattice(f.lattice.clone(), masses)
    }

    /// `∫_Q f dmu`.
    pub fn weighted_integral(&self, f: &LatticeFunction, q: &Cube) -> Result<f64> {
        if q.dim() != f.lattice.dim() {
            return Err(Error::DimensionMismatch { expected: f.lattice.dim(), got: q.dim() });
        }
        if let Measure::Lattice(l) = self {
            l.lattice.ensure_same(&f.lattice)?;
        }
        let rect = q.rect();
        let Some(ranges) = f.lattice.cell_range(&rect) else {
            return Ok(0.0);
        };
        let vol = f.lattice.cell_volume();
        let total = f
            .lattice
            .cells_in(&ranges)
            .filter(|i| f.values[*i] > 0.0)
            .map(|i| {
                let cell = f.lattice.cell_cube(i).rect();
                let part = cell.intersect(&rect);
                let mass = match self {
                    Measure::Lattice(l) => l.masses[i] * part.volume().to_f64() / vol,
                    _ => self.mass_rect(&part),
                };
                f.values[i] * mass
            })
            .sum();
        Ok(total)
    }
}

/// `∫_a^b e^{rate y} dy`.
fn exp_segment(rate: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if rate == 0.0 {
        return b - a;
    }
    (rate * a).exp() * (rate * (b - a)).exp_m1() / rate
}

/// A nonnegative function, constant on each cell of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    lattice: Lattice,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!("{} values for {} cells", values.len(), lattice.len())));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("function value {bad} is not finite and nonnegative")));
        }
        Ok(LatticeFunction { lattice, values })
    }

    pub fn constant(lattice: &Lattice, c: f64) -> Result<Self> {
        LatticeFunction::new(lattice.clone(), vec![c; lattice.len()])
    }

    pub fn from_fn(lattice: &Lattice, f: impl Fn(usize) -> f64) -> Result<Self> {
        LatticeFunction::new(lattice.clone(), (0..lattice.len()).map(f).collect())
    }

    /// Indicator of the cells contained in `q`.
    pub fn indicator(lattice: &Lattice, q: &Cube) -> Self {
        let set = CellSet::inside_rect(lattice, &q.rect());
        LatticeFunction::indicator_of(&set)
    }

    pub fn indicator_of(set: &CellSet) -> Self {
        LatticeFunction {
            lattice: set.lattice().clone(),
            values: set.mask().iter().map(|b| if *b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> CellSet {
        CellSet::from_fn(&self.lattice, |i| self.values[i] > 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Pointwise product with the indicator of `set`.
    pub fn masked(&self, set: &CellSet) -> Result<Self> {
        self.lattice.ensure_same(set.lattice())?;
        let values = self
            .values
            .iter()
            .zip(set.mask())
            .map(|(v, keep)| if *keep { *v } else { 0.0 })
            .collect();
        Ok(LatticeFunction { lattice: self.lattice.clone(), values })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        LatticeFunction::new(self.lattice.clone(), self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &LatticeFunction) -> Result<Self> {
        self.lattice.ensure_same(&other.lattice)?;
        LatticeFunction::new(
            self.lattice.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// `‖f‖²_{L²(mu)}` with exact cell masses.
    pub fn l2_norm_sq(&self, mu: &Measure) -> Result<f64> {
        let sq = LatticeFunction {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| v * v).collect(),
        };
        let w = mu.weighted(&sq)?;
        Ok(w.as_lattice().map(|l| l.masses.iter().sum()).unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn interval(a: &str, b: &str) -> Cube {
        Cube::interval(r(a), r(b)).unwrap()
    }

    #[test]
    fn closed_form_masses() {
        let e = Measure::exp_1d();
        let m = e.mass(&interval("0", "1")).unwrap();
        assert!((m - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        let leb = Measure::lebesgue(2);
        let q = Cube::new(vec![r("0"), r("0")], r("2")).unwrap();
        assert_eq!(leb.mass(&q).unwrap(), 4.0);
        let ind = Measure::indicator(Rect::new(vec![r("0")], vec![r("1")]).unwrap());
        assert_eq!(ind.mass(&interval("-1", "1/2")).unwrap(), 0.5);
        assert!(leb.mass(&interval("0", "1")).is_err());
    }

    #[test]
    fn truncated_exp_is_clipped() {
        let m = Measure::Exp {
            dim: 1,
            rate: 1.0,
            support: Some(Rect::new(vec![r("0")], vec![r("1")]).unwrap()),
        };
        let full = m.mass(&interval("-5", "5")).unwrap();
        assert!((full - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn lattice_single_cell_mass() {
        let l = Lattice::window(1, r("0"), r("2"), r("1")).unwrap();
        let mu = Measure::lattice(l, vec![3.0, 0.0]).unwrap();
        assert_eq!(mu.mass(&interval("0", "2")).unwrap(), 3.0);
        assert_eq!(mu.mass(&interval("1/2", "5")).unwrap(), 1.5);
        assert!(Measure::lattice(Lattice::window(1, r("0"), r("2"), r("1")).unwrap(), vec![-1.0, 0.0]).is_err());
    }

    #[test]
    fn weighted_integrals() {
        let l = Lattice::window(1, r("0"), r("2"), r("1")).unwrap();
        let one = LatticeFunction::constant(&l, 1.0).unwrap();
        let e = Measure::exp_1d();
        let q = interval("0", "2");
        assert!((e.weighted_integral(&one, &q).unwrap() - e.mass(&q).unwrap()).abs() < 1e-12);

        let ind = LatticeFunction::new(l.clone(), vec![1.0, 0.0]).unwrap();
        assert_eq!(Measure::lebesgue(1).weighted_integral(&ind, &q).unwrap(), 1.0);

        let f = LatticeFunction::new(l.clone(), vec![2.0, 5.0]).unwrap();
        let mu = Measure::lattice(l.clone(), vec![1.0, 3.0]).unwrap();
        assert_eq!(mu.weighted_integral(&f, &q).unwrap(), 17.0);

        let other = Lattice::window(1, r("0"), r("2"), r("1/2")).unwrap();
        let g = LatticeFunction::constant(&other, 1.0).unwrap();
        assert!(matches!(mu.weighted_integral(&g, &q), Err(Error::LatticeMismatch(_))));
    }

    #[test]
    fn restriction_edge_cases() {
        let l = Lattice::window(1, r("0"), r("4"), r("1")).unwrap();
        let mu = Measure::lattice(l.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let all = mu.restrict(&CellSet::full(&l)).unwrap();
        assert_eq!(all.as_lattice().unwrap().masses(), mu.as_lattice().unwrap().masses());
        let none = mu.restrict(&CellSet::empty(&l)).unwrap();
        assert_eq!(none.mass(&interval("0", "4")).unwrap(), 0.0);
    }

    #[test]
    fn midpoint_discretization_of_exp_on_unit_interval() {
        let h = r("1/4");
        let l = Lattice::window(1, r("-2"), r("2"), h).unwrap();
        let unit = CellSet::inside_rect(&l, &Rect::new(vec![r("0")], vec![r("1")]).unwrap());
        let restricted = Measure::exp_1d().restrict(&unit).unwrap();
        let total = restricted.mass(&interval("-2", "2")).unwrap();
        let exact = std::f64::consts::E - 1.0;
        assert!((total - exact).abs() <= h.to_f64() * exact);
    }

    #[test]
    fn l2_norm_uses_exact_cell_masses() {
        let l = Lattice::window(1, r("0"), r("2"), r("1")).unwrap();
        let f = LatticeFunction::new(l, vec![1.0, 2.0]).unwrap();
        let n = f.l2_norm_sq(&Measure::lebesgue(1)).unwrap();
        assert_eq!(n, 5.0);
    }
}
