//! Maximal, dyadic maximal and fractional operators applied to `f sigma`.
//!
//! Fields are evaluated per lattice cell. Maximal fields take the sup over
//! cubes whose corners lie on the field lattice (sides from one cell up to
//! the lattice diameter, overhanging the edge allowed), so every value is an
//! average over an actual cube containing the cell and hence a lower bound
//! for the true maximal function at every point of the cell.

mod dyadic;
pub(crate) mod fractional;
mod sliding;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use dyadic::DyadicTree;

use crate::error::{Error, Result};
use crate::geometry::{Rational, ShiftedGrid};
use crate::measures::{CellSet, Lattice, LatticeFunction, Measure, Sampling};

/// Which operator produced a field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Operator {
    Maximal,
    FracMaximal { alpha: f64 },
    FracIntegral { alpha: f64 },
}

impl Operator {
    pub fn name(&self) -> String {
        match self {
            Operator::Maximal => "M".into(),
            Operator::FracMaximal { alpha } => format!("M_{alpha}"),
            Operator::FracIntegral { alpha } => format!("I_{alpha}"),
        }
    }

    /// Field of this operator applied to `f sigma`, on `f`'s lattice split
    /// `refine` times per axis (fractional integrals ignore `refine`).
    pub fn field(&self, f: &LatticeFunction, sigma: &Measure, refine: usize) -> Result<OperatorField> {
        match *self {
            Operator::Maximal => maximal_field(f, sigma, refine),
            Operator::FracMaximal { alpha } => frac_maximal_field(alpha, f, sigma, refine),
            Operator::FracIntegral { alpha } => frac_integral_field(alpha, f, sigma),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub operator: String,
    pub spacing: Rational,
    pub note: String,
}

/// One value per cell of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    lattice: Lattice,
    values: Vec<f64>,
    provenance: Provenance,
}

impl OperatorField {
    pub fn new(lattice: Lattice, values: Vec<f64>, operator: &str, note: &str) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!("{} values for {} cells", values.len(), lattice.len())));
        }
        let provenance = Provenance { operator: operator.into(), spacing: lattice.spacing(), note: note.into() };
        Ok(OperatorField { lattice, values, provenance })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Value on the cell containing `x`, if any.
    pub fn value_at(&self, x: &[Rational]) -> Option<f64> {
        self.lattice.locate(x).map(|i| self.values[i])
    }

    /// Values read at the cell midpoints of `target`.
    pub fn resample(&self, target: &Lattice) -> Result<OperatorField> {
        let values = (0..target.len())
            .map(|i| {
                let m = target.midpoint(i);
                self.value_at(&m)
                    .ok_or_else(|| Error::LatticeMismatch(format!("midpoint {m:?} outside the field lattice")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(OperatorField {
            lattice: target.clone(),
            values,
            provenance: Provenance { spacing: target.spacing(), ..self.provenance.clone() },
        })
    }

    /// Cells where the field exceeds `t`.
    pub fn superlevel(&self, t: f64) -> Result<CellSet> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("superlevel threshold {t} must be positive")));
        }
        Ok(CellSet::from_fn(&self.lattice, |i| self.values[i] > t))
    }

    /// `∫ field^2 domega` with exact cell masses of `omega`.
    pub fn integral_sq(&self, omega: &Measure) -> Result<f64> {
        check_dim(omega, &self.lattice)?;
        let w = omega.cell_masses(&self.lattice, Sampling::Exact);
        Ok(self.values.iter().zip(&w).map(|(v, m)| v * v * m).sum())
    }

    /// `omega({field > t})`.
    pub fn level_mass(&self, omega: &Measure, t: f64) -> Result<f64> {
        check_dim(omega, &self.lattice)?;
        let set = self.superlevel(t)?;
        let w = omega.cell_masses(&self.lattice, Sampling::Exact);
        Ok(set.cells().map(|i| w[i]).sum())
    }

    pub fn to_function(&self) -> LatticeFunction {
        LatticeFunction::new(self.lattice.clone(), self.values.clone()).expect("lengths agree")
    }

    /// CSV rows `x1,..,xn,value` at cell midpoints in cell order.
    pub fn to_csv(&self) -> String {
        let n = self.lattice.dim();
        let mut out = String::new();
        let head: Vec<String> = (1..=n).map(|d| format!("x{d}")).collect();
        let _ = writeln!(out, "{},value", head.join(","));
        for (i, v) in self.values.iter().enumerate() {
            let mid: Vec<String> = self.lattice.midpoint_f64(i).iter().map(|c| format!("{c}")).collect();
            let _ = writeln!(out, "{},{v}", mid.join(","));
        }
        out
    }
}

fn check_dim(mu: &Measure, lattice: &Lattice) -> Result<()> {
    if mu.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch { expected: lattice.dim(), got: mu.dim() });
    }
    Ok(())
}

/// Masses of `f sigma` on the cells of `f`'s lattice.
pub fn weighted_masses(f: &LatticeFunction, sigma: &Measure) -> Result<Vec<f64>> {
    check_dim(sigma, f.lattice())?;
    let base = sigma.cell_masses(f.lattice(), Sampling::Exact);
    Ok(base.iter().zip(f.values()).map(|(m, v)| m * v).collect())
}

/// Masses of `f sigma` transferred to `target` (proportional split).
fn masses_on(f: &LatticeFunction, sigma: &Measure, target: &Lattice) -> Result<Vec<f64>> {
    let own = weighted_masses(f, sigma)?;
    if target == f.lattice() {
        return Ok(own);
    }
    Ok(Measure::lattice(f.lattice().clone(), own)?.cell_masses(target, Sampling::Exact))
}

fn check_alpha(alpha: f64, n: usize, allow_zero: bool) -> Result<()> {
    let ok = alpha < n as f64 && (alpha > 0.0 || (allow_zero && alpha == 0.0));
    if !ok || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside the admissible range for n = {n}")));
    }
    Ok(())
}

fn sliding_field(alpha: f64, lattice: &Lattice, masses: &[f64]) -> Vec<f64> {
    let n = lattice.dim() as f64;
    let h = lattice.spacing().to_f64();
    let longest = *lattice.shape().iter().max().expect("nonempty shape");
    sliding::sliding_maximal(lattice.shape(), masses, longest, |s| (s as f64 * h).powf(alpha - n))
}

fn refined(f: &LatticeFunction, refine: usize) -> Result<Lattice> {
    if refine == 0 {
        return Err(Error::InvalidParameter("refinement factor 0".into()));
    }
    f.lattice().refine(refine)
}

/// Field of `M(f sigma)`.
pub fn maximal_field(f: &LatticeFunction, sigma: &Measure, refine: usize) -> Result<OperatorField> {
    frac_maximal_field(0.0, f, sigma, refine).map(|mut field| {
        field.provenance.operator = "M".into();
        field
    })
}

/// Field of `M_alpha(f sigma)`, averages `|Q|^{alpha/n - 1} ∫_Q f dsigma`.
pub fn frac_maximal_field(alpha: f64, f: &LatticeFunction, sigma: &Measure, refine: usize) -> Result<OperatorField> {
    check_alpha(alpha, f.lattice().dim(), true)?;
    let lattice = refined(f, refine)?;
    let masses = masses_on(f, sigma, &lattice)?;
    let values = sliding_field(alpha, &lattice, &masses);
    OperatorField::new(lattice, values, &format!("M_{alpha}"), "sup over lattice-aligned cubes")
}

/// Field of `I_alpha(f sigma)` at cell midpoints of `f`'s lattice.
pub fn frac_integral_field(alpha: f64, f: &LatticeFunction, sigma: &Measure) -> Result<OperatorField> {
    let n = f.lattice().dim();
    check_alpha(alpha, n, false)?;
    let masses = weighted_masses(f, sigma)?;
    let values = fractional::field(f.lattice(), &masses, alpha);
    let note = if n == 1 { "exact for uniform density per cell" } else { "midpoint kernel, ball self-term" };
    OperatorField::new(f.lattice().clone(), values, &format!("I_{alpha}"), note)
}

/// Field of `M^{D}(f sigma)` for the grid `grid`, on a grid-native lattice
/// covering `f`'s lattice.
pub fn dyadic_maximal_field(grid: &ShiftedGrid, f: &LatticeFunction, sigma: &Measure) -> Result<OperatorField> {
    let tree = dyadic_tree(grid, f, sigma)?;
    let n = grid.dim() as i32;
    let values = tree.field(|j| Rational::pow2(-j * n).to_f64());
    OperatorField::new(tree.lattice().clone(), values, &format!("M^D {grid}"), "exact over levels base..top")
}

/// Tree of the masses of `f sigma` over the cubes of `grid`.
pub fn dyadic_tree(grid: &ShiftedGrid, f: &LatticeFunction, sigma: &Measure) -> Result<DyadicTree> {
    if grid.dim() != f.lattice().dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: f.lattice().dim() });
    }
    let native = DyadicTree::native_lattice(grid, f.lattice())?;
    let masses = masses_on(f, sigma, &native)?;
    DyadicTree::new(grid, &native, &masses, DyadicTree::default_top(&native))
}

/// Field of `M^gamma_mu f`: sup of `mu`-averages of `f` over grid cubes,
/// skipping cubes with `mu(Q) = 0`.
pub fn weighted_dyadic_maximal_field(grid: &ShiftedGrid, mu: &Measure, f: &LatticeFunction) -> Result<OperatorField> {
    let num = dyadic_tree(grid, f, mu)?;
    let one = LatticeFunction::constant(f.lattice(), 1.0)?;
    let den = dyadic_tree(grid, &one, mu)?;
    let values = DyadicTree::ratio_field(&num, &den)?;
    OperatorField::new(num.lattice().clone(), values, &format!("M_mu {grid}"), "mu-null cubes skipped")
}

fn spacing_factor(lattice: &Lattice, res: Rational) -> Result<usize> {
    if !res.is_positive() {
        return Err(Error::InvalidParameter(format!("resolution {res} must be positive")));
    }
    let q = lattice.spacing() / res;
    if !q.is_integer() {
        return Err(Error::Resolution(format!("resolution {res} does not divide the spacing {}", lattice.spacing())));
    }
    Ok(q.numer() as usize)
}

/// `M_alpha(f sigma)(x)` over cubes with corners on the `res`-lattice.
pub fn frac_maximal(alpha: f64, f: &LatticeFunction, sigma: &Measure, x: &[Rational], res: Rational) -> Result<f64> {
    let lat = f.lattice();
    check_alpha(alpha, lat.dim(), true)?;
    if x.len() != lat.dim() {
        return Err(Error::DimensionMismatch { expected: lat.dim(), got: x.len() });
    }
    let fine = lat.refine(spacing_factor(lat, res)?)?;
    let masses = masses_on(f, sigma, &fine)?;
    // grow the lattice until it holds x
    let mut pad = 0usize;
    for d in 0..lat.dim() {
        let u = fine.units(d, x[d]);
        let below = (-u.floor()).max(0) as usize;
        let above = (u.floor() + 1 - fine.shape()[d] as i128).max(0) as usize;
        pad = pad.max(below).max(above);
    }
    let big = fine.padded(pad);
    let mut big_masses = vec![0.0; big.len()];
    for (i, m) in masses.iter().enumerate() {
        let idx: Vec<usize> = fine.multi(i).iter().map(|k| k + pad).collect();
        big_masses[big.linear(&idx)] = *m;
    }
    let values = sliding_field(alpha, &big, &big_masses);
    let at = big.locate(x).ok_or_else(|| Error::DegenerateInput(format!("no candidate cube contains {x:?}")))?;
    Ok(values[at])
}

/// `M(f sigma)(x)` over cubes with corners on the `res`-lattice.
pub fn maximal(f: &LatticeFunction, sigma: &Measure, x: &[Rational], res: Rational) -> Result<f64> {
    frac_maximal(0.0, f, sigma, x, res)
}

/// `M^{D}(f sigma)(x)` over grid levels from the cell scale to a few levels
/// above the support diameter.
pub fn dyadic_maximal(grid: &ShiftedGrid, f: &LatticeFunction, sigma: &Measure, x: &[Rational]) -> Result<f64> {
    let tree = dyadic_tree(grid, f, sigma)?;
    let n = grid.dim() as i32;
    Ok(tree
        .chain_masses(x)?
        .into_iter()
        .map(|(j, m)| m * Rational::pow2(-j * n).to_f64())
        .fold(0.0, f64::max))
}

/// `M^gamma_mu f(x)`; zero when every candidate cube is `mu`-null.
pub fn weighted_dyadic_maximal(grid: &ShiftedGrid, mu: &Measure, f: &LatticeFunction, x: &[Rational]) -> Result<f64> {
    let num = dyadic_tree(grid, f, mu)?;
    let one = LatticeFunction::constant(f.lattice(), 1.0)?;
    let den = dyadic_tree(grid, &one, mu)?;
    let a = num.chain_masses(x)?;
    let b = den.chain_masses(x)?;
    Ok(a.iter().zip(&b).filter(|(_, (_, m))| *m > 0.0).map(|((_, p), (_, m))| p / m).fold(0.0, f64::max))
}

/// `I_alpha(f mu)(x)`.
pub fn frac_integral(alpha: f64, f: &LatticeFunction, mu: &Measure, x: &[Rational]) -> Result<f64> {
    let lat = f.lattice();
    check_alpha(alpha, lat.dim(), false)?;
    if x.len() != lat.dim() {
        return Err(Error::DimensionMismatch { expected: lat.dim(), got: x.len() });
    }
    let masses = weighted_masses(f, mu)?;
    fractional::at_point(lat, &masses, alpha, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cube, Rect};

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn window_1d(lo: i128, hi: i128, h: Rational) -> Lattice {
        Lattice::window(1, r(lo, 1), r(hi, 1), h).unwrap()
    }

    #[test]
    fn maximal_of_an_indicator_is_one_inside() {
        let lat = window_1d(-2, 2, r(1, 4));
        let q = Cube::interval(r(0, 1), r(1, 1)).unwrap();
        let f = LatticeFunction::indicator(&lat, &q);
        let leb = Measure::lebesgue(1);
        assert_eq!(maximal(&f, &leb, &[r(1, 2)], r(1, 4)).unwrap(), 1.0);
        let field = maximal_field(&f, &leb, 1).unwrap();
        assert_eq!(field.value_at(&[r(1, 8)]).unwrap(), 1.0);
        assert!(field.value_at(&[r(-3, 2)]).unwrap() < 1.0);
    }

    #[test]
    fn unit_mass_seen_from_two() {
        // mass 1 on [0,h); best interval containing 2 is [0, 2+h)
        let h = r(1, 8);
        let lat = window_1d(0, 1, h);
        let f = LatticeFunction::from_fn(&lat, |i| if i == 0 { 8.0 } else { 0.0 }).unwrap();
        let v = maximal(&f, &Measure::lebesgue(1), &[r(2, 1)], h).unwrap();
        assert!((v - 1.0 / (2.0 + 0.125)).abs() < 1e-12);
    }

    #[test]
    fn exponential_case_stays_below_the_closed_form_bound() {
        // f = 1 on [0, b), x in [0, 1)
        let b = 3.0;
        let lat = window_1d(0, 3, r(1, 16));
        let f = LatticeFunction::constant(&lat, 1.0).unwrap();
        let bound = (f64::exp(b) - 1.0) / (b - 1.0);
        let field = maximal_field(&f, &Measure::exp_1d(), 1).unwrap();
        for i in 0..16 {
            assert!(field.values()[i] <= bound);
        }
    }

    #[test]
    fn refinement_never_lowers_the_maximal_function() {
        let lat = window_1d(0, 2, r(1, 4));
        let f = LatticeFunction::from_fn(&lat, |i| ((i * 3) % 4) as f64).unwrap();
        let sigma = Measure::exp_1d();
        let x = [r(7, 5)];
        let coarse = maximal(&f, &sigma, &x, r(1, 4)).unwrap();
        let fine = maximal(&f, &sigma, &x, r(1, 8)).unwrap();
        let finer = maximal(&f, &sigma, &x, r(1, 24)).unwrap();
        assert!(coarse <= fine + 1e-12 && fine <= finer + 1e-12);
        assert!(matches!(maximal(&f, &sigma, &x, r(1, 5)), Err(Error::Resolution(_))));
    }

    #[test]
    fn dyadic_maximal_of_constant_is_constant() {
        let lat = Lattice::window(2, r(0, 1), r(1, 1), r(1, 4)).unwrap();
        let f = LatticeFunction::constant(&lat, 1.0).unwrap();
        let leb = Measure::lebesgue(2);
        for grid in ShiftedGrid::all(2) {
            let v = dyadic_maximal(&grid, &f, &leb, &[r(1, 3), r(5, 7)]).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{grid}: {v}");
        }
    }

    #[test]
    fn dyadic_field_lies_below_the_maximal_field() {
        let lat = window_1d(0, 4, r(1, 4));
        let f = LatticeFunction::from_fn(&lat, |i| ((i * 5) % 7) as f64).unwrap();
        let sigma = Measure::exp_1d();
        // corners of every shifted cube at or above the cell scale sit on h/3
        let full = maximal_field(&f, &sigma, 3).unwrap();
        for grid in ShiftedGrid::all(1) {
            let dy = dyadic_maximal_field(&grid, &f, &sigma).unwrap();
            for i in 0..dy.lattice().len() {
                let m = dy.lattice().midpoint(i);
                if let Some(big) = full.value_at(&m) {
                    assert!(dy.values()[i] <= big * (1.0 + 1e-9), "{grid} cell {i}");
                }
            }
        }
    }

    #[test]
    fn weighted_dyadic_on_one_charged_cell() {
        let lat = window_1d(0, 2, r(1, 2));
        let omega = Measure::lattice(lat.clone(), vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        let f = LatticeFunction::new(lat.clone(), vec![9.0, 3.5, 1.0, 4.0]).unwrap();
        let g = ShiftedGrid::standard(1);
        assert_eq!(weighted_dyadic_maximal(&g, &omega, &f, &[r(3, 4)]).unwrap(), 3.5);
        let field = weighted_dyadic_maximal_field(&g, &omega, &f).unwrap();
        assert_eq!(field.values()[1], 3.5);
        let c = LatticeFunction::constant(&lat, 2.5).unwrap();
        let field = weighted_dyadic_maximal_field(&g, &Measure::lebesgue(1), &c).unwrap();
        assert!(field.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn fractional_integral_of_a_thin_mass() {
        for k in [4, 6, 8] {
            let h = Rational::pow2(-k);
            let lat = Lattice::new(vec![r(0, 1)], h, vec![1]).unwrap();
            let f = LatticeFunction::constant(&lat, 2f64.powi(k)).unwrap();
            let v = frac_integral(0.5, &f, &Measure::lebesgue(1), &[r(1, 1)]).unwrap();
            let hf = h.to_f64();
            let expect = (1.0 - hf / 2.0).powf(-0.5);
            assert!((v - expect).abs() < hf * hf, "h = {hf}: {v} vs {expect}");
        }
    }

    #[test]
    fn fractional_far_field_and_scaling() {
        let lat = Lattice::window(2, r(-1, 1), r(1, 1), r(1, 4)).unwrap();
        let f = LatticeFunction::from_fn(&lat, |i| 1.0 + (i % 3) as f64).unwrap();
        let leb = Measure::lebesgue(2);
        let total: f64 = weighted_masses(&f, &leb).unwrap().iter().sum();
        let x = [r(9, 1), r(-7, 2)];
        let dist = (81.0f64 + 12.25).sqrt();
        let v = frac_integral(1.0, &f, &leb, &x).unwrap();
        let ratio = v / (dist.powf(-1.0) * total);
        assert!((0.5..=1.5).contains(&ratio));
        let twice = frac_integral(1.0, &f.scaled(3.0).unwrap(), &leb, &x).unwrap();
        assert!((twice - 3.0 * v).abs() < 1e-12 * v);
    }

    #[test]
    fn frac_maximal_tends_to_maximal() {
        let lat = window_1d(0, 2, r(1, 8));
        let f = LatticeFunction::from_fn(&lat, |i| (i % 5) as f64).unwrap();
        let sigma = Measure::exp_1d();
        let m = maximal_field(&f, &sigma, 1).unwrap();
        let ma = frac_maximal_field(1e-6, &f, &sigma, 1).unwrap();
        for (a, b) in m.values().iter().zip(ma.values()) {
            assert!((a - b).abs() <= 1e-4 * a.max(1.0));
        }
        let zero = LatticeFunction::constant(&lat, 0.0).unwrap();
        assert_eq!(frac_maximal_field(0.5, &zero, &sigma, 1).unwrap().max(), 0.0);
        let q = Cube::interval(r(0, 1), r(1, 2)).unwrap();
        let ind = LatticeFunction::indicator(&lat, &q);
        let v = frac_maximal(0.5, &ind, &Measure::lebesgue(1), &[r(1, 4)], r(1, 8)).unwrap();
        assert!(v >= 0.5f64.powf(0.5) - 1e-12);
    }

    #[test]
    fn superlevel_sets_shrink() {
        let lat = window_1d(0, 4, r(1, 8));
        let f = LatticeFunction::from_fn(&lat, |i| if i % 11 == 0 { 3.0 } else { 0.0 }).unwrap();
        let field = maximal_field(&f, &Measure::lebesgue(1), 1).unwrap();
        assert!(field.superlevel(field.max() * 1.01).unwrap().is_empty());
        assert!(!field.superlevel(field.max() * 0.99).unwrap().is_empty());
        assert!(field.superlevel(0.0).is_err());
        for k in -4..2 {
            let big = field.superlevel(2f64.powi(k)).unwrap();
            let small = field.superlevel(2f64.powi(k + 1)).unwrap();
            assert!(small.is_subset(&big).unwrap());
        }
    }

    #[test]
    fn csv_dump_lists_midpoints() {
        let lat = Lattice::over_rect(&Rect::new(vec![r(0, 1), r(0, 1)], vec![r(1, 1), r(1, 2)]).unwrap(), r(1, 2))
            .unwrap();
        let field = OperatorField::new(lat, vec![1.0, 2.0], "test", "").unwrap();
        assert_eq!(field.to_csv(), "x1,x2,value\n0.25,0.25,1\n0.75,0.25,2\n");
    }
}
