//! Whitney decompositions of open sets given as unions of lattice cells.
//!
//! The lattice cells must themselves be cubes of the configured grid. A
//! cube `Q` is *selected* when it is a maximal grid cube with `Q ⊂ Ω` and
//! `R_W Q ⊂ Ω`. Cells of `Ω` that no such cube covers (those within about
//! `R_W / 2` cells of the boundary) are added as *floor* cubes: they are
//! below the resolution of the lattice, so the containment `R_W Q ⊂ Ω` is
//! not required of them. Everything outside the lattice counts as `Ωᶜ`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, Rational, Rect, ShiftedGrid};
use crate::measures::prefix::PrefixTable;
use crate::measures::{CellSet, Lattice, LatticeFunction, Measure};
use crate::operators::{self, OperatorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyConfig {
    pub r_w: Rational,
    pub n: u32,
    pub grid: ShiftedGrid,
    /// Finest admissible cell level.
    pub floor_level: i32,
}

impl WhitneyConfig {
    pub fn new(r_w: Rational, n: u32, grid: ShiftedGrid) -> Result<Self> {
        let cfg = WhitneyConfig { r_w, n, grid, floor_level: -30 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `R_W = 4`, `N = 3`.
    pub fn standard(grid: ShiftedGrid) -> Self {
        WhitneyConfig { r_w: Rational::int(4), n: 3, grid, floor_level: -30 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_w < Rational::int(3) {
            return Err(Error::InvalidParameter(format!("R_W = {} must be at least 3", self.r_w)));
        }
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!("N = {} must be at least 3", self.n)));
        }
        Ok(())
    }
}

/// One cube of a Whitney family.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WhitneyCube {
    pub level: i32,
    pub index: Vec<i64>,
    pub cube: Cube,
    /// Cell-level cube exempt from `R_W Q ⊂ Ω`.
    pub floor: bool,
}

/// Counts of set cells over rational boxes, with everything outside the
/// lattice treated as unset.
struct Counter<'a> {
    lattice: &'a Lattice,
    table: PrefixTable,
}

impl<'a> Counter<'a> {
    fn new(set: &'a CellSet) -> Self {
        let values: Vec<f64> = set.mask().iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
        Counter { lattice: set.lattice(), table: PrefixTable::new(set.lattice().shape(), &values) }
    }

    /// Integer box of the cells meeting the interior of `rect` (unclamped).
    fn range(&self, rect: &Rect) -> (Vec<i64>, Vec<i64>) {
        (0..rect.dim())
            .map(|d| {
                (
                    self.lattice.units(d, rect.lo[d]).floor() as i64,
                    self.lattice.units(d, rect.hi[d]).ceil() as i64,
                )
            })
            .unzip()
    }

    fn inside_lattice(&self, lo: &[i64], hi: &[i64]) -> bool {
        (0..lo.len()).all(|d| lo[d] >= 0 && hi[d] <= self.lattice.shape()[d] as i64)
    }

    /// `rect ⊂ set` up to measure zero.
    fn covers(&self, rect: &Rect) -> bool {
        let (lo, hi) = self.range(rect);
        if !self.inside_lattice(&lo, &hi) {
            return false;
        }
        let cells: i64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        self.table.box_sum(&lo, &hi) == cells as f64
    }
}

/// A Whitney family of `Ω` with the configuration that built it.
#[derive(Clone, Debug)]
pub struct WhitneyFamily {
    cubes: Vec<WhitneyCube>,
    omega: CellSet,
    config: WhitneyConfig,
}

impl WhitneyFamily {
    pub fn cubes(&self) -> &[WhitneyCube] {
        &self.cubes
    }

    pub fn omega(&self) -> &CellSet {
        &self.omega
    }

    pub fn config(&self) -> &WhitneyConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn floor_count(&self) -> usize {
        self.cubes.iter().filter(|c| c.floor).count()
    }

    /// Replace the cube list (for building negative controls).
    pub fn with_cubes(&self, cubes: Vec<WhitneyCube>) -> WhitneyFamily {
        WhitneyFamily { cubes, omega: self.omega.clone(), config: self.config.clone() }
    }

    /// For every lattice cell, the position in `cubes()` of the cube holding
    /// it, if any.
    pub fn cell_owners(&self) -> Vec<Option<usize>> {
        let lat = self.omega.lattice();
        let mut owner = vec![None; lat.len()];
        for (id, w) in self.cubes.iter().enumerate() {
            if let Some(r) = lat.cell_range(&w.cube.rect()) {
                for c in lat.cells_in(&r) {
                    owner[c] = Some(id);
                }
            }
        }
        owner
    }

    pub fn to_json(&self, report: Option<&WhitneyReport>) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            config: &'a WhitneyConfig,
            cubes: &'a [WhitneyCube],
            #[serde(skip_serializing_if = "Option::is_none")]
            report: Option<&'a WhitneyReport>,
        }
        serde_json::to_string_pretty(&Dump { config: &self.config, cubes: &self.cubes, report })
            .expect("families serialize")
    }

    /// Check the Whitney properties at lattice resolution.
    pub fn verify(&self) -> WhitneyReport {
        verify(self)
    }
}

/// Whitney decomposition of `omega`.
pub fn whitney_decompose(omega: &CellSet, cfg: &WhitneyConfig) -> Result<WhitneyFamily> {
    cfg.validate()?;
    let (jc, _) = omega.lattice().grid_alignment(&cfg.grid).ok_or_else(|| {
        Error::Resolution(format!("the cells of the open set are not cubes of the grid {}", cfg.grid))
    })?;
    if jc < cfg.floor_level {
        return Err(Error::Resolution(format!("cell level {jc} is below the floor level {}", cfg.floor_level)));
    }
    if omega.is_full() {
        return Err(Error::NoExterior);
    }
    let cubes = select(omega, &cfg.grid, Some(cfg.r_w))?;
    Ok(WhitneyFamily { cubes, omega: omega.clone(), config: cfg.clone() })
}

/// Maximal grid cubes contained in `set` (cells must be cubes of `grid`).
pub fn maximal_cubes(set: &CellSet, grid: &ShiftedGrid) -> Result<Vec<WhitneyCube>> {
    if set.is_full() {
        return Err(Error::NoMaximalCube("the set fills the whole lattice".into()));
    }
    select(set, grid, None)
}

/// Top-down selection of maximal grid cubes `Q ⊂ set`, additionally with
/// `r_w Q ⊂ set` above the cell level when `r_w` is given.
fn select(set: &CellSet, grid: &ShiftedGrid, r_w: Option<Rational>) -> Result<Vec<WhitneyCube>> {
    let lat = set.lattice();
    let (jc, k0) = lat
        .grid_alignment(grid)
        .ok_or_else(|| Error::Resolution(format!("the cells of the set are not cubes of the grid {grid}")))?;
    let mut cubes = Vec::new();
    if set.is_empty() {
        return Ok(cubes);
    }
    let n = lat.dim();
    let counter = Counter::new(set);
    let longest = *lat.shape().iter().max().expect("nonempty") as f64;
    let top = jc + longest.log2().ceil() as i32;
    let mut covered = vec![false; lat.len()];
    let last = k0.iter().zip(lat.shape()).map(|(k, s)| k + *s as i64 - 1).collect::<Vec<_>>();
    for j in (jc..=top).rev() {
        // index box of the level-j cubes meeting the lattice
        let mut lo = k0.clone();
        let mut hi = last.clone();
        for jj in jc..j {
            lo = grid.parent_index(jj, &lo);
            hi = grid.parent_index(jj, &hi);
        }
        let counts: Vec<i64> = (0..n).map(|d| hi[d] - lo[d] + 1).collect();
        let total: i64 = counts.iter().product();
        for lin in 0..total {
            let mut rem = lin;
            let mut k = vec![0i64; n];
            for d in (0..n).rev() {
                k[d] = lo[d] + rem % counts[d];
                rem /= counts[d];
            }
            let q = grid.cube(j, &k)?;
            let rect = q.rect();
            if !counter.covers(&rect) {
                continue;
            }
            let first = lat.locate(q.corner()).expect("covered cube lies in the lattice");
            if covered[first] {
                continue;
            }
            let fits = match r_w {
                Some(r) => counter.covers(&q.dilate(r)?.rect()),
                None => true,
            };
            if !fits && j > jc {
                continue;
            }
            let r = lat.cell_range(&rect).expect("cube meets the lattice");
            for c in lat.cells_in(&r) {
                covered[c] = true;
            }
            cubes.push(WhitneyCube { level: j, index: k, cube: q, floor: !fits });
        }
    }
    cubes.sort();
    Ok(cubes)
}

/// Outcome of checking a family against the five Whitney properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyReport {
    pub disjoint_cover: bool,
    pub whitney_condition: bool,
    pub bounded_overlap: bool,
    pub crowd_control: bool,
    /// No strict containments inside one family; see [`check_nested`] for
    /// the comparison across levels.
    pub nested: bool,
    pub max_overlap: usize,
    pub max_crowd: usize,
    pub c_w: usize,
    pub cubes: usize,
    pub floor_cubes: usize,
    pub violations: Vec<String>,
}

impl WhitneyReport {
    pub fn all_pass(&self) -> bool {
        self.disjoint_cover && self.whitney_condition && self.bounded_overlap && self.crowd_control && self.nested
    }
}

fn verify(w: &WhitneyFamily) -> WhitneyReport {
    let omega = &w.omega;
    let lat = omega.lattice();
    let cfg = &w.config;
    let counter = Counter::new(omega);
    let mut violations = Vec::new();

    // disjoint cover
    let mut count = vec![0usize; lat.len()];
    let mut owner = vec![usize::MAX; lat.len()];
    for (id, q) in w.cubes.iter().enumerate() {
        let (lo, hi) = counter.range(&q.cube.rect());
        if !counter.inside_lattice(&lo, &hi) {
            violations.push(format!("cube {} leaves the lattice", q.cube));
            continue;
        }
        let r: Vec<(usize, usize)> = lo.iter().zip(&hi).map(|(a, b)| (*a as usize, *b as usize)).collect();
        for c in lat.cells_in(&r) {
            count[c] += 1;
            owner[c] = id;
        }
    }
    let mut disjoint_cover = violations.is_empty();
    for c in 0..lat.len() {
        let want = usize::from(omega.contains(c));
        if count[c] != want {
            disjoint_cover = false;
            violations.push(format!("cell {c} covered {} times, expected {want}", count[c]));
            break;
        }
    }

    // Whitney condition
    let mut whitney_condition = true;
    for q in &w.cubes {
        let inner = q.cube.dilate(cfg.r_w).map(|c| counter.covers(&c.rect())).unwrap_or(false);
        if !q.floor && !inner {
            whitney_condition = false;
            violations.push(format!("R_W Q not inside the open set for {}", q.cube));
        }
        let outer = q.cube.dilate(cfg.r_w * Rational::int(3)).map(|c| counter.covers(&c.rect())).unwrap_or(true);
        if outer {
            whitney_condition = false;
            violations.push(format!("3 R_W Q misses the complement for {}", q.cube));
        }
    }

    // bounded overlap and crowd control, at lattice resolution
    let nn = Rational::int(cfg.n as i128);
    let mut overlap = vec![0usize; lat.len()];
    let mut bounded_overlap = true;
    let mut max_crowd = 0usize;
    for q in &w.cubes {
        let Ok(big) = q.cube.dilate(nn) else { continue };
        let rect = big.rect();
        if !q.floor && !counter.covers(&rect) {
            bounded_overlap = false;
            violations.push(format!("N Q not inside the open set for {}", q.cube));
        }
        let Some(r) = lat.cell_range(&rect) else { continue };
        let mut seen: Vec<usize> = Vec::new();
        for c in lat.cells_in(&r) {
            overlap[c] += 1;
            if owner[c] != usize::MAX {
                seen.push(owner[c]);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        max_crowd = max_crowd.max(seen.len());
    }
    let max_overlap = overlap.iter().copied().max().unwrap_or(0);

    // within one family: no cube strictly inside another
    let mut nested = true;
    let mut index: HashMap<(i32, Vec<i64>), usize> = HashMap::new();
    for (i, q) in w.cubes.iter().enumerate() {
        index.insert((q.level, q.index.clone()), i);
    }
    let top = w.cubes.iter().map(|c| c.level).max().unwrap_or(0);
    for q in &w.cubes {
        let mut k = q.index.clone();
        for j in q.level..top {
            k = cfg.grid.parent_index(j, &k);
            if index.contains_key(&(j + 1, k.clone())) {
                nested = false;
                violations.push(format!("{} lies strictly inside another cube of the family", q.cube));
                break;
            }
        }
    }

    let c_w = max_overlap.max(max_crowd);
    WhitneyReport {
        disjoint_cover,
        whitney_condition,
        bounded_overlap,
        crowd_control: max_crowd <= c_w,
        nested,
        max_overlap,
        max_crowd,
        c_w,
        cubes: w.cubes.len(),
        floor_cubes: w.floor_count(),
        violations,
    }
}

/// Comparison of the families of `Ω_k ⊃ Ω_l`, `k < l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedReport {
    /// Every cube of the finer family lies in a cube of the coarser one.
    pub compatible: bool,
    /// No coarser cube lies strictly inside a finer cube.
    pub strict_order: bool,
    pub violations: Vec<String>,
}

impl NestedReport {
    pub fn holds(&self) -> bool {
        self.compatible && self.strict_order
    }
}

/// Nested property between the family of `Ω_k` (coarse) and of `Ω_l` (fine), `k < l`.
pub fn check_nested(coarse: &WhitneyFamily, fine: &WhitneyFamily) -> Result<NestedReport> {
    coarse.omega.lattice().ensure_same(fine.omega.lattice())?;
    let lat = coarse.omega.lattice();
    let owner = coarse.cell_owners();
    let mut violations = Vec::new();
    let mut compatible = true;
    let mut strict_order = true;
    for q in &fine.cubes {
        let Some(r) = lat.cell_range(&q.cube.rect()) else { continue };
        let first = lat.cells_in(&r).next().expect("nonempty range");
        match owner[first] {
            Some(id) if coarse.cubes[id].cube.contains(&q.cube) => {}
            _ => {
                compatible = false;
                violations.push(format!("{} (fine) is not inside a coarse cube", q.cube));
            }
        }
        for c in lat.cells_in(&r) {
            if let Some(id) = owner[c] {
                let p = &coarse.cubes[id].cube;
                if q.cube.contains(p) && *p != q.cube {
                    strict_order = false;
                    violations.push(format!("coarse cube {p} lies strictly inside fine cube {}", q.cube));
                    break;
                }
            }
        }
    }
    Ok(NestedReport { compatible, strict_order, violations })
}

/// Field of `M(f nu)` on the grid-native lattice covering `f`'s lattice.
pub fn native_maximal_field(nu: &Measure, f: &LatticeFunction, grid: &ShiftedGrid) -> Result<OperatorField> {
    let native = operators::DyadicTree::native_lattice(grid, f.lattice())?;
    let masses = operators::weighted_masses(f, nu)?;
    let on_native = Measure::lattice(f.lattice().clone(), masses)?.cell_masses(&native, crate::measures::Sampling::Exact);
    let mu = Measure::lattice(native.clone(), on_native)?;
    operators::maximal_field(&LatticeFunction::constant(&native, 1.0)?, &mu, 1)
}

/// Whitney families of `Ω_k = {field > 2^k}` for `k` in `ks`.
pub fn superlevel_families(
    field: &OperatorField,
    cfg: &WhitneyConfig,
    ks: impl IntoIterator<Item = i32>,
) -> Result<BTreeMap<i32, WhitneyFamily>> {
    ks.into_iter()
        .map(|k| {
            let omega = field.superlevel(2f64.powi(k))?;
            Ok((k, whitney_decompose(&omega, cfg)?))
        })
        .collect()
}

/// Whitney families of the superlevel sets `{M(f nu) > 2^k}`.
pub fn superlevel_whitney(
    nu: &Measure,
    f: &LatticeFunction,
    cfg: &WhitneyConfig,
    ks: impl IntoIterator<Item = i32>,
) -> Result<BTreeMap<i32, WhitneyFamily>> {
    let field = native_maximal_field(nu, f, &cfg.grid)?;
    superlevel_families(&field, cfg, ks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn unit_interval_set(k: i32) -> CellSet {
        // window [-1, 2) at spacing 2^-k, Ω = (0, 1)
        let lat = Lattice::window(1, r(-1, 1), r(2, 1), Rational::pow2(-k)).unwrap();
        CellSet::inside_rect(&lat, &Rect::new(vec![r(0, 1)], vec![r(1, 1)]).unwrap())
    }

    #[test]
    fn unit_interval_against_exhaustive_scan() {
        let omega = unit_interval_set(10);
        let cfg = WhitneyConfig::standard(ShiftedGrid::standard(1));
        let fam = whitney_decompose(&omega, &cfg).unwrap();
        let rep = fam.verify();
        assert!(rep.all_pass(), "{:?}", rep.violations);
        // oracle: maximal dyadic intervals I with 4I ⊂ (0,1), by scanning all levels
        let inside = |a: f64, b: f64| a >= 0.0 && b <= 1.0;
        let mut expected = Vec::new();
        for j in -10..=0 {
            let s = 2f64.powi(j);
            for k in 0..(1i64 << -j) {
                let (a, b) = (k as f64 * s, (k + 1) as f64 * s);
                let ok = |a: f64, b: f64| inside(a - 1.5 * (b - a), b + 1.5 * (b - a));
                let pa = (a / (2.0 * s)).floor() * 2.0 * s;
                if ok(a, b) && !ok(pa, pa + 2.0 * s) {
                    expected.push((a, b));
                }
            }
        }
        let got: Vec<(f64, f64)> = fam
            .cubes()
            .iter()
            .filter(|q| !q.floor)
            .map(|q| (q.cube.corner()[0].to_f64(), q.cube.upper()[0].to_f64()))
            .collect();
        let mut got_sorted = got.clone();
        got_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got_sorted, expected);
        // geometric clustering toward the endpoints
        let biggest = fam.cubes().iter().map(|q| q.level).max().unwrap();
        assert_eq!(biggest, -3);
        assert!(fam.floor_count() > 0);
    }

    #[test]
    fn empty_and_full_sets() {
        let lat = Lattice::window(2, r(0, 1), r(1, 1), r(1, 8)).unwrap();
        let cfg = WhitneyConfig::standard(ShiftedGrid::standard(2));
        assert!(whitney_decompose(&CellSet::empty(&lat), &cfg).unwrap().is_empty());
        assert!(matches!(whitney_decompose(&CellSet::full(&lat), &cfg), Err(Error::NoExterior)));
        let odd = Lattice::window(1, r(0, 1), r(1, 1), r(1, 3)).unwrap();
        assert!(matches!(
            whitney_decompose(&CellSet::empty(&odd), &WhitneyConfig::standard(ShiftedGrid::standard(1))),
            Err(Error::Resolution(_))
        ));
        assert!(WhitneyConfig::new(r(5, 2), 3, ShiftedGrid::standard(1)).is_err());
    }

    #[test]
    fn corrupted_family_fails_disjoint_cover() {
        let omega = unit_interval_set(6);
        let cfg = WhitneyConfig::standard(ShiftedGrid::standard(1));
        let fam = whitney_decompose(&omega, &cfg).unwrap();
        let mut cubes = fam.cubes().to_vec();
        let big = cubes.iter_mut().max_by_key(|q| q.level).unwrap();
        big.cube = big.cube.dilate(r(2, 1)).unwrap();
        let rep = fam.with_cubes(cubes).verify();
        assert!(!rep.disjoint_cover);
    }

    #[test]
    fn shifted_grid_in_the_plane() {
        let grid = ShiftedGrid::new(vec![1, 2]).unwrap();
        let rect = Rect::new(vec![r(-2, 1), r(-2, 1)], vec![r(2, 1), r(2, 1)]).unwrap();
        let lat = Lattice::grid_native(&grid, -3, &rect).unwrap();
        let disc = CellSet::from_fn(&lat, |i| {
            let m = lat.midpoint_f64(i);
            m[0] * m[0] + m[1] * m[1] < 1.2
        });
        let fam = whitney_decompose(&disc, &WhitneyConfig::standard(grid)).unwrap();
        let rep = fam.verify();
        assert!(rep.all_pass(), "{:?}", rep.violations);
        assert!(rep.c_w >= 1);
    }

    #[test]
    fn superlevel_families_are_nested() {
        let lat = Lattice::window(1, r(-4, 1), r(4, 1), r(1, 16)).unwrap();
        let f = LatticeFunction::from_fn(&lat, |i| if (40..60).contains(&i) || i == 90 { 1.0 } else { 0.0 }).unwrap();
        let cfg = WhitneyConfig::standard(ShiftedGrid::standard(1));
        let fams = superlevel_whitney(&Measure::lebesgue(1), &f, &cfg, -2..=2).unwrap();
        assert!(fams[&1].is_empty() && fams[&2].is_empty());
        assert!(!fams[&-1].is_empty());
        for k in -2..2 {
            let rep = check_nested(&fams[&k], &fams[&(k + 1)]).unwrap();
            assert!(rep.holds(), "{k}: {:?}", rep.violations);
            assert!(fams[&k].verify().all_pass());
        }
    }
}
