//! Level sets, maximum principle and linearizations of the stopping-time
//! argument for the maximal function.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{Instance, ProofParams};
use crate::constants::{a2, CubeFamily};
use crate::error::{Error, Result};
use crate::geometry::{Cube, Rational, ShiftedGrid};
use crate::measures::{CellSet, Lattice, LatticeFunction, Measure, Sampling};
use crate::operators::{maximal_field, weighted_masses, DyadicTree};
use crate::whitney::{maximal_cubes, whitney_decompose, WhitneyConfig, WhitneyCube, WhitneyFamily};

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

/// Everything one grid `D^gamma` needs: the instance moved to a lattice of
/// grid cubes, `M(f sigma)`, `M^{D^gamma}(f sigma)` and the Whitney
/// families of `Omega_k = {M(f sigma) > 2^k}`.
#[derive(Clone, Debug)]
pub struct GridData {
    pub grid: ShiftedGrid,
    pub lattice: Lattice,
    /// Cell masses of `f sigma`.
    pub nu: Vec<f64>,
    pub sigma_m: Measure,
    pub omega_m: Measure,
    pub mfull: Vec<f64>,
    pub mgamma: Vec<f64>,
    pub families: BTreeMap<i32, WhitneyFamily>,
    pub c_w: usize,
    /// `‖f‖²_{L²(sigma)}` on the instance lattice.
    pub f_norm_sq: f64,
}

impl GridData {
    pub fn prepare(inst: &Instance, grid: &ShiftedGrid, params: &ProofParams) -> Result<GridData> {
        let native = DyadicTree::native_lattice(grid, &inst.lattice)?;
        let nu_own = weighted_masses(&inst.f, &inst.sigma)?;
        let nu = Measure::lattice(inst.lattice.clone(), nu_own)?.cell_masses(&native, Sampling::Exact);
        let sigma_m = Measure::lattice(native.clone(), inst.sigma.cell_masses(&native, Sampling::Exact))?;
        let omega_m = Measure::lattice(native.clone(), inst.omega.cell_masses(&native, Sampling::Exact))?;
        let one = LatticeFunction::constant(&native, 1.0)?;
        let mfull = maximal_field(&one, &Measure::lattice(native.clone(), nu.clone())?, 1)?.values().to_vec();
        let tree = DyadicTree::new(grid, &native, &nu, DyadicTree::default_top(&native))?;
        let n = native.dim() as i32;
        let mgamma = tree.field(|j| Rational::pow2(-j * n).to_f64());

        // levels whose superlevel set avoids the outer thirds of the lattice
        let shape = native.shape().to_vec();
        let band = |i: usize| native.multi(i).iter().zip(&shape).any(|(a, s)| *a < s / 3 || *a >= s - s / 3);
        let band_max = (0..native.len()).filter(|i| band(*i)).map(|i| mfull[i]).fold(0.0, f64::max);
        let top = mfull.iter().cloned().fold(0.0, f64::max);
        let mut families = BTreeMap::new();
        let mut c_w = 1;
        if top > 0.0 {
            let mut k_lo = if band_max > 0.0 { band_max.log2().ceil() as i32 } else { params.n_floor };
            while pow2(k_lo) < band_max {
                k_lo += 1;
            }
            k_lo = k_lo.max(params.n_floor);
            let mut k_hi = top.log2().ceil() as i32;
            while pow2(k_hi) >= top {
                k_hi -= 1;
            }
            let cfg = WhitneyConfig::new(params.r_w, 3, grid.clone())?;
            for k in k_lo..=k_hi {
                let omega = CellSet::from_fn(&native, |i| mfull[i] > pow2(k));
                let fam = whitney_decompose(&omega, &cfg)?;
                c_w = c_w.max(fam.verify().c_w);
                families.insert(k, fam);
            }
        }
        Ok(GridData {
            grid: grid.clone(),
            lattice: native,
            nu,
            sigma_m,
            omega_m,
            mfull,
            mgamma,
            families,
            c_w,
            f_norm_sq: inst.f.l2_norm_sq(&inst.sigma)?,
        })
    }

    pub fn cell_set(&self, cells: &[usize]) -> CellSet {
        let mut s = CellSet::empty(&self.lattice);
        for c in cells {
            s.insert(*c);
        }
        s
    }

    pub(crate) fn masses(mu: &Measure) -> &[f64] {
        mu.as_lattice().expect("grid data holds lattice measures").masses()
    }

    /// Cells of a grid cube inside the lattice, in the cube's row-major order.
    pub(crate) fn cube_cells(&self, q: &Cube) -> Vec<usize> {
        match self.lattice.cell_range(&q.rect()) {
            Some(r) => self.lattice.cells_in(&r).collect(),
            None => Vec::new(),
        }
    }

    /// `E = Q ∩ ({M^{D^gamma} > 2^{k+m}} \ {M > 2^{k+m+m0}})`.
    fn e_cells(&self, k: i32, cells: &[usize], p: &ProofParams) -> Vec<usize> {
        let hi = pow2(k + p.m as i32);
        let top = pow2(k + (p.m + p.m0) as i32);
        cells.iter().copied().filter(|c| self.mgamma[*c] > hi && self.mfull[*c] <= top).collect()
    }

    /// For each cell of `q`, `max` of grid averages of the masses over the
    /// grid cubes between the cell and `q`.
    fn local_field(&self, q: &WhitneyCube, cells: &[usize], masses: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
        let h = self.lattice.spacing();
        let per_side = (q.cube.side() / h).floor() as usize;
        let sub = Lattice::new(q.cube.corner().to_vec(), h, vec![per_side; self.lattice.dim()])?;
        let local: Vec<f64> = cells.iter().map(|c| masses(*c)).collect();
        let tree = DyadicTree::new(&self.grid, &sub, &local, q.level)?;
        let n = self.lattice.dim() as i32;
        Ok(tree.field(|j| Rational::pow2(-j * n).to_f64()))
    }

    /// Cells outside `q` where `M^{D^gamma}` of a measure of total mass `g`
    /// carried by `q` exceeds `t`: the largest ancestor with `g / |A| > t`.
    fn escape(&self, q: &WhitneyCube, g: f64, t: f64) -> Result<Vec<usize>> {
        let n = self.lattice.dim() as i32;
        let (mut j, mut k) = (q.level, q.index.clone());
        let mut best = None;
        loop {
            k = self.grid.parent_index(j, &k);
            j += 1;
            if g * Rational::pow2(-j * n).to_f64() <= t || j > self.grid.scale_bound() {
                break;
            }
            best = Some((j, k.clone()));
        }
        match best {
            Some((j, k)) => Ok(self.cube_cells(&self.grid.cube(j, &k)?)),
            None => Ok(Vec::new()),
        }
    }

    /// `M^{D^gamma}(mu)(x)` for `mu` carried by `q` with total `g` and a
    /// cell `x` outside `q`.
    fn outside_value(&self, q: &WhitneyCube, g: f64, x: usize) -> Result<f64> {
        let n = self.lattice.dim() as i32;
        let mid = self.lattice.midpoint(x);
        let (mut j, mut k) = (q.level, q.index.clone());
        loop {
            k = self.grid.parent_index(j, &k);
            j += 1;
            if self.grid.cube(j, &k)?.contains_point(&mid) {
                return Ok(g * Rational::pow2(-j * n).to_f64());
            }
            if j > self.grid.scale_bound() {
                return Ok(0.0);
            }
        }
    }
}

/// Example of a point of `E` where the maximum principle fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxPrincipleWitness {
    pub grid: String,
    pub k: i32,
    pub cube: Cube,
    pub point: Vec<Rational>,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub cubes: usize,
    pub cubes_with_e: usize,
    pub points: usize,
    pub violations: usize,
    /// Smallest `M^{D}(1_Q f sigma)(x) / 2^{k+m-1}` over tested points.
    pub worst_margin: Option<f64>,
    pub witness: Option<MaxPrincipleWitness>,
}

impl MaxPrincipleReport {
    pub fn merge(parts: impl IntoIterator<Item = MaxPrincipleReport>) -> MaxPrincipleReport {
        let mut out = MaxPrincipleReport::default();
        for p in parts {
            out.cubes += p.cubes;
            out.cubes_with_e += p.cubes_with_e;
            out.points += p.points;
            out.violations += p.violations;
            out.worst_margin = match (out.worst_margin, p.worst_margin) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            if out.witness.is_none() {
                out.witness = p.witness;
            }
        }
        out
    }
}

/// Checks `2^{k+m-1} < M^{D^gamma}(1_Q f sigma)(x)` at every cell of every `E_j^k`.
pub fn check_max_principle_maximal(d: &GridData, p: &ProofParams) -> Result<MaxPrincipleReport> {
    let mut rep = MaxPrincipleReport::default();
    for (&k, fam) in &d.families {
        for q in fam.cubes() {
            rep.cubes += 1;
            let cells = d.cube_cells(&q.cube);
            let e = d.e_cells(k, &cells, p);
            if e.is_empty() {
                continue;
            }
            rep.cubes_with_e += 1;
            let field = d.local_field(q, &cells, |c| d.nu[c])?;
            let t = pow2(k + p.m as i32 - 1);
            for (pos, c) in cells.iter().enumerate() {
                if !e.contains(c) {
                    continue;
                }
                rep.points += 1;
                let v = field[pos];
                rep.worst_margin = Some(rep.worst_margin.map_or(v / t, |w: f64| w.min(v / t)));
                if v <= t {
                    rep.violations += 1;
                    if rep.witness.is_none() {
                        rep.witness = Some(MaxPrincipleWitness {
                            grid: d.grid.to_string(),
                            k,
                            cube: q.cube.clone(),
                            point: d.lattice.midpoint(*c),
                            value: v,
                            threshold: t,
                        });
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Case of a Whitney cube in the three-way split of the argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    Pi1,
    Pi2,
    Pi3,
}

/// Sets attached to one Whitney cube `Q_j^k`; cell lists are sorted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeSets {
    pub k: i32,
    pub cube: WhitneyCube,
    pub e: Vec<usize>,
    pub h: Vec<usize>,
    pub h_in: Vec<usize>,
    pub h_out: Vec<usize>,
    pub case: Case,
    /// `|Q|_sigma^{-1} ∫_Q f dsigma` (zero when `|Q|_sigma = 0`).
    pub average: f64,
    pub omega_e: f64,
    pub omega_3q: f64,
    /// Cells of `H` outside `H_in ∪ H_out`.
    pub uncovered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCubeSets {
    pub grid: ShiftedGrid,
    pub m: u32,
    pub m0: u32,
    pub cubes: Vec<CubeSets>,
}

impl LevelCubeSets {
    pub fn case_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in &self.cubes {
            c[s.case as usize] += 1;
        }
        c
    }

    pub fn h_cover_violations(&self) -> usize {
        self.cubes.iter().filter(|s| s.uncovered > 0).count()
    }
}

fn superset(field: &[f64], cells: &[usize], t: f64, escaped: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = cells.iter().zip(field).filter(|(_, v)| **v > t).map(|(c, _)| *c).collect();
    out.extend(escaped);
    out.sort_unstable();
    out.dedup();
    out
}

fn omega_of(omega: &[f64], cells: &[usize]) -> f64 {
    cells.iter().map(|c| omega[*c]).sum()
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

fn cube_sets(d: &GridData, k: i32, q: &WhitneyCube, p: &ProofParams) -> Result<CubeSets> {
    let cells = d.cube_cells(&q.cube);
    let mut e = d.e_cells(k, &cells, p);
    e.sort_unstable();
    let top = pow2(k + (p.m + p.m0) as i32);
    let inside = |c: usize| d.mfull[c] > top;
    let full = d.local_field(q, &cells, |c| d.nu[c])?;
    let fin = d.local_field(q, &cells, |c| if inside(c) { d.nu[c] } else { 0.0 })?;
    let fout = d.local_field(q, &cells, |c| if inside(c) { 0.0 } else { d.nu[c] })?;
    let g_full: f64 = cells.iter().map(|c| d.nu[*c]).sum();
    let g_in: f64 = cells.iter().filter(|c| inside(**c)).map(|c| d.nu[*c]).sum();
    let t_h = pow2(k + p.m as i32 - 1);
    let t_io = pow2(k + p.m as i32 - 2);
    let h = superset(&full, &cells, t_h, d.escape(q, g_full, t_h)?);
    let h_in = superset(&fin, &cells, t_io, d.escape(q, g_in, t_io)?);
    let h_out = superset(&fout, &cells, t_io, d.escape(q, g_full - g_in, t_io)?);
    let uncovered = h.iter().filter(|c| h_in.binary_search(c).is_err() && h_out.binary_search(c).is_err()).count();

    let omega = GridData::masses(&d.omega_m);
    let omega_e = omega_of(omega, &e);
    let omega_3q = d.omega_m.mass(&q.cube.dilate(Rational::int(3))?)?;
    let case = if omega_e < p.beta * omega_3q {
        Case::Pi1
    } else if omega_of(omega, &intersect(&e, &h_out)) >= 0.5 * omega_e {
        Case::Pi2
    } else if omega_of(omega, &intersect(&e, &h_in)) >= 0.5 * omega_e {
        Case::Pi3
    } else {
        return Err(Error::Exhaustiveness(format!(
            "cube {} at level k = {k} on {}: neither half of E lies in H_in or H_out",
            q.cube, d.grid
        )));
    };
    let sigma_q = d.sigma_m.mass(&q.cube)?;
    let average = if sigma_q > 0.0 { g_full / sigma_q } else { 0.0 };
    Ok(CubeSets { k, cube: q.clone(), e, h, h_in, h_out, case, average, omega_e, omega_3q, uncovered })
}

/// Builds `E`, `H`, `H_in`, `H_out` and the case label of every Whitney cube.
pub fn build_level_sets(d: &GridData, p: &ProofParams) -> Result<LevelCubeSets> {
    let work: Vec<(i32, &WhitneyCube)> =
        d.families.iter().flat_map(|(k, fam)| fam.cubes().iter().map(move |q| (*k, q))).collect();
    let cubes = work.par_iter().map(|(k, q)| cube_sets(d, *k, q, p)).collect::<Result<Vec<_>>>()?;
    Ok(LevelCubeSets { grid: d.grid.clone(), m: p.m, m0: p.m0, cubes })
}

/// `L(h mu)(x) = Σ_l avg_{I(l)}(h mu) 1_{I(l)}(x)` over the maximal grid
/// cubes `I(l)` of a set.
#[derive(Clone, Debug)]
pub struct Linearization {
    lattice: Lattice,
    cubes: Vec<WhitneyCube>,
    cells: Vec<Vec<usize>>,
}

/// Maximal grid cubes of `h`; a set filling the lattice has none.
pub fn build_linearization(h: &CellSet, grid: &ShiftedGrid) -> Result<Linearization> {
    let lat = h.lattice().clone();
    let cubes = maximal_cubes(h, grid)?;
    let cells = cubes
        .iter()
        .map(|q| lat.cell_range(&q.cube.rect()).map(|r| lat.cells_in(&r).collect()).unwrap_or_default())
        .collect();
    Ok(Linearization { lattice: lat, cubes, cells })
}

impl Linearization {
    pub fn cubes(&self) -> Vec<Cube> {
        self.cubes.iter().map(|q| q.cube.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `mu(I) / |I|` for every cube, `mu` given by cell masses.
    pub fn averages(&self, masses: &[f64]) -> Vec<f64> {
        self.cubes
            .iter()
            .zip(&self.cells)
            .map(|(q, cells)| cells.iter().map(|c| masses[*c]).sum::<f64>() / q.cube.volume_f64())
            .collect()
    }

    /// The linearization evaluated at every cell.
    pub fn evaluate(&self, masses: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.lattice.len()];
        for (avg, cells) in self.averages(masses).into_iter().zip(&self.cells) {
            for c in cells {
                out[*c] = avg;
            }
        }
        out
    }

    /// Pairwise disjointness of the cubes, by cell counts.
    pub fn disjoint(&self) -> bool {
        let mut seen = vec![false; self.lattice.len()];
        for cells in &self.cells {
            for c in cells {
                if std::mem::replace(&mut seen[*c], true) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ComparabilityReport {
    pub sets: usize,
    pub cubes: usize,
    pub disjoint_violations: usize,
    /// Cells where `L > M^{D}`.
    pub dominated_violations: usize,
    /// Cubes whose average does not exceed `2^{k+m-2}`.
    pub lower_violations: usize,
    /// Largest `avg_I / 2^{k+m-2}`; at most `2^n` by maximality.
    pub max_upper_ratio: f64,
    pub upper_bound: f64,
}

impl ComparabilityReport {
    pub fn pass(&self) -> bool {
        self.disjoint_violations == 0
            && self.dominated_violations == 0
            && self.lower_violations == 0
            && self.max_upper_ratio <= self.upper_bound * (1.0 + 1e-12)
    }

    pub fn merge(parts: impl IntoIterator<Item = ComparabilityReport>) -> ComparabilityReport {
        let mut out = ComparabilityReport::default();
        for p in parts {
            out.sets += p.sets;
            out.cubes += p.cubes;
            out.disjoint_violations += p.disjoint_violations;
            out.dominated_violations += p.dominated_violations;
            out.lower_violations += p.lower_violations;
            out.max_upper_ratio = out.max_upper_ratio.max(p.max_upper_ratio);
            out.upper_bound = out.upper_bound.max(p.upper_bound);
        }
        out
    }
}

/// Linearizes `1_{Q \ Omega_{k+m+m0}} f sigma` over the maximal cubes of
/// `H_out` for every cube and checks `2^{k+m-2} < L <= M^{D}` with the
/// upper ratio recorded.
pub fn check_linearization_comparability(d: &GridData, sets: &LevelCubeSets) -> Result<ComparabilityReport> {
    let n = d.lattice.dim();
    let mut rep = ComparabilityReport { upper_bound: 2f64.powi(n as i32), ..Default::default() };
    for s in &sets.cubes {
        if s.h_out.is_empty() {
            continue;
        }
        let cells = d.cube_cells(&s.cube.cube);
        let top = pow2(s.k + (sets.m + sets.m0) as i32);
        let mut g = vec![0.0; d.lattice.len()];
        for c in &cells {
            if d.mfull[*c] <= top {
                g[*c] = d.nu[*c];
            }
        }
        let lin = build_linearization(&d.cell_set(&s.h_out), &d.grid)?;
        rep.sets += 1;
        rep.cubes += lin.cubes.len();
        if !lin.disjoint() {
            rep.disjoint_violations += 1;
        }
        let t = pow2(s.k + sets.m as i32 - 2);
        let field_in_q = d.local_field(&s.cube, &cells, |c| g[c])?;
        let g_total: f64 = cells.iter().map(|c| g[*c]).sum();
        for (avg, icells) in lin.averages(&g).into_iter().zip(&lin.cells) {
            if avg <= t {
                rep.lower_violations += 1;
            }
            rep.max_upper_ratio = rep.max_upper_ratio.max(avg / t);
            for c in icells {
                let md = match cells.iter().position(|x| x == c) {
                    Some(pos) => field_in_q[pos],
                    None => d.outside_value(&s.cube, g_total, *c)?,
                };
                if avg > md * (1.0 + 1e-12) {
                    rep.dominated_violations += 1;
                }
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct A2ljkReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `(rhs - lhs) / rhs` over checks with `rhs > 0`.
    pub worst_slack: Option<f64>,
}

impl A2ljkReport {
    pub fn merge(parts: impl IntoIterator<Item = A2ljkReport>) -> A2ljkReport {
        let mut out = A2ljkReport::default();
        for p in parts {
            out.checked += p.checked;
            out.violations += p.violations;
            out.worst_slack = match (out.worst_slack, p.worst_slack) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        out
    }
}

/// `∫_Q L(1_Q omega)^2 dsigma <= A_2 |Q|_omega`, with `A_2` taken over the
/// cubes of `lin`. The left side is summed cell by cell; the right side
/// comes from the measures' prefix tables.
pub fn check_a2ljk(q: &Cube, lin: &Linearization, sigma: &Measure, omega: &Measure) -> Result<A2ljkReport> {
    if lin.is_empty() {
        return Ok(A2ljkReport::default());
    }
    let (Some(ls), Some(lo)) = (sigma.as_lattice(), omega.as_lattice()) else {
        return Err(Error::InvalidParameter("the a2ljk check needs lattice measures".into()));
    };
    ls.lattice().ensure_same(&lin.lattice)?;
    lo.lattice().ensure_same(&lin.lattice)?;
    let in_q: Vec<bool> = (0..lin.lattice.len()).map(|i| q.contains(&lin.lattice.cell_cube(i))).collect();
    let mut lhs = 0.0;
    for (iq, cells) in lin.cubes.iter().zip(&lin.cells) {
        let w: f64 = cells.iter().filter(|c| in_q[**c]).map(|c| lo.masses()[*c]).sum();
        let s: f64 = cells.iter().filter(|c| in_q[**c]).map(|c| ls.masses()[*c]).sum();
        let avg = w / iq.cube.volume_f64();
        lhs += avg * avg * s;
    }
    let a2v = a2(sigma, omega, &CubeFamily::explicit(lin.cubes())?)?.value;
    let rhs = a2v * omega.mass(q)?;
    let violation = lhs > rhs * (1.0 + 1e-9);
    Ok(A2ljkReport {
        checked: 1,
        violations: usize::from(violation),
        worst_slack: (rhs > 0.0).then(|| (rhs - lhs) / rhs),
    })
}
