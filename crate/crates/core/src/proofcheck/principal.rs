//! Principal cubes and the parental Carleson packing.

use std::collections::HashMap;

use serde::Serialize;

use super::maximal::GridData;
use super::ProofParams;
use crate::error::Result;
use crate::geometry::{Cube, ShiftedGrid};
use crate::measures::Measure;

/// A cube of the stopping family with its level `k` and `sigma`-average of `f`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WCube {
    pub k: i32,
    pub level: i32,
    pub index: Vec<i64>,
    pub cube: Cube,
    pub average: f64,
    pub sigma: f64,
}

/// Containment forest of a cube family with its principal cubes.
#[derive(Clone, Debug, Serialize)]
pub struct PrincipalForest {
    pub cubes: Vec<WCube>,
    /// Smallest strictly containing cube of the family.
    pub parent: Vec<Option<usize>>,
    pub principal: Vec<bool>,
    /// `P(Q)`: the smallest principal cube containing `Q` (itself if principal).
    pub p_of: Vec<usize>,
    /// Generation of each principal cube (`G_0` are the maximal cubes).
    pub generation: Vec<Option<usize>>,
}

/// The stopping family for the residue class `k0`: cubes of the Whitney
/// families with `k ≡ k0 mod (m + m0)`, a cube repeated across levels kept
/// once with its largest `k`.
fn stopping_family(d: &GridData, p: &ProofParams, k0: u32) -> Result<Vec<WCube>> {
    let period = (p.m + p.m0) as i32;
    let mut by_cube: HashMap<(i32, Vec<i64>), WCube> = HashMap::new();
    for (&k, fam) in &d.families {
        if k.rem_euclid(period) != k0 as i32 {
            continue;
        }
        for q in fam.cubes() {
            let key = (q.level, q.index.clone());
            if by_cube.get(&key).is_some_and(|w| w.k >= k) {
                continue;
            }
            let sigma = d.sigma_m.mass(&q.cube)?;
            let nu: f64 = d.cube_cells(&q.cube).iter().map(|c| d.nu[*c]).sum();
            let average = if sigma > 0.0 { nu / sigma } else { 0.0 };
            by_cube.insert(key, WCube { k, level: q.level, index: q.index.clone(), cube: q.cube.clone(), average, sigma });
        }
    }
    let mut cubes: Vec<WCube> = by_cube.into_values().collect();
    cubes.sort_by(|a, b| b.level.cmp(&a.level).then_with(|| a.cube.cmp(&b.cube)));
    Ok(cubes)
}

/// Principal cubes with constant `eta`: every maximal cube is principal, and
/// a cube is principal when its average exceeds `eta` times the average of
/// the principal cube above it.
pub fn build_principal_cubes(cubes: Vec<WCube>, grid: &ShiftedGrid, eta: f64) -> PrincipalForest {
    let mut cubes = cubes;
    cubes.sort_by(|a, b| b.level.cmp(&a.level).then_with(|| a.cube.cmp(&b.cube)));
    let pos: HashMap<(i32, Vec<i64>), usize> =
        cubes.iter().enumerate().map(|(i, c)| ((c.level, c.index.clone()), i)).collect();
    let top = cubes.first().map_or(0, |c| c.level);
    let parent: Vec<Option<usize>> = cubes
        .iter()
        .map(|c| {
            let (mut j, mut k) = (c.level, c.index.clone());
            while j < top {
                k = grid.parent_index(j, &k);
                j += 1;
                if let Some(&i) = pos.get(&(j, k.clone())) {
                    return Some(i);
                }
            }
            None
        })
        .collect();
    let n = cubes.len();
    let mut principal = vec![false; n];
    let mut p_of = vec![0; n];
    let mut generation = vec![None; n];
    // parents come first in the level order
    for i in 0..n {
        match parent[i] {
            None => {
                principal[i] = true;
                p_of[i] = i;
                generation[i] = Some(0);
            }
            Some(up) => {
                let pu = p_of[up];
                if cubes[i].average > eta * cubes[pu].average {
                    principal[i] = true;
                    p_of[i] = i;
                    generation[i] = generation[pu].map(|g| g + 1);
                } else {
                    p_of[i] = pu;
                }
            }
        }
    }
    PrincipalForest { cubes, parent, principal, p_of, generation }
}

impl PrincipalForest {
    pub fn principal_count(&self) -> usize {
        self.principal.iter().filter(|p| **p).count()
    }

    pub fn generations(&self) -> usize {
        self.generation.iter().flatten().map(|g| g + 1).max().unwrap_or(0)
    }

    /// Violations of (i) `P(Q) = Q_u ⟹ A(Q) <= eta A(Q_u)` and of (ii)
    /// `A(Q_u) > eta A(Q_u')` for principal `Q_u ⊊ Q_u'`, over all pairs.
    pub fn check_properties(&self, eta: f64) -> (usize, usize) {
        let mut bad_i = 0;
        let mut bad_ii = 0;
        for i in 0..self.cubes.len() {
            let pu = self.p_of[i];
            if !self.principal[i] && self.cubes[i].average > eta * self.cubes[pu].average {
                bad_i += 1;
            }
            // principal pairs: compare with every principal ancestor
            if self.principal[i] {
                let mut up = self.parent[i];
                while let Some(a) = up {
                    if self.principal[a] && self.cubes[i].average <= eta * self.cubes[a].average {
                        bad_ii += 1;
                    }
                    up = self.parent[a];
                }
            }
        }
        (bad_i, bad_ii)
    }

    /// `Σ_{Gamma} A_u^2 |Q_u|_sigma`.
    pub fn energy(&self) -> f64 {
        self.cubes
            .iter()
            .zip(&self.principal)
            .filter(|(_, p)| **p)
            .map(|(c, _)| c.average * c.average * c.sigma)
            .sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PackingReport {
    pub d: f64,
    pub c_w: usize,
    pub tops: usize,
    /// Principal cubes that are themselves parentally doubling.
    pub doubling_tops: usize,
    pub violations: usize,
    /// Largest `Σ_{Q^1} |Q|_sigma / |Q_u|_sigma`; the bound is 2.
    pub worst_ratio: f64,
}

impl PackingReport {
    fn absorb(&mut self, o: PackingReport) {
        self.d = self.d.max(o.d);
        self.c_w = self.c_w.max(o.c_w);
        self.tops += o.tops;
        self.doubling_tops += o.doubling_tops;
        self.violations += o.violations;
        self.worst_ratio = self.worst_ratio.max(o.worst_ratio);
    }
}

fn parentally_doubling(sigma: &Measure, q: &Cube, own: f64, d: f64) -> Result<bool> {
    let mut best = f64::INFINITY;
    for p in q.parents() {
        best = best.min(sigma.mass(&p)?);
    }
    Ok(best <= d * own)
}

/// For the principal cube `top`: the cubes `Q` with `P(Q) = top` that lie
/// under no parentally doubling cube of that subfamily form `Q^1`; checks
/// `Σ_{Q^1} |Q|_sigma <= 2 |top|_sigma`.
pub fn check_parental_packing(forest: &PrincipalForest, top: usize, sigma: &Measure, d: f64) -> Result<PackingReport> {
    let members: Vec<usize> = (0..forest.cubes.len()).filter(|i| forest.p_of[*i] == top).collect();
    let mut doubling = HashMap::new();
    for &i in &members {
        let c = &forest.cubes[i];
        doubling.insert(i, parentally_doubling(sigma, &c.cube, c.sigma, d)?);
    }
    let mut sum = 0.0;
    for &i in &members {
        // the chain from i up to top stays inside the subfamily
        let mut at = Some(i);
        let mut covered = false;
        while let Some(a) = at {
            if doubling[&a] {
                covered = true;
                break;
            }
            if a == top {
                break;
            }
            at = forest.parent[a];
        }
        if !covered {
            sum += forest.cubes[i].sigma;
        }
    }
    let own = forest.cubes[top].sigma;
    let ratio = if own > 0.0 { sum / own } else { 0.0 };
    Ok(PackingReport {
        d,
        c_w: 0,
        tops: 1,
        doubling_tops: usize::from(doubling[&top]),
        violations: usize::from(sum > 2.0 * own * (1.0 + 1e-12)),
        worst_ratio: ratio,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PrincipalReport {
    pub forests: usize,
    pub cubes: usize,
    pub principal: usize,
    pub generations: usize,
    pub prop_i_violations: usize,
    pub prop_ii_violations: usize,
    /// Largest `Σ_Gamma A^2 |Q|_sigma / ‖f‖²_{L²(sigma)}` over the forests.
    pub energy_ratio: f64,
    pub packing: PackingReport,
}

impl PrincipalReport {
    pub fn pass(&self) -> bool {
        self.prop_i_violations == 0 && self.prop_ii_violations == 0 && self.packing.violations == 0
    }

    pub fn merge(parts: impl IntoIterator<Item = PrincipalReport>) -> PrincipalReport {
        let mut out = PrincipalReport::default();
        for p in parts {
            out.forests += p.forests;
            out.cubes += p.cubes;
            out.principal += p.principal;
            out.generations = out.generations.max(p.generations);
            out.prop_i_violations += p.prop_i_violations;
            out.prop_ii_violations += p.prop_ii_violations;
            out.energy_ratio = out.energy_ratio.max(p.energy_ratio);
            out.packing.absorb(p.packing);
        }
        out
    }
}

/// Principal cubes, properties (i)/(ii), energy and parental packing for
/// every requested residue class `k0`.
pub fn principal_suite(d: &GridData, p: &ProofParams) -> Result<PrincipalReport> {
    let dd = p.d.unwrap_or(2.0 * d.c_w as f64);
    let classes: Vec<u32> = match p.k0 {
        Some(k0) => vec![k0],
        None => (0..p.m + p.m0).collect(),
    };
    let mut out = PrincipalReport { packing: PackingReport { d: dd, c_w: d.c_w, ..Default::default() }, ..Default::default() };
    for k0 in classes {
        let family = stopping_family(d, p, k0)?;
        if family.is_empty() {
            continue;
        }
        let forest = build_principal_cubes(family, &d.grid, p.eta);
        let (bad_i, bad_ii) = forest.check_properties(p.eta);
        out.forests += 1;
        out.cubes += forest.cubes.len();
        out.principal += forest.principal_count();
        out.generations = out.generations.max(forest.generations());
        out.prop_i_violations += bad_i;
        out.prop_ii_violations += bad_ii;
        if d.f_norm_sq > 0.0 {
            out.energy_ratio = out.energy_ratio.max(forest.energy() / d.f_norm_sq);
        }
        for top in (0..forest.cubes.len()).filter(|i| forest.principal[*i]) {
            out.packing.absorb(check_parental_packing(&forest, top, &d.sigma_m, dd)?);
        }
    }
    Ok(out)
}
