//! Executable checks of the stopping-time argument for the maximal function
//! and of the good-λ argument for fractional integrals, on concrete
//! instances.
//!
//! Every check is existential: it corroborates or falsifies the displayed
//! inequalities on the supplied data. Reports carry the instance seed.

mod fractional;
mod instance;
mod maximal;
mod principal;

use serde::{Deserialize, Serialize};

pub use fractional::{
    annuli_epsilon, check_frac_max_principle, check_good_lambda, check_tail_bound, classify_efg, verify_fractional,
    EfgClass, EfgCube, EfgReport, FracContext, FracParams, FracPrincipleReport, FractionalReport, GoodLambdaReport,
    GoodLambdaRow, TailReport, TailRow,
};
pub use instance::{fractional_instance, maximal_instance, Generator, Instance, InstanceSpec};
pub use maximal::{
    build_level_sets, build_linearization, check_a2ljk, check_linearization_comparability,
    check_max_principle_maximal, A2ljkReport, Case, ComparabilityReport, CubeSets, GridData, LevelCubeSets,
    Linearization, MaxPrincipleReport, MaxPrincipleWitness,
};
pub use principal::{
    build_principal_cubes, check_parental_packing, principal_suite, PackingReport, PrincipalForest,
    PrincipalReport, WCube,
};

use crate::error::{Error, Result};
use crate::geometry::{cover_cube, Cube, Rational};

/// Parameters of the maximal-function stopping-time argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofParams {
    pub m: u32,
    pub m0: u32,
    pub beta: f64,
    pub eta: f64,
    /// Parental doubling constant; `None` means `2 C_W` with `C_W` measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Residue class of `k` modulo `m + m0`; `None` runs every class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<u32>,
    /// Lowest level `k` considered.
    pub n_floor: i32,
    /// Whitney dilation of the superlevel decompositions.
    pub r_w: Rational,
}

impl ProofParams {
    /// `⌈1 + log2(2 (3 R_W)^n)⌉`.
    pub fn m_bound(n: usize, r_w: Rational) -> u32 {
        (1.0 + (2.0 * (3.0 * r_w.to_f64()).powi(n as i32)).log2()).ceil() as u32
    }

    /// Smallest `m0` with `3^n C_n 2^{-2 m0} <= 1/2`.
    pub fn m0_for(n: usize, c_n: f64) -> u32 {
        let need = 2.0 * 3f64.powi(n as i32) * c_n;
        (need.log2() / 2.0).ceil().max(1.0) as u32
    }

    pub fn defaults(n: usize) -> Self {
        let r_w = Rational::int(4);
        ProofParams {
            m: Self::m_bound(n, r_w) + 1,
            m0: Self::m0_for(n, cover_constant(n)),
            beta: 0.125,
            eta: 4.0,
            d: None,
            k0: None,
            n_floor: -40,
            r_w,
        }
    }

    /// Hard constraints. Values of `m` below the bound are accepted (they
    /// drive negative controls) and listed by [`ProofParams::warnings`].
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if self.m < 1 || self.m0 < 1 {
            return bad(format!("m = {}, m0 = {} must be at least 1", self.m, self.m0));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} outside (0, 1)", self.beta));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return bad(format!("eta = {} must exceed 1", self.eta));
        }
        if let Some(d) = self.d {
            if !(d > 1.0 && d.is_finite()) {
                return bad(format!("D = {d} must exceed 1"));
            }
        }
        if let Some(k0) = self.k0 {
            if k0 >= self.m + self.m0 {
                return bad(format!("k0 = {k0} outside [0, m + m0 - 1]"));
            }
        }
        if self.r_w < Rational::int(3) {
            return bad(format!("R_W = {} below 3", self.r_w));
        }
        Ok(())
    }

    pub fn warnings(&self, n: usize) -> Vec<String> {
        let bound = Self::m_bound(n, self.r_w);
        let mut out = Vec::new();
        if self.m < bound {
            out.push(format!("m = {} is below the bound {bound}; the maximum principle may fail", self.m));
        }
        if self.m0 < Self::m0_for(n, cover_constant(n)) {
            out.push(format!("m0 = {} is below the absorption bound", self.m0));
        }
        out
    }
}

/// Measured one-third-trick constant: the largest `(side Q' / side Q)^n`
/// over a fixed sample of cubes `Q`, with `Q'` the cover from
/// [`cover_cube`].
pub fn cover_constant(n: usize) -> f64 {
    let sides = [(1, 8), (1, 5), (1, 3), (1, 2), (5, 7), (1, 1), (3, 2)];
    let mut worst: f64 = 1.0;
    for (a, b) in sides {
        let side = Rational::new(a, b).expect("nonzero denominator");
        for i in 0..12i128 {
            for j in 0..if n == 1 { 1 } else { 12 } {
                let mut corner = vec![Rational::new(i, 11).expect("nonzero")];
                if n > 1 {
                    corner.push(Rational::new(j, 13).expect("nonzero"));
                }
                corner.resize(n, Rational::new(1, 17).expect("nonzero"));
                let q = Cube::new(corner, side).expect("positive side");
                if let Ok(rep) = cover_cube(&q) {
                    worst = worst.max(rep.side_ratio.powi(n as i32));
                }
            }
        }
    }
    worst
}

/// Full report of the maximal-function suite on one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalReport {
    pub instance: String,
    pub seed: u64,
    pub params: ProofParams,
    pub warnings: Vec<String>,
    pub grids: usize,
    pub levels: usize,
    pub whitney_cubes: usize,
    pub c_w: usize,
    pub max_principle: MaxPrincipleReport,
    /// Set when the case analysis halted on an exhaustiveness violation.
    pub halted: Option<String>,
    pub cases: Option<[usize; 3]>,
    pub h_cover_violations: usize,
    pub comparability: Option<ComparabilityReport>,
    pub a2ljk: Option<A2ljkReport>,
    pub principal: Option<PrincipalReport>,
}

impl MaximalReport {
    pub fn pass(&self) -> bool {
        self.max_principle.violations == 0
            && self.halted.is_none()
            && self.h_cover_violations == 0
            && self.comparability.as_ref().is_some_and(|c| c.pass())
            && self.a2ljk.as_ref().is_some_and(|a| a.violations == 0)
            && self.principal.as_ref().is_some_and(|p| p.pass())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Runs every maximal-function check on `inst` over all `3^n` grids.
pub fn verify_maximal(inst: &Instance, params: &ProofParams) -> Result<MaximalReport> {
    params.validate()?;
    let n = inst.dim();
    let grids = crate::geometry::ShiftedGrid::all(n);
    let data = grids.iter().map(|g| GridData::prepare(inst, g, params)).collect::<Result<Vec<_>>>()?;
    let max_principle = MaxPrincipleReport::merge(
        data.iter().map(|d| check_max_principle_maximal(d, params)).collect::<Result<Vec<_>>>()?,
    );
    let mut report = MaximalReport {
        instance: inst.name.clone(),
        seed: inst.seed,
        params: params.clone(),
        warnings: params.warnings(n),
        grids: grids.len(),
        levels: data.iter().map(|d| d.families.len()).sum(),
        whitney_cubes: data.iter().map(|d| d.families.values().map(|w| w.len()).sum::<usize>()).sum(),
        c_w: data.iter().map(|d| d.c_w).max().unwrap_or(1),
        max_principle,
        halted: None,
        cases: None,
        h_cover_violations: 0,
        comparability: None,
        a2ljk: None,
        principal: None,
    };
    let mut sets = Vec::new();
    for d in &data {
        match build_level_sets(d, params) {
            Ok(s) => sets.push(s),
            Err(Error::Exhaustiveness(msg)) => {
                report.halted = Some(msg);
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
    }
    let mut cases = [0usize; 3];
    for s in &sets {
        let c = s.case_counts();
        for i in 0..3 {
            cases[i] += c[i];
        }
        report.h_cover_violations += s.h_cover_violations();
    }
    report.cases = Some(cases);
    let comps = data.iter().zip(&sets).map(|(d, s)| check_linearization_comparability(d, s)).collect::<Result<Vec<_>>>()?;
    report.comparability = Some(ComparabilityReport::merge(comps));
    let a2s = data.iter().zip(&sets).map(|(d, s)| a2ljk_for(d, s)).collect::<Result<Vec<_>>>()?;
    report.a2ljk = Some(A2ljkReport::merge(a2s));
    let principal = data.iter().map(|d| principal_suite(d, params)).collect::<Result<Vec<_>>>()?;
    report.principal = Some(PrincipalReport::merge(principal));
    Ok(report)
}

/// `check_a2ljk` on every cube with a nonempty `H_out` linearization.
fn a2ljk_for(d: &GridData, sets: &LevelCubeSets) -> Result<A2ljkReport> {
    let mut parts = Vec::new();
    for cs in &sets.cubes {
        if cs.h_out.is_empty() {
            continue;
        }
        let lin = build_linearization(&d.cell_set(&cs.h_out), &d.grid)?;
        parts.push(check_a2ljk(&cs.cube.cube, &lin, &d.sigma_m, &d.omega_m)?);
    }
    Ok(A2ljkReport::merge(parts))
}
