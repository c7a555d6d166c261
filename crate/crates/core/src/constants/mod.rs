//! Muckenhoupt constants, testing constants and norm lower bounds over
//! finite cube families and finite lists of test functions.
//!
//! Every reported value is a maximum over the supplied candidates, hence a
//! lower bound for the corresponding supremum.

pub mod examples;
mod family;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use family::CubeFamily;

use crate::error::{Error, Result};
use crate::geometry::{Cube, Rational};
use crate::measures::{Lattice, LatticeFunction, Measure};
use crate::operators::Operator;

/// Denominator and admissibility rule of a testing condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Variant {
    /// `|Q|_sigma`
    Plain,
    /// `|lambda Q|_sigma`
    Lambda { lambda: Rational },
    /// `min over parents P of |P|_sigma`
    Parental,
    /// `|Q|_sigma`, cubes with `min_P |P|_sigma <= D |Q|_sigma`
    DParental { d: f64 },
    /// `|Q|_sigma`, cubes with `|lambda Q|_sigma <= D |Q|_sigma`
    DLambda { lambda: Rational, d: f64 },
}

impl Variant {
    fn validate(&self) -> Result<()> {
        let lambda_ok = |l: &Rational| *l > Rational::ONE;
        let d_ok = |d: f64| d > 1.0 && d.is_finite();
        let ok = match self {
            Variant::Plain | Variant::Parental => true,
            Variant::Lambda { lambda } => lambda_ok(lambda),
            Variant::DParental { d } => d_ok(*d),
            Variant::DLambda { lambda, d } => lambda_ok(lambda) && d_ok(*d),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{self:?}: need lambda > 1 and D > 1")))
        }
    }

    /// `Some(denominator)` if `q` is admissible, given `|Q|_sigma > 0`.
    fn denominator(&self, sigma: &Measure, q: &Cube, own: f64) -> Result<Option<f64>> {
        let parental = || -> Result<f64> {
            let mut best = f64::INFINITY;
            for p in q.parents() {
                best = best.min(sigma.mass(&p)?);
            }
            Ok(best)
        };
        Ok(match self {
            Variant::Plain => Some(own),
            Variant::Lambda { lambda } => Some(sigma.mass(&q.dilate(*lambda)?)?),
            Variant::Parental => Some(parental()?),
            Variant::DParental { d } => (parental()? <= d * own).then_some(own),
            Variant::DLambda { lambda, d } => (sigma.mass(&q.dilate(*lambda)?)? <= d * own).then_some(own),
        })
    }
}

/// How finely `T(1_Q sigma)` is sampled on a cube `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Resolution {
    /// Fixed cell side; must divide every side in the family.
    Spacing(Rational),
    /// This many cells per side of each cube.
    PerSide(u32),
}

impl Resolution {
    pub fn lattice_on(&self, q: &Cube) -> Result<Lattice> {
        let h = match *self {
            Resolution::Spacing(h) => h,
            Resolution::PerSide(r) if r > 0 => q.side() / Rational::int(r as i128),
            Resolution::PerSide(_) => return Err(Error::InvalidParameter("zero cells per side".into())),
        };
        Lattice::over_rect(&q.rect(), h)
    }

    fn describe(&self) -> String {
        match self {
            Resolution::Spacing(h) => format!("spacing {h}"),
            Resolution::PerSide(r) => format!("{r} cells per side"),
        }
    }
}

/// What achieved a reported maximum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cube: Option<Cube>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub constant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    pub value: f64,
    /// `value^2` for quadratic constants, `value` otherwise.
    pub value_sq: f64,
    pub witness: Witness,
    pub family_size: usize,
    pub admissible_size: usize,
    pub res: String,
}

impl ConstantReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Max with ties broken toward the earliest candidate (cubes are sorted, so
/// this is the lexicographically smallest witness).
fn argmax<T: Clone>(items: impl IntoIterator<Item = (f64, T)>) -> Option<(f64, T)> {
    let mut best: Option<(f64, T)> = None;
    for (v, w) in items {
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, w));
        }
    }
    best
}

fn check_pair(sigma: &Measure, omega: &Measure, n: usize) -> Result<()> {
    for mu in [sigma, omega] {
        if mu.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mu.dim() });
        }
    }
    Ok(())
}

fn sorted(family: &CubeFamily) -> Vec<Cube> {
    let mut cubes = family.cubes().to_vec();
    cubes.sort();
    cubes
}

fn muckenhoupt(
    name: &str,
    power: f64,
    sigma: &Measure,
    omega: &Measure,
    family: &CubeFamily,
) -> Result<ConstantReport> {
    check_pair(sigma, omega, family.dim())?;
    let cubes = sorted(family);
    let vals = cubes
        .par_iter()
        .map(|q| Ok((a2_quotient(power, sigma, omega, q)?, q.clone())))
        .collect::<Result<Vec<_>>>()?;
    let (value, q) = argmax(vals).expect("family is nonempty");
    Ok(ConstantReport {
        constant: name.into(),
        variant: None,
        value,
        value_sq: value,
        witness: Witness { cube: Some(q), ..Witness::default() },
        family_size: family.len(),
        admissible_size: family.len(),
        res: "exact".into(),
    })
}

/// `|Q|_sigma |Q|_omega / |Q|^{power}`.
pub fn a2_quotient(power: f64, sigma: &Measure, omega: &Measure, q: &Cube) -> Result<f64> {
    Ok(sigma.mass(q)? * omega.mass(q)? / q.volume_f64().powf(power))
}

/// `A_2(sigma, omega)` over `family`.
pub fn a2(sigma: &Measure, omega: &Measure, family: &CubeFamily) -> Result<ConstantReport> {
    muckenhoupt("A2", 2.0, sigma, omega, family)
}

/// `A_2^alpha(sigma, omega)` over `family`, `0 < alpha < n`.
pub fn a2_alpha(alpha: f64, sigma: &Measure, omega: &Measure, family: &CubeFamily) -> Result<ConstantReport> {
    let n = family.dim() as f64;
    if !(alpha > 0.0 && alpha < n) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, {n})")));
    }
    muckenhoupt(&format!("A2^{alpha}"), 2.0 * (1.0 - alpha / n), sigma, omega, family)
}

/// `∫_Q T(1_Q sigma)^2 domega`, with `T(1_Q sigma)` evaluated on `res`'s lattice of `Q`.
pub fn testing_integral(op: Operator, sigma: &Measure, omega: &Measure, q: &Cube, res: Resolution) -> Result<f64> {
    let lattice = res.lattice_on(q)?;
    let one = LatticeFunction::constant(&lattice, 1.0)?;
    op.field(&one, sigma, 1)?.integral_sq(omega)
}

/// `(∫_Q T(1_Q sigma)^2 domega, denominator)` for an admissible cube with
/// `|Q|_sigma > 0`, else `None`.
pub fn testing_quotient(
    op: Operator,
    sigma: &Measure,
    omega: &Measure,
    q: &Cube,
    variant: Variant,
    res: Resolution,
) -> Result<Option<(f64, f64)>> {
    variant.validate()?;
    let own = sigma.mass(q)?;
    if own <= 0.0 {
        return Ok(None);
    }
    let Some(den) = variant.denominator(sigma, q, own)? else {
        return Ok(None);
    };
    Ok(Some((testing_integral(op, sigma, omega, q, res)?, den)))
}

/// Testing constant of `op` for `(sigma, omega)` over `family`.
pub fn testing_constant(
    op: Operator,
    sigma: &Measure,
    omega: &Measure,
    family: &CubeFamily,
    variant: Variant,
    res: Resolution,
) -> Result<ConstantReport> {
    variant.validate()?;
    check_pair(sigma, omega, family.dim())?;
    let cubes = sorted(family);
    let vals = cubes
        .par_iter()
        .map(|q| Ok(testing_quotient(op, sigma, omega, q, variant, res)?.map(|(a, b)| (a / b, q.clone()))))
        .collect::<Result<Vec<_>>>()?;
    let admissible: Vec<(f64, Cube)> = vals.into_iter().flatten().collect();
    let admissible_size = admissible.len();
    let (value_sq, cube) = match argmax(admissible) {
        Some((v, q)) => (v, Some(q)),
        None => (0.0, None),
    };
    Ok(ConstantReport {
        constant: format!("T[{}]", op.name()),
        variant: Some(variant),
        value: value_sq.sqrt(),
        value_sq,
        witness: Witness { cube, ..Witness::default() },
        family_size: family.len(),
        admissible_size,
        res: res.describe(),
    })
}

/// Field of `T(f sigma)` and `‖f‖²_{L²(sigma)}` for each test function.
fn norm_pieces(
    op: Operator,
    sigma: &Measure,
    fs: &[LatticeFunction],
    refine: usize,
) -> Result<Vec<Option<(crate::operators::OperatorField, f64)>>> {
    fs.par_iter()
        .map(|f| {
            let norm = f.l2_norm_sq(sigma)?;
            if norm <= 0.0 {
                return Ok(None);
            }
            Ok(Some((op.field(f, sigma, refine)?, norm)))
        })
        .collect()
}

/// `max_f ‖T(f sigma)‖_{L²(omega)} / ‖f‖_{L²(sigma)}`, the operator field
/// taken on each function's lattice (refined `refine` times).
pub fn norm_lower_bound(
    op: Operator,
    sigma: &Measure,
    omega: &Measure,
    fs: &[LatticeFunction],
    refine: usize,
) -> Result<ConstantReport> {
    let pieces = norm_pieces(op, sigma, fs, refine)?;
    let mut ratios = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        if let Some((field, norm)) = p {
            ratios.push((field.integral_sq(omega)? / norm, i));
        }
    }
    let admissible_size = ratios.len();
    let (value_sq, i) = argmax(ratios)
        .ok_or_else(|| Error::DegenerateInput("every test function vanishes in L2(sigma)".into()))?;
    Ok(ConstantReport {
        constant: format!("N[{}]", op.name()),
        variant: None,
        value: value_sq.sqrt(),
        value_sq,
        witness: Witness { function: Some(i), ..Witness::default() },
        family_size: fs.len(),
        admissible_size,
        res: format!("refine {refine}"),
    })
}

/// `max_{f, lambda} lambda^2 |{T(f sigma) > lambda}|_omega / ‖f‖²_{L²(sigma)}`, square-rooted.
pub fn weak_norm_lower_bound(
    op: Operator,
    sigma: &Measure,
    omega: &Measure,
    fs: &[LatticeFunction],
    lambdas: &[f64],
    refine: usize,
) -> Result<ConstantReport> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("lambda grid must be nonempty, positive and finite".into()));
    }
    let pieces = norm_pieces(op, sigma, fs, refine)?;
    let mut ratios = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        if let Some((field, norm)) = p {
            for l in lambdas {
                ratios.push((l * l * field.level_mass(omega, *l)? / norm, (i, *l)));
            }
        }
    }
    let admissible_size = pieces.iter().filter(|p| p.is_some()).count();
    let (value_sq, (i, l)) = argmax(ratios)
        .ok_or_else(|| Error::DegenerateInput("every test function vanishes in L2(sigma)".into()))?;
    Ok(ConstantReport {
        constant: format!("Nweak[{}]", op.name()),
        variant: None,
        value: value_sq.sqrt(),
        value_sq,
        witness: Witness { function: Some(i), lambda: Some(l), ..Witness::default() },
        family_size: fs.len(),
        admissible_size,
        res: format!("refine {refine}, {} levels", lambdas.len()),
    })
}
