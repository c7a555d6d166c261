//! The exponential weight pair `sigma = e^y dy`, `omega = 1_[0,1] dx` on the
//! line, for which triple testing stays bounded while `A_2` diverges.

use serde::Serialize;

use super::{a2, a2_alpha, testing_quotient, CubeFamily, Resolution, Variant};
use crate::error::Result;
use crate::geometry::{Cube, Rational, Rect};
use crate::measures::Measure;
use crate::operators::Operator;

/// `(sigma, omega) = (e^y dy, 1_[0,1] dx)`.
pub fn exp_pair() -> (Measure, Measure) {
    let unit = Rect::new(vec![Rational::ZERO], vec![Rational::ONE]).expect("unit interval");
    (Measure::exp_1d(), Measure::indicator(unit))
}

/// Closed form of `|[0,R]|_omega |[0,R]|_sigma / R^{2 - 2 alpha}` for `R >= 1`.
pub fn a2_closed_form(r: f64, alpha: f64) -> f64 {
    (r.exp() - 1.0) / r.powf(2.0 - 2.0 * alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A2Row {
    pub r: Rational,
    pub computed: f64,
    pub closed_form: f64,
}

/// `A_2` (or `A_2^alpha` for `alpha > 0`) of the pair on `[0, R]`.
pub fn a2_rows(alpha: f64, rs: &[Rational]) -> Result<Vec<A2Row>> {
    let (sigma, omega) = exp_pair();
    rs.iter()
        .map(|r| {
            let fam = CubeFamily::explicit(vec![Cube::interval(Rational::ZERO, *r)?])?;
            let rep = if alpha == 0.0 { a2(&sigma, &omega, &fam)? } else { a2_alpha(alpha, &sigma, &omega, &fam)? };
            Ok(A2Row { r: *r, computed: rep.value, closed_form: a2_closed_form(r.to_f64(), alpha) })
        })
        .collect()
}

/// Intervals `[a, b)` on the `step` lattice with `a_lo <= a < 1`, `0 < b <= b_hi`.
pub fn meeting_intervals(a_lo: Rational, b_hi: Rational, step: Rational) -> Result<CubeFamily> {
    let mut cubes = Vec::new();
    let mut a = a_lo;
    while a < Rational::ONE {
        let mut b = (a + step).max(step);
        while b <= b_hi {
            cubes.push(Cube::interval(a, b)?);
            b = b + step;
        }
        a = a + step;
    }
    CubeFamily::explicit(cubes)
}

/// `∫_{[0,R]} T(1_I omega)^2 dsigma / |3I|_omega` for the swapped pair.
pub fn swapped_ratio(op: Operator, r: Rational, res: Resolution) -> Result<f64> {
    let (sigma, omega) = exp_pair();
    let q = Cube::interval(Rational::ZERO, r)?;
    let lambda = Variant::Lambda { lambda: Rational::int(3) };
    let (num, den) = testing_quotient(op, &omega, &sigma, &q, lambda, res)?.expect("omega charges [0, R]");
    Ok(num / den)
}
