//! Fractional integrals of lattice measures with uniform density per cell.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Rational;
use crate::measures::Lattice;

/// `∫_{δ-1/2}^{δ+1/2} |t|^{α-1} dt`: exact 1D cell kernel in units of `h`.
fn unit_kernel_1d(alpha: f64, delta: usize) -> f64 {
    if delta == 0 {
        2.0 * 0.5f64.powf(alpha) / alpha
    } else {
        let d = delta as f64;
        ((d + 0.5).powf(alpha) - (d - 0.5).powf(alpha)) / alpha
    }
}

/// `∫_{B(0,r)} |y|^{α-n} dy` for the ball with the volume of a unit cube.
fn unit_self_term(alpha: f64, n: usize) -> f64 {
    let (surface, volume) = match n {
        1 => (2.0, 2.0),
        2 => (2.0 * PI, PI),
        3 => (4.0 * PI, 4.0 * PI / 3.0),
        _ => unreachable!("dimensions above 3 are rejected by Lattice::new"),
    };
    let r = (1.0 / volume).powf(1.0 / n as f64);
    surface * r.powf(alpha) / alpha
}

/// `I_α` kernel between 1D cells `δ` apart, for unit mass per cell.
pub(crate) fn kernel_1d(lattice: &Lattice, alpha: f64) -> Vec<f64> {
    let scale = lattice.spacing().to_f64().powf(alpha - 1.0);
    (0..lattice.shape()[0]).map(|d| unit_kernel_1d(alpha, d) * scale).collect()
}

/// `I_α` of the cell masses, evaluated at every cell midpoint. Exact for
/// uniform density per cell in 1D; midpoint kernel plus an equal-volume
/// ball for the self cell in higher dimensions.
pub(crate) fn field(lattice: &Lattice, masses: &[f64], alpha: f64) -> Vec<f64> {
    let n = lattice.dim();
    let h = lattice.spacing().to_f64();
    let scale = h.powf(alpha - n as f64);
    let support: Vec<(Vec<usize>, f64)> = masses
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(i, m)| (lattice.multi(i), *m))
        .collect();
    let self_term = if n == 1 { unit_kernel_1d(alpha, 0) } else { unit_self_term(alpha, n) };
    let table_1d: Vec<f64> = if n == 1 {
        (0..lattice.shape()[0]).map(|d| unit_kernel_1d(alpha, d)).collect()
    } else {
        Vec::new()
    };
    (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let at = lattice.multi(i);
            let mut acc = 0.0;
            for (c, m) in &support {
                let k = if n == 1 {
                    table_1d[at[0].abs_diff(c[0])]
                } else {
                    let d2: usize = at.iter().zip(c).map(|(a, b)| a.abs_diff(*b).pow(2)).sum();
                    if d2 == 0 {
                        self_term
                    } else {
                        (d2 as f64).powf((alpha - n as f64) / 2.0)
                    }
                };
                acc += m * k;
            }
            acc * scale
        })
        .collect()
}

/// `∫_a^b |x-y|^{α-1} dy`.
fn segment_1d(alpha: f64, x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        ((b - x).powf(alpha) - (a - x).powf(alpha)) / alpha
    } else if x >= b {
        ((x - a).powf(alpha) - (x - b).powf(alpha)) / alpha
    } else {
        ((x - a).powf(alpha) + (b - x).powf(alpha)) / alpha
    }
}

/// `I_α` of the cell masses at an arbitrary point.
pub(crate) fn at_point(lattice: &Lattice, masses: &[f64], alpha: f64, x: &[Rational]) -> Result<f64> {
    let n = lattice.dim();
    let h = lattice.spacing().to_f64();
    if n == 1 {
        let xf = x[0].to_f64();
        return Ok(masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, m)| {
                let a = lattice.cell_cube(i).corner()[0].to_f64();
                m / h * segment_1d(alpha, xf, a, a + h)
            })
            .sum());
    }
    let home = lattice.locate(x);
    if let Some(i) = home {
        if masses[i] > 0.0 && lattice.midpoint(i) != x {
            return Err(Error::SingularCell(format!(
                "point {x:?} lies inside a charged cell but off its midpoint"
            )));
        }
    }
    let xf: Vec<f64> = x.iter().map(Rational::to_f64).collect();
    let mut acc = 0.0;
    for (i, m) in masses.iter().enumerate().filter(|(_, m)| **m > 0.0) {
        if Some(i) == home {
            acc += m * h.powf(alpha - n as f64) * unit_self_term(alpha, n);
        } else {
            let c = lattice.midpoint_f64(i);
            let d2: f64 = xf.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
            acc += m * d2.powf((alpha - n as f64) / 2.0);
        }
    }
    Ok(acc)
}
