//! Concrete weight pairs and functions on which the proof machinery runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rational, Rect, ShiftedGrid};
use crate::measures::{Lattice, LatticeFunction, Measure, MeasureSpec};

/// `(sigma, omega, f)` on one lattice whose cells are standard dyadic cubes.
///
/// The data of `f` lives in the middle third of the lattice (the support
/// window); the outer thirds are padding so that the superlevel sets used
/// by the checks stay away from the lattice edge.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub seed: u64,
    pub lattice: Lattice,
    pub sigma: Measure,
    pub omega: Measure,
    pub f: LatticeFunction,
}

/// Bundled instance generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Log-uniform random weights, sparse heavy-tailed `f`.
    Random,
    /// `sigma = omega = dx`, `f` the indicator of a centered cube.
    LebesgueSmoke,
    /// `sigma` growing geometrically away from one cell (capped at `4^8`),
    /// so that small cubes near that cell are not parentally doubling;
    /// `omega = dx`, `f` the indicator of a neighbourhood of the cell.
    LacunarySigma,
    /// `f sigma` a single heavy cell next to a grid boundary.
    PointMass,
}

impl Generator {
    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.into()))
            .map_err(|_| Error::Parse(format!("unknown instance generator `{name}`")))
    }
}

/// Text form of an instance: a generator with a seed, or explicit lattice
/// measures and cell values of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Present for fractional instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

impl InstanceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance spec: {e}")))
    }

    pub fn build(&self) -> Result<Instance> {
        match (&self.generator, &self.sigma, &self.omega, &self.f) {
            (Some(g), None, None, None) => match self.alpha {
                Some(alpha) => fractional_instance(*g, self.seed, alpha),
                None => maximal_instance(*g, self.dim, self.seed),
            },
            (None, Some(s), Some(o), Some(f)) => {
                let sigma = s.build()?;
                let omega = o.build()?;
                let (Some(ls), Some(lo)) = (sigma.as_lattice(), omega.as_lattice()) else {
                    return Err(Error::Parse("explicit instances need lattice measures".into()));
                };
                ls.lattice().ensure_same(lo.lattice())?;
                let lattice = ls.lattice().clone();
                if lattice.grid_alignment(&ShiftedGrid::standard(lattice.dim())).is_none() {
                    return Err(Error::Resolution("explicit lattices must consist of dyadic cells".into()));
                }
                let f = LatticeFunction::new(lattice.clone(), f.clone())?;
                Ok(Instance { name: "explicit".into(), seed: self.seed, lattice, sigma, omega, f })
            }
            _ => Err(Error::Parse("give either `generator` or all of `sigma`, `omega`, `f`".into())),
        }
    }
}

fn ri(n: i128) -> Rational {
    Rational::int(n)
}

/// Support window and padded lattice used by the maximal-function suite.
fn maximal_layout(dim: usize) -> Result<(Rect, Lattice)> {
    let (half, h) = match dim {
        1 => (ri(2), Rational::pow2(-8)),
        2 => (ri(1), Rational::pow2(-5)),
        _ => return Err(Error::InvalidParameter(format!("maximal instances exist in 1D and 2D, not {dim}D"))),
    };
    let support = Rect::new(vec![-half; dim], vec![half; dim])?;
    let lattice = Lattice::window(dim, -half * ri(3), half * ri(3), h)?;
    Ok((support, lattice))
}

/// Support window `[-2, 2)` and lattice `[-16, 16)` of the fractional suite.
fn fractional_layout() -> Result<(Rect, Lattice)> {
    let support = Rect::new(vec![ri(-2)], vec![ri(2)])?;
    Ok((support, Lattice::window(1, ri(-16), ri(16), Rational::pow2(-4))?))
}

fn log_uniform(rng: &mut ChaCha8Rng, spread: f64) -> f64 {
    (spread * (2.0 * rng.gen::<f64>() - 1.0)).exp()
}

fn in_support(lattice: &Lattice, support: &Rect, i: usize) -> bool {
    support.contains_rect(&lattice.cell_cube(i).rect())
}

fn build(
    name: String,
    seed: u64,
    generator: Generator,
    support: &Rect,
    lattice: Lattice,
) -> Result<Instance> {
    let n = lattice.len();
    let vol = lattice.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = lattice.locate(&vec![Rational::new(1, 3)?; lattice.dim()]).expect("center cell in the lattice");
    let c0 = lattice.multi(center);
    let dist = |i: usize| lattice.multi(i).iter().zip(&c0).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0);
    let (sigma, omega, f): (Vec<f64>, Vec<f64>, Vec<f64>) = match generator {
        Generator::Random => {
            let mut sigma = vec![0.0; n];
            let mut omega = vec![0.0; n];
            let mut f = vec![0.0; n];
            for i in 0..n {
                sigma[i] = vol * log_uniform(&mut rng, 3.0);
                omega[i] = vol * log_uniform(&mut rng, 3.0);
                if in_support(&lattice, support, i) && rng.gen_bool(0.6) {
                    f[i] = log_uniform(&mut rng, 4.0);
                }
            }
            // a few spikes, so that the fields span many dyadic levels
            let inside: Vec<usize> = (0..n).filter(|i| in_support(&lattice, support, *i)).collect();
            for _ in 0..3 {
                let at = inside[rng.gen_range(0..inside.len())];
                f[at] = 65536.0 * log_uniform(&mut rng, 1.0);
            }
            (sigma, omega, f)
        }
        Generator::LebesgueSmoke => {
            let inner = Rect::new(
                support.lo.iter().map(|x| *x / ri(2)).collect(),
                support.hi.iter().map(|x| *x / ri(2)).collect(),
            )?;
            let f = (0..n).map(|i| if in_support(&lattice, &inner, i) { 1.0 } else { 0.0 }).collect();
            (vec![vol; n], vec![vol; n], f)
        }
        Generator::LacunarySigma => {
            let sigma = (0..n).map(|i| vol * 4f64.powi(dist(i).min(8) as i32)).collect();
            let f = (0..n).map(|i| if dist(i) < 8 { 1.0 } else { 0.0 }).collect();
            (sigma, vec![vol; n], f)
        }
        Generator::PointMass => {
            let f = (0..n).map(|i| if i == center { 1.0 / vol } else { 0.0 }).collect();
            (vec![vol; n], vec![vol; n], f)
        }
    };
    Ok(Instance {
        name,
        seed,
        sigma: Measure::lattice(lattice.clone(), sigma)?,
        omega: Measure::lattice(lattice.clone(), omega)?,
        f: LatticeFunction::new(lattice.clone(), f)?,
        lattice,
    })
}

fn label(generator: Generator) -> String {
    serde_json::to_value(generator).expect("generator names serialize").as_str().unwrap_or("instance").to_string()
}

/// Instance for the maximal-function suite, in 1D or 2D.
pub fn maximal_instance(generator: Generator, dim: usize, seed: u64) -> Result<Instance> {
    let (support, lattice) = maximal_layout(dim)?;
    build(format!("{}-{dim}d", label(generator)), seed, generator, &support, lattice)
}

/// Instance for the fractional suite (1D, `f` supported in `[-2, 2)`).
pub fn fractional_instance(generator: Generator, seed: u64, alpha: f64) -> Result<Instance> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
    }
    let (support, lattice) = fractional_layout()?;
    build(format!("{}-frac", label(generator)), seed, generator, &support, lattice)
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Same measures and function on the lattice refined `factor` times
    /// (masses split evenly, `f` constant on each old cell).
    pub fn refined(&self, factor: usize) -> Result<Instance> {
        let fine = self.lattice.refine(factor)?;
        let split = |mu: &Measure| -> Result<Measure> {
            Measure::lattice(fine.clone(), mu.cell_masses(&fine, crate::measures::Sampling::Exact))
        };
        let values = (0..fine.len())
            .map(|i| {
                let mid = fine.midpoint(i);
                self.f.values()[self.lattice.locate(&mid).expect("fine cell inside the coarse lattice")]
            })
            .collect();
        Ok(Instance {
            name: format!("{}-refined{factor}", self.name),
            seed: self.seed,
            sigma: split(&self.sigma)?,
            omega: split(&self.omega)?,
            f: LatticeFunction::new(fine.clone(), values)?,
            lattice: fine,
        })
    }

    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            generator: None,
            dim: self.dim(),
            seed: self.seed,
            alpha: None,
            sigma: Some(self.sigma.to_spec()),
            omega: Some(self.omega.to_spec()),
            f: Some(self.f.values().to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        let a = maximal_instance(Generator::Random, 1, 7).unwrap();
        let b = maximal_instance(Generator::Random, 1, 7).unwrap();
        let c = maximal_instance(Generator::Random, 1, 8).unwrap();
        assert_eq!(a.f.values(), b.f.values());
        assert_ne!(a.f.values(), c.f.values());
        assert_eq!(a.lattice.len(), 3072);
        // f vanishes on the padding
        let support = Rect::new(vec![ri(-2)], vec![ri(2)]).unwrap();
        for i in 0..a.lattice.len() {
            if !in_support(&a.lattice, &support, i) {
                assert_eq!(a.f.values()[i], 0.0);
            }
        }
    }

    #[test]
    fn spec_round_trip_and_errors() {
        let inst = maximal_instance(Generator::LacunarySigma, 1, 0).unwrap();
        let text = serde_json::to_string(&inst.to_spec()).unwrap();
        let back = InstanceSpec::from_json(&text).unwrap().build().unwrap();
        assert_eq!(back.f.values(), inst.f.values());
        assert_eq!(back.sigma.as_lattice().unwrap().masses(), inst.sigma.as_lattice().unwrap().masses());
        let g = InstanceSpec::from_json(r#"{"generator": "point-mass", "dim": 2}"#).unwrap().build().unwrap();
        assert_eq!(g.lattice.dim(), 2);
        assert!(InstanceSpec::from_json(r#"{"dim": 1}"#).unwrap().build().is_err());
        assert!(Generator::parse("nope").is_err());
        assert!(maximal_instance(Generator::Random, 3, 0).is_err());
        assert!(fractional_instance(Generator::Random, 0, 1.5).is_err());
    }

    #[test]
    fn refinement_keeps_totals() {
        let inst = maximal_instance(Generator::Random, 1, 3).unwrap();
        let fine = inst.refined(2).unwrap();
        let total = |m: &Measure| m.as_lattice().unwrap().masses().iter().sum::<f64>();
        assert!((total(&inst.sigma) - total(&fine.sigma)).abs() < 1e-9 * total(&inst.sigma));
        let a = inst.f.l2_norm_sq(&inst.sigma).unwrap();
        let b = fine.f.l2_norm_sq(&fine.sigma).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }
}
