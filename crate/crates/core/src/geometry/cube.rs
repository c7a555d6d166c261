use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Rational;
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Half-open axis-parallel cube `corner + [0, side)^n` with exact geometry.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cube {
    corner: Vec<Rational>,
    side: Rational,
}

/// Half-open axis-parallel box `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

impl Rect {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidCube(format!("box with corners {lo:?} / {hi:?}")));
        }
        Ok(Rect { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a >= b)
    }

    pub fn volume(&self) -> Rational {
        if self.is_empty() {
            return Rational::ZERO;
        }
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(Rational::ONE, |acc, (a, b)| acc * (*b - *a))
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| Rational::max(*a, *b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| Rational::min(*a, *b)).collect();
        Rect { lo, hi }
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.is_empty()
            || (0..self.dim()).all(|d| self.lo[d] <= other.lo[d] && other.hi[d] <= self.hi[d])
    }
}

impl Cube {
    pub fn new(corner: Vec<Rational>, side: Rational) -> Result<Self> {
        if corner.is_empty() || corner.len() > MAX_DIM {
            return Err(Error::InvalidCube(format!("dimension {} not in 1..=3", corner.len())));
        }
        if !side.is_positive() {
            return Err(Error::InvalidCube(format!("side {side} must be positive")));
        }
        Ok(Cube { corner, side })
    }

    pub fn unit(dim: usize) -> Self {
        Cube { corner: vec![Rational::ZERO; dim], side: Rational::ONE }
    }

    /// Cube `[lo, hi)` in one dimension.
    pub fn interval(lo: Rational, hi: Rational) -> Result<Self> {
        Cube::new(vec![lo], hi - lo)
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn corner(&self) -> &[Rational] {
        &self.corner
    }

    pub fn side(&self) -> Rational {
        self.side
    }

    pub fn upper(&self) -> Vec<Rational> {
        self.corner.iter().map(|c| *c + self.side).collect()
    }

    pub fn center(&self) -> Vec<Rational> {
        let half = self.side / Rational::int(2);
        self.corner.iter().map(|c| *c + half).collect()
    }

    pub fn volume(&self) -> Rational {
        (0..self.dim()).fold(Rational::ONE, |acc, _| acc * self.side)
    }

    pub fn volume_f64(&self) -> f64 {
        self.side.to_f64().powi(self.dim() as i32)
    }

    pub fn rect(&self) -> Rect {
        Rect { lo: self.corner.clone(), hi: self.upper() }
    }

    /// Same center, side multiplied by `lambda`.
    pub fn dilate(&self, lambda: Rational) -> Result<Cube> {
        if !lambda.is_positive() {
            return Err(Error::InvalidDilation(lambda.to_string()));
        }
        let side = self.side * lambda;
        let shift = (side - self.side) / Rational::int(2);
        Ok(Cube { corner: self.corner.iter().map(|c| *c - shift).collect(), side })
    }

    /// The `2^n` children, in lexicographic order of their corners.
    pub fn children(&self) -> Vec<Cube> {
        let half = self.side / Rational::int(2);
        self.corner_offsets()
            .map(|bits| Cube {
                corner: self
                    .corner
                    .iter()
                    .zip(&bits)
                    .map(|(c, b)| if *b { *c + half } else { *c })
                    .collect(),
                side: half,
            })
            .collect()
    }

    /// The `2^n` cubes `P` of twice the side length having `self` as a child.
    pub fn parents(&self) -> Vec<Cube> {
        let side = self.side * Rational::int(2);
        self.corner_offsets()
            .map(|bits| Cube {
                corner: self
                    .corner
                    .iter()
                    .zip(&bits)
                    .map(|(c, b)| if *b { *c - self.side } else { *c })
                    .collect(),
                side,
            })
            .collect()
    }

    fn corner_offsets(&self) -> impl Iterator<Item = Vec<bool>> + '_ {
        let n = self.dim();
        (0..1usize << n).map(move |m| (0..n).map(|d| m >> (n - 1 - d) & 1 == 1).collect())
    }

    pub fn contains_point(&self, x: &[Rational]) -> bool {
        x.len() == self.dim()
            && self
                .corner
                .iter()
                .zip(x)
                .all(|(c, xi)| *c <= *xi && *xi < *c + self.side)
    }

    pub fn contains(&self, other: &Cube) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|d| {
                self.corner[d] <= other.corner[d]
                    && other.corner[d] + other.side <= self.corner[d] + self.side
            })
    }

    /// True when the interiors overlap.
    pub fn intersects(&self, other: &Cube) -> bool {
        (0..self.dim()).all(|d| {
            self.corner[d] < other.corner[d] + other.side
                && other.corner[d] < self.corner[d] + self.side
        })
    }

    pub fn to_f64(&self) -> (Vec<f64>, f64) {
        (self.corner.iter().map(|c| c.to_f64()).collect(), self.side.to_f64())
    }
}

impl PartialOrd for Cube {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cube {
    fn cmp(&self, other: &Self) -> Ordering {
        self.corner
            .cmp(&other.corner)
            .then_with(|| self.side.cmp(&other.side))
    }
}

/// Prints as a product of half-open intervals, e.g. `[-1/3,2/3)x[0,1)`.
impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (d, c) in self.corner.iter().enumerate() {
            if d > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{},{})", c, *c + self.side)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Splits `[a,b)x[c,d)...` into its intervals.
fn parse_intervals(s: &str) -> Result<Vec<(Rational, Rational)>> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    s.split('x')
        .map(|part| {
            let inner = part
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| Error::Parse(format!("expected '[a,b)' but found '{part}'")))?;
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("missing ',' in '{part}'")))?;
            Ok((a.parse()?, b.parse()?))
        })
        .collect()
}

impl FromStr for Cube {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = parse_intervals(s)?;
        let side = parts[0].1 - parts[0].0;
        if parts.iter().any(|(a, b)| *b - *a != side) {
            return Err(Error::Parse(format!("'{s}' is not a cube: side lengths differ")));
        }
        Cube::new(parts.into_iter().map(|(a, _)| a).collect(), side)
    }
}

impl FromStr for Rect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = parse_intervals(s)?.into_iter().unzip();
        let rect = Rect::new(lo, hi)?;
        if rect.is_empty() {
            return Err(Error::Parse(format!("'{s}' is empty")));
        }
        Ok(rect)
    }
}

impl Serialize for Cube {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cube {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Cube {
        s.parse().unwrap()
    }

    #[test]
    fn rect_literals() {
        let r: Rect = "[0,2)x[1/4,3/4)".parse().unwrap();
        assert_eq!(r.volume(), Rational::ONE);
        assert!("[1,0)".parse::<Rect>().is_err());
        assert!("[0,2)x[0,1)".parse::<Cube>().is_err());
        assert_eq!(q("[0,1)x[2,3)").rect(), "[0,1)x[2,3)".parse().unwrap());
    }

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn dilate_unit_interval() {
        assert_eq!(q("[0,1)").dilate(Rational::int(3)).unwrap(), q("[-1,2)"));
        let c = q("[1/3,5/6)x[0,1/2)");
        assert_eq!(c.dilate(Rational::ONE).unwrap(), c);
        assert!(c.dilate(Rational::ZERO).is_err());
        assert!(c.dilate(r("-2")).is_err());
    }

    #[test]
    fn triple_of_interval_matches_endpoint_formula() {
        // 3[a,b) = [2a-b, 2b-a)
        let (a, b) = (r("-2/3"), r("5/4"));
        let tri = Cube::interval(a, b).unwrap().dilate(Rational::int(3)).unwrap();
        let two = Rational::int(2);
        assert_eq!(tri, Cube::interval(two * a - b, two * b - a).unwrap());
    }

    #[test]
    fn children_and_parents_in_one_and_two_dims() {
        assert_eq!(q("[0,1)").children(), vec![q("[0,1/2)"), q("[1/2,1)")]);
        let quads = Cube::unit(2).children();
        assert_eq!(quads.len(), 4);
        assert_eq!(quads[3], q("[1/2,1)x[1/2,1)"));
        let ps = q("[0,1)").parents();
        assert_eq!(ps, vec![q("[0,2)"), q("[-1,1)")]);
        assert_eq!(Cube::unit(2).parents().len(), 4);
    }

    #[test]
    fn parse_print_and_rejects() {
        let c = q("[-1/3,2/3)x[0,1)");
        assert_eq!(c.to_string(), "[-1/3,2/3)x[0,1)");
        assert!("[0,1)x[0,2)".parse::<Cube>().is_err());
        assert!("[1,0)".parse::<Cube>().is_err());
        assert!("(0,1)".parse::<Cube>().is_err());
    }

    #[test]
    fn intersection_semantics_are_half_open() {
        assert!(!q("[0,1)").intersects(&q("[1,2)")));
        assert!(q("[0,1)").intersects(&q("[1/2,3/2)")));
        assert!(q("[0,1)").contains_point(&[Rational::ZERO]));
        assert!(!q("[0,1)").contains_point(&[Rational::ONE]));
    }
}
