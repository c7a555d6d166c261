use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number in reduced form with a positive denominator.
///
/// Grid geometry only ever produces denominators of the form `3^a 2^b`;
/// other denominators appear transiently (e.g. the `9/10` shrink used by
/// the cover test) and are allowed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rational(Ratio<i128>);

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    pub fn new(numer: i128, denom: i128) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Parse(format!("zero denominator in {numer}/{denom}")));
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub fn int(n: i128) -> Self {
        Rational(Ratio::from_integer(n))
    }

    /// `2^j` for any integer `j`.
    pub fn pow2(j: i32) -> Self {
        if j >= 0 {
            Rational(Ratio::from_integer(1i128 << j))
        } else {
            Rational(Ratio::new_raw(1, 1i128 << (-j)))
        }
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        // correctly rounded whenever both parts fit in 53 bits
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn floor(&self) -> i128 {
        Integer::div_floor(&self.numer(), &self.denom())
    }

    pub fn ceil(&self) -> i128 {
        -Integer::div_floor(&-self.numer(), &self.denom())
    }

    pub fn is_integer(&self) -> bool {
        self.denom() == 1
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidParameter("reciprocal of zero".into()));
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Exact base-2 logarithm when `self` is a power of two.
    pub fn log2_exact(&self) -> Option<i32> {
        let (n, d) = (self.numer(), self.denom());
        if n <= 0 {
            return None;
        }
        if d == 1 && n.count_ones() == 1 {
            Some(n.trailing_zeros() as i32)
        } else if n == 1 && d.count_ones() == 1 {
            Some(-(d.trailing_zeros() as i32))
        } else {
            None
        }
    }

    /// True when the denominator has no prime factors other than 2 and 3.
    pub fn is_grid_compatible(&self) -> bool {
        let mut d = self.denom();
        while d % 2 == 0 {
            d /= 2;
        }
        while d % 3 == 0 {
            d /= 3;
        }
        d == 1
    }

    /// Exact value of a base-10 literal such as `-0.125`.
    fn from_decimal(s: &str) -> Result<Self> {
        let neg = s.starts_with('-');
        let body = s.trim_start_matches(['-', '+']);
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Parse(format!("empty number '{s}'")));
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: i128 = digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad decimal '{s}'")))?;
        let denom = 10i128
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(|| Error::Parse(format!("too many decimals in '{s}'")))?;
        Rational::new(if neg { -numer } else { numer }, denom)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: i128 = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in '{s}'")))?;
            let d: i128 = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in '{s}'")))?;
            if d <= 0 {
                return Err(Error::Parse(format!("denominator must be positive in '{s}'")));
            }
            Rational::new(n, d)
        } else {
            Rational::from_decimal(s)
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(Rational::int(n as i128)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::int(n as i128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parse_forms() {
        assert_eq!(r("-1/3"), Rational::new(-1, 3).unwrap());
        assert_eq!(r("0.4"), Rational::new(2, 5).unwrap());
        assert_eq!(r("7"), Rational::int(7));
        assert_eq!(r("2/4").to_string(), "1/2");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn floor_ceil_negative() {
        assert_eq!(r("-1/3").floor(), -1);
        assert_eq!(r("-1/3").ceil(), 0);
        assert_eq!(r("5/2").floor(), 2);
        assert_eq!(r("5/2").ceil(), 3);
        assert_eq!(r("-2").ceil(), -2);
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(Rational::pow2(-3), r("1/8"));
        assert_eq!(Rational::pow2(5).log2_exact(), Some(5));
        assert_eq!(r("1/16").log2_exact(), Some(-4));
        assert_eq!(r("3/16").log2_exact(), None);
        assert!(r("5/12").is_grid_compatible());
        assert!(!r("9/10").is_grid_compatible());
    }
}
