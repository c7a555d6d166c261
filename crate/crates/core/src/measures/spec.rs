//! Text form of measures.
//!
//! A measure spec is a JSON object
//!
//! ```text
//! { "kind": "lebesgue" | "exp-density" | "indicator-density" | "lattice",
//!   "params": { "dim": 1, "rate": 1.0, "masses": [..] },
//!   "support": { "lo": ["-8"], "hi": ["8"] },
//!   "h": "1/16" }
//! ```
//!
//! Coordinates are rationals written as strings (`"-1/3"`, `"0.25"`).
//! `support` is the density box for `indicator-density`, the truncation box
//! for `exp-density`, and the lattice extent for `lattice`. For the closed
//! forms, giving `h` discretizes the measure on the support lattice by
//! midpoint sampling. Lattice masses are listed row-major, last axis fastest.

use serde::{Deserialize, Serialize};

use super::{Lattice, Measure, Sampling};
use crate::error::{Error, Result};
use crate::geometry::{Rational, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Lebesgue,
    ExpDensity,
    IndicatorDensity,
    Lattice,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

impl RectSpec {
    pub fn to_rect(&self) -> Result<Rect> {
        Rect::new(self.lo.clone(), self.hi.clone())
    }
}

impl From<&Rect> for RectSpec {
    fn from(r: &Rect) -> Self {
        RectSpec { lo: r.lo.clone(), hi: r.hi.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    #[serde(default)]
    pub params: MeasureParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<RectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Rational>,
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("measure spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure specs serialize")
    }

    fn support_rect(&self) -> Result<Option<Rect>> {
        self.support.as_ref().map(RectSpec::to_rect).transpose()
    }

    fn dim(&self, support: Option<&Rect>) -> Result<usize> {
        match (self.params.dim, support) {
            (Some(d), Some(s)) if d != s.dim() => Err(Error::DimensionMismatch { expected: d, got: s.dim() }),
            (Some(d), _) => Ok(d),
            (None, Some(s)) => Ok(s.dim()),
            (None, None) => Ok(1),
        }
    }

    pub fn build(&self) -> Result<Measure> {
        let support = self.support_rect()?;
        let dim = self.dim(support.as_ref())?;
        if dim == 0 || dim > crate::geometry::MAX_DIM {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        let need_support = || {
            support
                .clone()
                .ok_or_else(|| Error::Parse(format!("{:?} measure needs a support box", self.kind)))
        };
        let closed = match self.kind {
            MeasureKind::Lebesgue => Measure::Lebesgue { dim },
            MeasureKind::ExpDensity => {
                let rate = self.params.rate.unwrap_or(1.0);
                if !rate.is_finite() {
                    return Err(Error::InvalidParameter(format!("rate {rate}")));
                }
                Measure::Exp { dim, rate, support: support.clone() }
            }
            MeasureKind::IndicatorDensity => Measure::Indicator { rect: need_support()? },
            MeasureKind::Lattice => {
                let h = self.h.ok_or_else(|| Error::Parse("lattice measure needs h".into()))?;
                let lattice = Lattice::over_rect(&need_support()?, h)?;
                let masses = self
                    .params
                    .masses
                    .clone()
                    .ok_or_else(|| Error::Parse("lattice measure needs params.masses".into()))?;
                return Measure::lattice(lattice, masses);
            }
        };
        match self.h {
            None => Ok(closed),
            Some(h) => {
                let lattice = Lattice::over_rect(&need_support()?, h)?;
                closed.discretize(&lattice, Sampling::Midpoint)
            }
        }
    }
}

impl Measure {
    /// Spec that rebuilds this measure.
    pub fn to_spec(&self) -> MeasureSpec {
        let mut params = MeasureParams::default();
        let (kind, support, h) = match self {
            Measure::Lebesgue { dim } => {
                params.dim = Some(*dim);
                (MeasureKind::Lebesgue, None, None)
            }
            Measure::Exp { dim, rate, support } => {
                params.dim = Some(*dim);
                params.rate = Some(*rate);
                (MeasureKind::ExpDensity, support.as_ref().map(RectSpec::from), None)
            }
            Measure::Indicator { rect } => (MeasureKind::IndicatorDensity, Some(RectSpec::from(rect)), None),
            Measure::Lattice(l) => {
                params.masses = Some(l.masses().to_vec());
                let lat = l.lattice();
                (MeasureKind::Lattice, Some(RectSpec::from(&lat.extent())), Some(lat.spacing()))
            }
        };
        MeasureSpec { kind, params, support, h }
    }
}
