//! Run configuration: flags merged with an optional JSON config file, where
//! file values win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use twoweight::constants::{CubeFamily, Resolution, Variant};
use twoweight::geometry::{Rational, Rect};
use twoweight::measures::{MeasureSpec, RectSpec};
use twoweight::proofcheck::ProofParams;

use crate::CliError;

/// Cube family of a constants run: corners on the `step` lattice inside the
/// window, sides `2^j` for `j_min <= j <= j_max` (or `sides` when given).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub step: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<Rational>>,
    #[serde(default)]
    pub j_min: i32,
    #[serde(default)]
    pub j_max: i32,
}

impl FamilySpec {
    pub fn build(&self, window: &Rect) -> Result<CubeFamily, CliError> {
        let fam = match &self.sides {
            Some(sides) => CubeFamily::sweep(window, self.step, sides),
            None => CubeFamily::dyadic_sweep(window, self.step, self.j_min, self.j_max),
        };
        fam.map_err(|e| CliError::Config(format!("family: {e}")))
    }
}

/// Everything a command reads. Absent fields take command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<RectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Constant ids: `a2`, `a2-alpha`, `testing`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
    /// Operator of the testing constants: `M`, `M_alpha`, `I_alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<ProofParams>,
    /// Boxes whose union is the open set of a Whitney run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<RectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_w: Option<Rational>,
    /// Grid shifts in thirds, one per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<u8>>,
    /// Swept parameter of `sweep`: `lambda`, `d` or `res`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
        })
    }

    /// Fields set in `file` replace those of `self`.
    pub fn overridden_by(self, file: RunConfig) -> RunConfig {
        fn vec_or<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if b.is_empty() {
                a
            } else {
                b
            }
        }
        RunConfig {
            command: file.command.or(self.command),
            sigma: file.sigma.or(self.sigma),
            omega: file.omega.or(self.omega),
            window: file.window.or(self.window),
            resolution: file.resolution.or(self.resolution),
            family: file.family.or(self.family),
            constants: vec_or(self.constants, file.constants),
            variants: vec_or(self.variants, file.variants),
            operator: file.operator.or(self.operator),
            alpha: file.alpha.or(self.alpha),
            proof: file.proof.or(self.proof),
            boxes: vec_or(self.boxes, file.boxes),
            h: file.h.or(self.h),
            r_w: file.r_w.or(self.r_w),
            shifts: file.shifts.or(self.shifts),
            param: file.param.or(self.param),
            values: vec_or(self.values, file.values),
            seed: file.seed.or(self.seed),
            json: file.json.or(self.json),
            csv: file.csv.or(self.csv),
        }
    }

    /// SHA-256 of the canonical JSON form, output paths excluded.
    pub fn hash(&self) -> String {
        let mut bare = self.clone();
        bare.json = None;
        bare.csv = None;
        let text = serde_json::to_string(&bare).expect("configs serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn window(&self) -> Result<Rect, CliError> {
        self.window
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `window`".into()))?
            .to_rect()
            .map_err(|e| CliError::Config(format!("window: {e}")))
    }
}
