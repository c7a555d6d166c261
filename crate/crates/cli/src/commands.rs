//! Command bodies. Each returns whether its checks passed.

use serde::Serialize;

use twoweight::constants::examples::{a2_rows, exp_pair, meeting_intervals, swapped_ratio, A2Row};
use twoweight::constants::{
    a2, a2_alpha, testing_constant, ConstantReport, CubeFamily, Resolution, Variant,
};
use twoweight::geometry::{Cube, Rational, ShiftedGrid};
use twoweight::measures::{CellSet, Lattice, Measure, MeasureKind, MeasureParams, MeasureSpec, RectSpec};
use twoweight::operators::Operator;
use twoweight::proofcheck::{
    fractional_instance, maximal_instance, verify_fractional, verify_maximal, FracParams, Generator, Instance,
    InstanceSpec, ProofParams,
};
use twoweight::whitney::{whitney_decompose, WhitneyConfig, WhitneyReport};

use crate::config::RunConfig;
use crate::output::{emit, Meta, Table};
use crate::CliError;

fn ri(n: i128) -> Rational {
    Rational::int(n)
}

fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d).expect("nonzero denominator")
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

fn meta(command: &str, cfg: &RunConfig, res: String) -> Meta {
    Meta::new(command, cfg.hash(), cfg.seed.unwrap_or(0), res)
}

fn finish<T: Serialize>(meta: &Meta, cfg: &RunConfig, pass: bool, report: &T, table: Option<&Table>) -> Result<bool, CliError> {
    emit(meta, pass, report, table, cfg.json.as_deref(), cfg.csv.as_deref())?;
    Ok(pass)
}

/// `∫_1^R e^y / y^2 dy` by Simpson's rule.
pub fn swapped_oracle(r: f64) -> f64 {
    let n = 20_000;
    let h = (r - 1.0) / n as f64;
    let f = |y: f64| y.exp() / (y * y);
    let inner: f64 = (1..n).map(|i| f(1.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(1.0) + f(r) + inner) * h / 3.0
}

#[derive(Serialize)]
struct SweepSummary {
    operator: String,
    intervals: usize,
    max_ratio: f64,
    witness: Option<Cube>,
    bound: Option<f64>,
}

#[derive(Serialize)]
struct CounterexampleReport {
    which: String,
    alpha: Option<f64>,
    a2: Vec<A2Row>,
    sweep: SweepSummary,
}

#[derive(Serialize)]
struct SwappedRow {
    r: Rational,
    ratio: f64,
    oracle_lower: f64,
}

#[derive(Serialize)]
struct SwappedReport {
    rows: Vec<SwappedRow>,
    growth_10_over_5: Option<f64>,
    oracle_growth: f64,
}

fn radii(cfg: &RunConfig, default: &[i128]) -> Vec<Rational> {
    if cfg.values.is_empty() {
        default.iter().map(|r| ri(*r)).collect()
    } else {
        cfg.values.clone()
    }
}

pub fn counterexample(which: &str, cfg: &RunConfig) -> Result<bool, CliError> {
    let res = match cfg.resolution {
        Some(r) => r,
        None => Resolution::PerSide(32),
    };
    let m = meta(&format!("counterexample {which}"), cfg, format!("{res:?}"));
    match which {
        "maximal" | "fractional" => {
            let fractional = which == "fractional";
            let alpha = if fractional { cfg.alpha.unwrap_or(0.5) } else { 0.0 };
            let rows = a2_rows(alpha, &radii(cfg, &[2, 5, 10]))?;
            let (sigma, omega) = exp_pair();
            let fam = meeting_intervals(ri(-6), ri(8), rat(1, 16))?;
            let (op, bound) = if fractional {
                (Operator::FracIntegral { alpha }, None)
            } else {
                (Operator::Maximal, Some(6f64.exp() / 3.0))
            };
            let rep = testing_constant(op, &sigma, &omega, &fam, Variant::Lambda { lambda: ri(3) }, res)?;
            let mut pass = rows.iter().all(|r| (r.computed - r.closed_form).abs() <= 0.01 * r.closed_form);
            if let Some(b) = bound {
                pass &= rep.value_sq <= b;
            }
            let mut table = Table::new(&["R", "computed", "closed_form"]);
            for r in &rows {
                table.push(vec![r.r.to_string(), fmt_f(r.computed), fmt_f(r.closed_form)]);
            }
            let report = CounterexampleReport {
                which: which.into(),
                alpha: fractional.then_some(alpha),
                a2: rows,
                sweep: SweepSummary {
                    operator: op.name(),
                    intervals: fam.len(),
                    max_ratio: rep.value_sq,
                    witness: rep.witness.cube,
                    bound,
                },
            };
            finish(&m, cfg, pass, &report, Some(&table))
        }
        "swapped" => {
            let rs = radii(cfg, &[2, 3, 4, 5, 6, 7, 8, 9, 10]);
            let mut rows = Vec::new();
            let mut table = Table::new(&["R", "ratio", "oracle_lower"]);
            for r in rs {
                let per_side = match res {
                    Resolution::PerSide(p) => Resolution::PerSide(p * r.ceil().max(1) as u32),
                    other => other,
                };
                let ratio = swapped_ratio(Operator::Maximal, r, per_side)?;
                let oracle_lower = swapped_oracle(r.to_f64());
                table.push(vec![r.to_string(), fmt_f(ratio), fmt_f(oracle_lower)]);
                rows.push(SwappedRow { r, ratio, oracle_lower });
            }
            let at = |x: i128| rows.iter().find(|row| row.r == ri(x)).map(|row| row.ratio);
            let growth = at(10).zip(at(5)).map(|(a, b)| a / b);
            let pass = growth.is_none_or(|g| g >= 10.0);
            let report =
                SwappedReport { rows, growth_10_over_5: growth, oracle_growth: swapped_oracle(10.0) / swapped_oracle(5.0) };
            finish(&m, cfg, pass, &report, Some(&table))
        }
        other => Err(CliError::Config(format!("unknown counterexample `{other}`"))),
    }
}

/// Built-in weight pairs for `--pair`.
pub fn pair_specs(name: &str) -> Result<(MeasureSpec, MeasureSpec), CliError> {
    let exp = MeasureSpec {
        kind: MeasureKind::ExpDensity,
        params: MeasureParams { dim: Some(1), rate: Some(1.0), masses: None },
        support: None,
        h: None,
    };
    let unit = MeasureSpec {
        kind: MeasureKind::IndicatorDensity,
        params: MeasureParams::default(),
        support: Some(RectSpec { lo: vec![ri(0)], hi: vec![ri(1)] }),
        h: None,
    };
    let leb = MeasureSpec {
        kind: MeasureKind::Lebesgue,
        params: MeasureParams { dim: Some(1), ..MeasureParams::default() },
        support: None,
        h: None,
    };
    match name {
        "counterexample" => Ok((exp, unit)),
        "swapped" => Ok((unit, exp)),
        "lebesgue" => Ok((leb.clone(), leb)),
        other => Err(CliError::Config(format!("unknown pair `{other}` (counterexample, swapped, lebesgue)"))),
    }
}

fn operator(cfg: &RunConfig) -> Result<Operator, CliError> {
    let alpha = cfg.alpha.unwrap_or(0.5);
    match cfg.operator.as_deref().unwrap_or("M") {
        "M" => Ok(Operator::Maximal),
        "M_alpha" => Ok(Operator::FracMaximal { alpha }),
        "I_alpha" => Ok(Operator::FracIntegral { alpha }),
        other => Err(CliError::Config(format!("unknown operator `{other}` (M, M_alpha, I_alpha)"))),
    }
}

struct Setup {
    sigma: Measure,
    omega: Measure,
    family: CubeFamily,
    res: Resolution,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let build = |spec: &Option<MeasureSpec>, name: &str| -> Result<Measure, CliError> {
        let spec = spec.as_ref().ok_or_else(|| CliError::Config(format!("missing `{name}` measure")))?;
        spec.build().map_err(|e| CliError::Config(format!("{name}: {e}")))
    };
    let sigma = build(&cfg.sigma, "sigma")?;
    let omega = build(&cfg.omega, "omega")?;
    let window = cfg.window()?;
    let family = match &cfg.family {
        Some(f) => f.build(&window)?,
        None => {
            let side = window.hi[0] - window.lo[0];
            CubeFamily::aligned(&window, side / ri(16)).map_err(|e| CliError::Config(format!("family: {e}")))?
        }
    };
    Ok(Setup { sigma, omega, family, res: cfg.resolution.unwrap_or(Resolution::PerSide(16)) })
}

fn report_row(r: &ConstantReport) -> Vec<String> {
    vec![
        r.constant.clone(),
        r.variant.map(|v| serde_json::to_string(&v).expect("variants serialize")).unwrap_or_default(),
        fmt_f(r.value),
        fmt_f(r.value_sq),
        r.witness.cube.as_ref().map(|c| c.to_string()).unwrap_or_default(),
        r.family_size.to_string(),
        r.admissible_size.to_string(),
        r.res.clone(),
    ]
}

const REPORT_HEADER: [&str; 8] =
    ["constant", "variant", "value", "value_sq", "witness", "family_size", "admissible_size", "res"];

fn compute(s: &Setup, cfg: &RunConfig, id: &str, variants: &[Variant]) -> Result<Vec<ConstantReport>, CliError> {
    Ok(match id {
        "a2" => vec![a2(&s.sigma, &s.omega, &s.family)?],
        "a2-alpha" => vec![a2_alpha(cfg.alpha.unwrap_or(0.5), &s.sigma, &s.omega, &s.family)?],
        "testing" => {
            let op = operator(cfg)?;
            variants
                .iter()
                .map(|v| testing_constant(op, &s.sigma, &s.omega, &s.family, *v, s.res))
                .collect::<Result<Vec<_>, _>>()?
        }
        other => return Err(CliError::Config(format!("unknown constant `{other}` (a2, a2-alpha, testing)"))),
    })
}

pub fn constants(cfg: &RunConfig) -> Result<bool, CliError> {
    let s = setup(cfg)?;
    let ids = if cfg.constants.is_empty() { vec!["a2".to_string(), "testing".to_string()] } else { cfg.constants.clone() };
    let variants = if cfg.variants.is_empty() { vec![Variant::Plain] } else { cfg.variants.clone() };
    let mut reports = Vec::new();
    for id in &ids {
        reports.extend(compute(&s, cfg, id, &variants)?);
    }
    let mut table = Table::new(&REPORT_HEADER);
    for r in &reports {
        table.push(report_row(r));
    }
    let m = meta("constants", cfg, format!("{:?}", s.res));
    finish(&m, cfg, true, &reports, Some(&table))
}

pub fn sweep(cfg: &RunConfig) -> Result<bool, CliError> {
    let s = setup(cfg)?;
    let param = cfg.param.as_deref().ok_or_else(|| CliError::Config("missing `param` (lambda, d, res)".into()))?;
    if cfg.values.is_empty() {
        return Err(CliError::Config("missing `values`".into()));
    }
    let op = operator(cfg)?;
    let base_lambda = ri(3);
    let mut table = Table::new(&["param", "value", "constant", "value_sq", "witness", "admissible_size"]);
    let mut reports = Vec::new();
    for v in &cfg.values {
        let (variant, res) = match param {
            "lambda" => (Variant::Lambda { lambda: *v }, s.res),
            "d" => (Variant::DLambda { lambda: base_lambda, d: v.to_f64() }, s.res),
            "res" => {
                if !v.is_integer() || !v.is_positive() {
                    return Err(CliError::Config(format!("res value {v} must be a positive integer")));
                }
                (cfg.variants.first().copied().unwrap_or(Variant::Plain), Resolution::PerSide(v.numer() as u32))
            }
            other => return Err(CliError::Config(format!("unknown sweep parameter `{other}` (lambda, d, res)"))),
        };
        let r = testing_constant(op, &s.sigma, &s.omega, &s.family, variant, res)?;
        table.push(vec![
            param.to_string(),
            v.to_string(),
            fmt_f(r.value),
            fmt_f(r.value_sq),
            r.witness.cube.as_ref().map(|c| c.to_string()).unwrap_or_default(),
            r.admissible_size.to_string(),
        ]);
        reports.push(r);
    }
    let m = meta("sweep", cfg, format!("{:?}", s.res));
    finish(&m, cfg, true, &reports, Some(&table))
}

#[derive(Serialize)]
struct WhitneyOutput {
    cubes: Vec<twoweight::whitney::WhitneyCube>,
    report: WhitneyReport,
}

pub fn whitney(cfg: &RunConfig) -> Result<bool, CliError> {
    let window = cfg.window()?;
    let h = cfg.h.ok_or_else(|| CliError::Config("missing `h`".into()))?;
    if cfg.boxes.is_empty() {
        return Err(CliError::Config("missing `boxes`".into()));
    }
    let lattice = Lattice::over_rect(&window, h).map_err(|e| CliError::Config(format!("lattice: {e}")))?;
    let mut set = CellSet::empty(&lattice);
    for b in &cfg.boxes {
        let rect = b.to_rect().map_err(|e| CliError::Config(format!("box: {e}")))?;
        set = set.union(&CellSet::inside_rect(&lattice, &rect))?;
    }
    let n = lattice.dim();
    let grid = ShiftedGrid::new(cfg.shifts.clone().unwrap_or_else(|| vec![0; n]))?;
    let wc = WhitneyConfig::new(cfg.r_w.unwrap_or(ri(4)), 3, grid)?;
    let fam = whitney_decompose(&set, &wc)?;
    let report = fam.verify();
    let mut table = Table::new(&["level", "cube", "floor"]);
    for q in fam.cubes() {
        table.push(vec![q.level.to_string(), q.cube.to_string(), q.floor.to_string()]);
    }
    let pass = report.all_pass();
    let m = meta("whitney", cfg, format!("h = {h}"));
    finish(&m, cfg, pass, &WhitneyOutput { cubes: fam.cubes().to_vec(), report }, Some(&table))
}

/// Bundled instances of `verify`.
pub const BUNDLED: [&str; 5] = ["lebesgue-smoke", "lacunary-sigma", "random", "point-mass", "m1-negative"];

pub struct VerifyArgs {
    pub instance: Option<String>,
    pub spec: Option<std::path::PathBuf>,
    pub dim: usize,
    pub fractional: bool,
}

pub fn verify(args: &VerifyArgs, cfg: &RunConfig) -> Result<bool, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let alpha = cfg.alpha.unwrap_or(0.5);
    let mut proof = cfg.proof.clone();
    let inst: Instance = match (&args.instance, &args.spec) {
        (Some(name), None) => {
            let generator = match name.as_str() {
                "m1-negative" => {
                    let base = ProofParams::defaults(args.dim);
                    proof = Some(ProofParams { m: 1, ..proof.unwrap_or(base) });
                    Generator::Random
                }
                other => Generator::parse(other).map_err(|_| {
                    CliError::Config(format!("unknown instance `{other}`; bundled: {}", BUNDLED.join(", ")))
                })?,
            };
            if args.fractional {
                fractional_instance(generator, seed, alpha)?
            } else {
                maximal_instance(generator, args.dim, seed)?
            }
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read instance {}: {e}", path.display())))?;
            InstanceSpec::from_json(&text).and_then(|s| s.build()).map_err(|e| CliError::Config(e.to_string()))?
        }
        _ => return Err(CliError::Config("give exactly one of an instance name or --spec".into())),
    };
    let res = format!("h = {}", inst.lattice.spacing());
    if args.fractional {
        let params = FracParams::defaults(alpha);
        let rep = verify_fractional(&inst, &params)?;
        let m = meta("verify", cfg, res);
        return finish(&m, cfg, rep.pass(), &rep, None);
    }
    let params = proof.unwrap_or_else(|| ProofParams::defaults(inst.dim()));
    params.validate()?;
    for w in params.warnings(inst.dim()) {
        eprintln!("warning: {w}");
    }
    let rep = verify_maximal(&inst, &params)?;
    let m = meta("verify", cfg, res);
    finish(&m, cfg, rep.pass(), &rep, None)
}
