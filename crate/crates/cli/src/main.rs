//! `twoweight`: counterexample reproduction, constant sweeps, Whitney runs
//! and proof-machinery verification.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twoweight::constants::Resolution;
use twoweight::geometry::{Rational, Rect};
use twoweight::measures::{MeasureSpec, RectSpec};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Lib(#[from] twoweight::Error),
}

#[derive(Parser)]
#[command(name = "twoweight", version, about = "Two-weight constants and proof-machinery checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; its fields override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write the CSV table here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cells per cube side when sampling operator fields.
    #[arg(long, global = true)]
    res: Option<u32>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct Pair {
    /// Built-in pair: counterexample, swapped, lebesgue.
    #[arg(long)]
    pair: Option<String>,
    /// Measure spec file for sigma.
    #[arg(long)]
    sigma: Option<PathBuf>,
    /// Measure spec file for omega.
    #[arg(long)]
    omega: Option<PathBuf>,
    /// Window as a box literal, e.g. `[-4,4)` or `[0,2)x[0,1)`.
    #[arg(long)]
    window: Option<String>,
    /// Operator of testing constants: M, M_alpha, I_alpha.
    #[arg(long)]
    operator: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Maximal,
    Fractional,
    Swapped,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the exponential counterexample pair and its swapped variant.
    Counterexample {
        which: Which,
        /// Radii R of the A2 table (swapped: of the ratio table).
        #[arg(long, value_delimiter = ',')]
        values: Vec<Rational>,
        #[command(flatten)]
        common: Common,
    },
    /// Muckenhoupt and testing constants over a cube family.
    Constants {
        #[command(flatten)]
        pair: Pair,
        /// Constants to compute: a2, a2-alpha, testing.
        #[arg(long, value_delimiter = ',')]
        constants: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Whitney decomposition of a union of boxes.
    Whitney {
        /// Boxes as literals like `[0,2)x[0,1)`; repeatable.
        #[arg(long = "box")]
        boxes: Vec<String>,
        #[arg(long)]
        window: Option<String>,
        /// Cell side, e.g. `1/64`.
        #[arg(long)]
        h: Option<Rational>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the proof-machinery checks on an instance.
    Verify {
        /// Bundled instance: lebesgue-smoke, lacunary-sigma, random, point-mass, m1-negative.
        instance: Option<String>,
        /// Instance spec file instead of a bundled name.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Run the fractional-integral suite.
        #[arg(long)]
        fractional: bool,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        m0: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Testing constants across values of lambda, D or the resolution.
    Sweep {
        #[command(flatten)]
        pair: Pair,
        /// Parameter to sweep: lambda, d, res.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<Rational>,
        #[command(flatten)]
        common: Common,
    },
}

fn window_spec(text: &str) -> Result<RectSpec, CliError> {
    let rect: Rect = text.parse().map_err(|e| CliError::Config(format!("box `{text}`: {e}")))?;
    Ok(RectSpec::from(&rect))
}

fn read_measure(path: &PathBuf) -> Result<MeasureSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read measure file {}: {e}", path.display())))?;
    MeasureSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn base_config(name: &str, common: &Common) -> RunConfig {
    RunConfig {
        command: Some(name.into()),
        json: common.json.clone(),
        csv: common.csv.clone(),
        seed: common.seed,
        resolution: common.res.map(Resolution::PerSide),
        alpha: common.alpha,
        ..RunConfig::default()
    }
}

fn with_pair(mut cfg: RunConfig, pair: &Pair) -> Result<RunConfig, CliError> {
    if let Some(name) = &pair.pair {
        let (s, o) = commands::pair_specs(name)?;
        cfg.sigma = Some(s);
        cfg.omega = Some(o);
    }
    if let Some(p) = &pair.sigma {
        cfg.sigma = Some(read_measure(p)?);
    }
    if let Some(p) = &pair.omega {
        cfg.omega = Some(read_measure(p)?);
    }
    if let Some(w) = &pair.window {
        cfg.window = Some(window_spec(w)?);
    }
    cfg.operator = pair.operator.clone();
    Ok(cfg)
}

fn finalize(cfg: RunConfig, common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(path) => Ok(cfg.overridden_by(RunConfig::load(path)?)),
        None => Ok(cfg),
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Counterexample { which, values, common } => {
            let name = match which {
                Which::Maximal => "maximal",
                Which::Fractional => "fractional",
                Which::Swapped => "swapped",
            };
            let mut cfg = base_config(&format!("counterexample {name}"), &common);
            cfg.values = values;
            let cfg = finalize(cfg, &common)?;
            commands::counterexample(name, &cfg)
        }
        Command::Constants { pair, constants, common } => {
            let mut cfg = with_pair(base_config("constants", &common), &pair)?;
            cfg.constants = constants;
            commands::constants(&finalize(cfg, &common)?)
        }
        Command::Whitney { boxes, window, h, common } => {
            let mut cfg = base_config("whitney", &common);
            cfg.boxes = boxes.iter().map(|b| window_spec(b)).collect::<Result<_, _>>()?;
            cfg.window = window.as_deref().map(window_spec).transpose()?;
            cfg.h = h;
            commands::whitney(&finalize(cfg, &common)?)
        }
        Command::Verify { instance, spec, dim, fractional, m, m0, common } => {
            let mut cfg = base_config("verify", &common);
            if m.is_some() || m0.is_some() {
                let base = twoweight::proofcheck::ProofParams::defaults(dim);
                cfg.proof = Some(twoweight::proofcheck::ProofParams {
                    m: m.unwrap_or(base.m),
                    m0: m0.unwrap_or(base.m0),
                    ..base
                });
            }
            let cfg = finalize(cfg, &common)?;
            commands::verify(&commands::VerifyArgs { instance, spec, dim, fractional }, &cfg)
        }
        Command::Sweep { pair, param, values, common } => {
            let mut cfg = with_pair(base_config("sweep", &common), &pair)?;
            cfg.param = param;
            cfg.values = values;
            commands::sweep(&finalize(cfg, &common)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
