//! Command-line flags, the optional JSON config file, and their merge
//! (flags over file over defaults).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use sureid::noise::ModelSpec;
use sureid::wavelet::Wavelet;
use sureid::NoiseModel;

#[derive(Debug, Parser)]
#[command(name = "sureid", version, about = "Unbiased risk estimates under infinitely divisible noise")]
pub struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Risk estimate r̂(x) over a grid of observations.
    RiskCurve(Flags),
    /// Check the Stein identity and risk unbiasedness over a test matrix.
    Verify(Flags),
    /// Pick a soft threshold for a vector of coefficients.
    SelectThreshold(Flags),
    /// Wavelet-denoise a signal with per-level thresholds.
    Denoise(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorName {
    Soft,
    Mid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Model name (normal, laplace, gamma[:shape], sech, uniform), a JSON
    /// model file, or inline JSON.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorName>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Observation grid `start:end:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Comma-separated shifts.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub keep_low: Option<usize>,
    /// Input CSV with a `value` column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where `denoise` writes its JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Sample size behind the universal threshold (defaults to the input length).
    #[arg(long)]
    pub n_total: Option<usize>,
    /// Cap the number of data-point threshold candidates.
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Flip the sign of the kernel; `verify` must then fail.
    #[arg(long)]
    pub corrupt_kernel: bool,
}

/// Config file contents; every field is optional and unknown ones are errors.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelValue>,
    pub estimator: Option<EstimatorName>,
    pub lambda: Option<f64>,
    pub range: Option<String>,
    pub theta: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub wavelet: Option<String>,
    pub levels: Option<usize>,
    pub keep_low: Option<usize>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub format: Option<Format>,
    pub n_total: Option<usize>,
    pub max_candidates: Option<usize>,
    pub quad_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelValue {
    Name(String),
    Spec(ModelSpec),
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Option<ModelValue>,
    pub estimator: Option<EstimatorName>,
    pub lambda: Option<f64>,
    pub range: (f64, f64, f64),
    pub theta: Option<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
    pub wavelet: Wavelet,
    pub levels: usize,
    pub keep_low: usize,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub format: Option<Format>,
    pub n_total: Option<usize>,
    pub max_candidates: Option<usize>,
    pub quad_tol: Option<f64>,
    pub corrupt_kernel: bool,
}

fn parse_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("range must look like start:end:step, got '{s}'");
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}' in range")))
        .collect::<Result<_>>()?;
    let (a, b, step) = (v[0], v[1], v[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0 && b >= a) {
        bail!("range needs start <= end and a positive step, got '{s}'");
    }
    if (b - a) / step > 1e8 {
        bail!("range '{s}' has too many points");
    }
    Ok((a, b, step))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number '{p}'")))
        .collect()
}

impl RunConfig {
    pub fn resolve(flags: Flags, file: Option<&Path>) -> Result<Self> {
        let f = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str::<FileConfig>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let quad_tol = match std::env::var("SUREID_QUAD_TOL") {
            Ok(v) => Some(v.trim().parse::<f64>().context("SUREID_QUAD_TOL must be a number")?),
            Err(_) => f.quad_tol,
        };
        if let Some(t) = quad_tol {
            if !(t.is_finite() && t > 0.0) {
                bail!("quadrature tolerance must be positive, got {t}");
            }
        }
        let range = parse_range(flags.range.as_deref().or(f.range.as_deref()).unwrap_or("-6:6:0.01"))?;
        let theta = match flags.theta {
            Some(s) => Some(parse_list(&s)?),
            None => f.theta,
        };
        let wavelet: Wavelet = flags.wavelet.or(f.wavelet).as_deref().unwrap_or("d4").parse()?;
        let cfg = Self {
            model: flags.model.map(ModelValue::Name).or(f.model),
            estimator: flags.estimator.or(f.estimator),
            lambda: flags.lambda.or(f.lambda),
            range,
            theta,
            samples: flags.samples.or(f.samples).unwrap_or(100_000),
            seed: flags.seed.or(f.seed).unwrap_or(0),
            wavelet,
            levels: flags.levels.or(f.levels).unwrap_or(4),
            keep_low: flags.keep_low.or(f.keep_low).unwrap_or(1),
            input: flags.input.or(f.input),
            out: flags.out.or(f.out),
            report: flags.report.or(f.report),
            format: flags.format.or(f.format),
            n_total: flags.n_total.or(f.n_total),
            max_candidates: flags.max_candidates.or(f.max_candidates),
            quad_tol,
            corrupt_kernel: flags.corrupt_kernel,
        };
        if let Some(l) = cfg.lambda {
            if !(l.is_finite() && l >= 0.0) {
                bail!("lambda must be a non-negative number, got {l}");
            }
        }
        if cfg.samples == 0 {
            bail!("samples must be positive");
        }
        Ok(cfg)
    }
}

/// Unit-variance, zero-mean named model.
pub fn named_model(name: &str) -> Result<NoiseModel> {
    let lower = name.trim().to_ascii_lowercase();
    let (base, param) = match lower.split_once(':') {
        Some((b, p)) => (b.to_string(), Some(p.parse::<f64>().with_context(|| format!("bad parameter in '{name}'"))?)),
        None => (lower.clone(), None),
    };
    let m = match (base.as_str(), param) {
        ("normal" | "gaussian", None) => NoiseModel::normal(1.0)?,
        ("laplace", None) => NoiseModel::laplace(1.0)?,
        ("gamma", t) => {
            let t = t.unwrap_or(2.0);
            NoiseModel::centered_gamma(t)?.scale(1.0 / t.sqrt())?
        }
        ("sech" | "hyperbolic_secant", None) => NoiseModel::sech(),
        ("uniform", None) => NoiseModel::uniform(3f64.sqrt())?,
        _ => bail!(
            "unknown model '{name}'; expected normal, laplace, gamma[:shape], sech, uniform, a JSON file or inline JSON"
        ),
    };
    Ok(m)
}

/// Resolves a model argument; `None` means the default (Laplace).
pub fn resolve_model(value: Option<&ModelValue>) -> Result<NoiseModel> {
    match value {
        None => named_model("laplace"),
        Some(ModelValue::Spec(s)) => Ok(s.to_model()?),
        Some(ModelValue::Name(s)) => {
            let t = s.trim();
            if t.starts_with('{') {
                return Ok(ModelSpec::from_json(t)?.to_model()?);
            }
            let p = Path::new(t);
            if p.is_file() {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading model {}", p.display()))?;
                return Ok(ModelSpec::from_json(&text)
                    .with_context(|| format!("parsing model {}", p.display()))?
                    .to_model()?);
            }
            named_model(t)
        }
    }
}

/// Models of the default verification matrix.
pub fn default_matrix() -> Vec<(String, NoiseModel)> {
    ["normal", "laplace", "gamma", "sech", "uniform"]
        .iter()
        .map(|n| (n.to_string(), named_model(n).expect("built-in model")))
        .collect()
}
