use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sureid::mc::mc_stein_check;
use sureid::quad::QuadConfig;
use sureid::risk::{density_expectation, RiskEvaluator, RiskOperator};
use sureid::wavelet::{denoise, sure_select_with, DenoiseOptions, LevelReport, SelectOptions, Wavelet};
use sureid::{EstimatorExpr, KernelConfig, NoiseModel};

use crate::config::{default_matrix, resolve_model, EstimatorName, Format, ModelValue, RunConfig};
use crate::io::{num, read_values, sink, write_json, write_values};

const DEFAULT_THETAS: [f64; 5] = [-3.0, -1.0, 0.0, 0.7, 2.0];
const IDENTITY_TOL: f64 = 1e-6;
const MC_Z_MAX: f64 = 4.0;

fn kernel_config(cfg: &RunConfig) -> KernelConfig {
    match cfg.quad_tol {
        Some(t) => KernelConfig {
            quad: QuadConfig::with_tol(t),
            ..KernelConfig::default()
        },
        None => KernelConfig::default(),
    }
}

fn expression(name: EstimatorName, lambda: f64) -> Result<EstimatorExpr> {
    if !(lambda.is_finite() && lambda > 0.0) {
        bail!("lambda must be positive, got {lambda}");
    }
    Ok(match name {
        EstimatorName::Soft => EstimatorExpr::soft(lambda),
        EstimatorName::Mid => EstimatorExpr::mid(lambda),
    })
}

/// Centers a model that carries a nonzero mean.
fn centered(model: NoiseModel) -> Result<NoiseModel> {
    let m = model.mean();
    if m != 0.0 && model.require_centered().is_err() {
        return Ok(model.shift(-m)?);
    }
    Ok(model)
}

fn grid(range: (f64, f64, f64)) -> Vec<f64> {
    let (a, b, step) = range;
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

pub fn risk_curve(cfg: &RunConfig) -> Result<()> {
    let model = centered(resolve_model(cfg.model.as_ref())?)?;
    let expr = expression(cfg.estimator.unwrap_or(EstimatorName::Soft), cfg.lambda.unwrap_or(2.0))?;
    let ev = RiskEvaluator::with_config(&model, &expr, kernel_config(cfg))
        .with_context(|| format!("risk estimate for {model} and {}", expr.label()))?;
    let xs = grid(cfg.range);
    let rows = xs.par_iter().map(|&x| ev.estimate(x)).collect::<Vec<_>>();
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(cfg.out.as_deref(), &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(cfg.out.as_deref())?);
            w.write_record(["x", "risk", "variance_term", "g_squared", "cross_term"])?;
            for r in &rows {
                w.write_record([num(r.x), num(r.value), num(r.variance_term), num(r.g_squared), num(r.cross_term)])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct QuadCheck {
    kernel_side: f64,
    direct_side: f64,
    abs_diff: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct McCheck {
    kernel_side: f64,
    direct_side: f64,
    se: f64,
    z: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct RiskCheck {
    mean_estimate: f64,
    expected_risk: f64,
    abs_diff: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct Cell {
    model: String,
    estimator: String,
    theta: f64,
    seed: u64,
    /// Absent for models without a pointwise density.
    quadrature: Option<QuadCheck>,
    monte_carlo: McCheck,
    unbiasedness: Option<RiskCheck>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    passed: bool,
    failures: usize,
    samples: usize,
    seed: u64,
    corrupt_kernel: bool,
    identity_tol: f64,
    mc_z_max: f64,
    cells: Vec<Cell>,
}

struct Case {
    name: String,
    model: NoiseModel,
    expr: EstimatorExpr,
    theta: f64,
    seed: u64,
}

fn run_cell(case: &Case, cfg: &RunConfig, sign: f64) -> Result<Cell> {
    let Case { name, model, expr, theta, seed } = case;
    let theta = *theta;
    let kcfg = kernel_config(cfg);
    let op = RiskOperator::with_config(model, kcfg)?;
    let g = expr.residual();
    let kg = |y: f64| sign * op.apply(&g, y);
    let quad = kcfg.quad;
    let breaks: Vec<f64> = g.knots().iter().map(|k| k - theta).collect();

    let quadrature = match (
        density_expectation(model, |x| kg(x + theta), &breaks, &quad)?,
        density_expectation(model, |x| x * g.eval(x + theta), &breaks, &quad)?,
    ) {
        (Some((l, _)), Some((r, _))) => Some(QuadCheck {
            kernel_side: l,
            direct_side: r,
            abs_diff: (l - r).abs(),
            passed: (l - r).abs() < IDENTITY_TOL,
        }),
        _ => None,
    };

    let mc = mc_stein_check(model, |y| g.eval(y), kg, theta, cfg.samples, *seed)?;
    let z = mc.z();
    let monte_carlo = McCheck {
        kernel_side: mc.lhs,
        direct_side: mc.rhs,
        se: mc.se,
        z,
        passed: z < MC_Z_MAX,
    };

    let var = model.variance();
    let rhat = |y: f64| {
        let gy = g.eval(y);
        var + gy * gy + 2.0 * kg(y)
    };
    let loss = |x: f64| {
        let e = expr.eval(x + theta) - theta;
        e * e
    };
    let unbiasedness = match (
        density_expectation(model, |x| rhat(x + theta), &breaks, &quad)?,
        density_expectation(model, loss, &breaks, &quad)?,
    ) {
        (Some((m, _)), Some((r, _))) => Some(RiskCheck {
            mean_estimate: m,
            expected_risk: r,
            abs_diff: (m - r).abs(),
            passed: (m - r).abs() < IDENTITY_TOL,
        }),
        _ => None,
    };

    let passed = quadrature.as_ref().is_none_or(|q| q.passed)
        && monte_carlo.passed
        && unbiasedness.as_ref().is_none_or(|u| u.passed);
    Ok(Cell {
        model: name.clone(),
        estimator: expr.label(),
        theta,
        seed: *seed,
        quadrature,
        monte_carlo,
        unbiasedness,
        passed,
    })
}

/// Returns whether every check passed; the report is written either way.
pub fn verify(cfg: &RunConfig) -> Result<bool> {
    let models: Vec<(String, NoiseModel)> = match &cfg.model {
        None => default_matrix(),
        Some(v) => {
            let label = match v {
                ModelValue::Name(s) => s.clone(),
                ModelValue::Spec(_) => "config".to_string(),
            };
            vec![(label, centered(resolve_model(Some(v))?)?)]
        }
    };
    let thetas = cfg.theta.clone().unwrap_or_else(|| DEFAULT_THETAS.to_vec());
    let estimators = match cfg.estimator {
        Some(e) => vec![e],
        None => vec![EstimatorName::Soft, EstimatorName::Mid],
    };
    let lambdas = match cfg.lambda {
        Some(l) => vec![l],
        None => vec![1.0, 2.0],
    };
    let mut cases = Vec::new();
    for (name, model) in &models {
        for &e in &estimators {
            for &l in &lambdas {
                for &theta in &thetas {
                    cases.push(Case {
                        name: name.clone(),
                        model: model.clone(),
                        expr: expression(e, l)?,
                        theta,
                        seed: cfg.seed.wrapping_add(cases.len() as u64),
                    });
                }
            }
        }
    }
    let sign = if cfg.corrupt_kernel { -1.0 } else { 1.0 };
    let cells = cases
        .par_iter()
        .map(|c| run_cell(c, cfg, sign).with_context(|| format!("{} {} θ={}", c.name, c.expr.label(), c.theta)))
        .collect::<Result<Vec<_>>>()?;
    let failures = cells.iter().filter(|c| !c.passed).count();
    let report = VerifyReport {
        passed: failures == 0,
        failures,
        samples: cfg.samples,
        seed: cfg.seed,
        corrupt_kernel: cfg.corrupt_kernel,
        identity_tol: IDENTITY_TOL,
        mc_z_max: MC_Z_MAX,
        cells,
    };
    write_json(cfg.out.as_deref(), &report)?;
    Ok(report.passed)
}

fn input_values(cfg: &RunConfig) -> Result<Vec<f64>> {
    let Some(path) = cfg.input.as_deref() else {
        bail!("--input is required");
    };
    read_values(path)
}

pub fn select_threshold(cfg: &RunConfig) -> Result<()> {
    let coeffs = input_values(cfg)?;
    let model = centered(resolve_model(cfg.model.as_ref())?)?;
    let n_total = cfg.n_total.unwrap_or(coeffs.len());
    let opts = SelectOptions {
        max_candidates: cfg.max_candidates,
        ..SelectOptions::default()
    };
    let choice = sure_select_with(&coeffs, &model, n_total, &opts)?;
    write_json(cfg.out.as_deref(), &choice)
}

#[derive(Debug, Serialize)]
struct DenoiseReport {
    wavelet: Wavelet,
    levels: usize,
    keep_low: usize,
    len: usize,
    bands: Vec<LevelReport>,
}

pub fn denoise_cmd(cfg: &RunConfig) -> Result<()> {
    let signal = input_values(cfg)?;
    let model = centered(resolve_model(cfg.model.as_ref())?)?;
    let opts = DenoiseOptions {
        wavelet: cfg.wavelet,
        levels: cfg.levels,
        keep_low: cfg.keep_low,
        fixed_lambda: cfg.lambda,
        select: SelectOptions {
            max_candidates: cfg.max_candidates,
            ..SelectOptions::default()
        },
    };
    let res = denoise(&signal, &model, &opts)?;
    write_values(cfg.out.as_deref(), &res.signal)?;
    if let Some(p) = cfg.report.as_deref() {
        write_json(
            Some(p),
            &DenoiseReport {
                wavelet: cfg.wavelet,
                levels: cfg.levels,
                keep_low: cfg.keep_low,
                len: signal.len(),
                bands: res.report,
            },
        )?;
    }
    Ok(())
}
