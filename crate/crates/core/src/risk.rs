//! Unbiased risk estimates `r̂(x) = σ² + g(x)² + 2 K(g)(x)` for estimators
//! `d = id + g`, the uniform special case, expected-risk oracles and the
//! coordinatewise multivariate form.

use serde::Serialize;

use crate::error::{Result, SureError};
use crate::estimator::{BuildingBlock, EstimatorExpr};
use crate::kernel::{levy_k_triple, FnTest, KernelConfig, SteinOperator};
use crate::mc::mc_risk;
use crate::noise::{Family, NoiseModel};
use crate::quad::{integrate, QuadConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub x: f64,
    pub value: f64,
    /// Always the model variance.
    pub variance_term: f64,
    pub g_squared: f64,
    /// `2 K(g)(x)`.
    pub cross_term: f64,
    pub model_id: String,
    pub estimator_id: String,
}

/// `h` for uniform noise on `(−1, 1)`: 0 on `x ≤ 0`, and on `x ≥ 0` the
/// 2-periodic extension of `−x(x − 2)/2` on `[0, 2]`.
pub fn uniform_h(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x.rem_euclid(2.0);
    0.5 * y * (2.0 - y)
}

/// `r(θ) = ½∫₋₁¹ x (x + θ)⁺ dx`.
pub fn uniform_r(theta: f64) -> f64 {
    if theta <= -1.0 {
        0.0
    } else if theta >= 1.0 {
        1.0 / 3.0
    } else {
        1.0 / 6.0 + theta / 4.0 - theta.powi(3) / 12.0
    }
}

/// Stein operator of uniform noise on `(−a, a)` on piecewise-linear
/// estimators, built from `h_a(y) = a² uniform_h(y/a)` and the complement
/// `σ² − h_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformOperator {
    halfwidth: f64,
}

impl UniformOperator {
    pub fn new(halfwidth: f64) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(SureError::InvalidParameter(format!("uniform halfwidth {halfwidth}")));
        }
        Ok(Self { halfwidth })
    }

    pub fn variance(&self) -> f64 {
        self.halfwidth * self.halfwidth / 3.0
    }

    pub fn h(&self, y: f64) -> f64 {
        self.halfwidth * self.halfwidth * uniform_h(y / self.halfwidth)
    }

    pub fn block(&self, block: &BuildingBlock, x: f64) -> f64 {
        match *block {
            BuildingBlock::Identity => self.variance(),
            BuildingBlock::Constant { .. } => 0.0,
            BuildingBlock::HingePlus { knot } => self.h(x - knot),
            BuildingBlock::HingeMinus { knot } => self.variance() - self.h(x - knot),
        }
    }

    pub fn apply(&self, expr: &EstimatorExpr, x: f64) -> f64 {
        expr.terms.iter().map(|(c, b)| c * self.block(b, x)).sum()
    }
}

/// `K` on piecewise-linear estimators for any supported centered model.
#[derive(Debug, Clone)]
pub enum RiskOperator {
    Levy(SteinOperator),
    Uniform(UniformOperator),
}

impl RiskOperator {
    pub fn new(model: &NoiseModel) -> Result<Self> {
        Self::with_config(model, KernelConfig::default())
    }

    pub fn with_config(model: &NoiseModel, cfg: KernelConfig) -> Result<Self> {
        model.require_centered()?;
        match model.family() {
            Family::Uniform { halfwidth } => Ok(RiskOperator::Uniform(UniformOperator::new(
                halfwidth * model.scale_factor().abs(),
            )?)),
            _ => Ok(RiskOperator::Levy(SteinOperator::with_config(model, cfg)?)),
        }
    }

    pub fn apply(&self, expr: &EstimatorExpr, x: f64) -> f64 {
        match self {
            RiskOperator::Levy(op) => op.apply(expr, x),
            RiskOperator::Uniform(op) => op.apply(expr, x),
        }
    }
}

/// Risk estimates for one model and estimator at many points.
#[derive(Debug, Clone)]
pub struct RiskEvaluator {
    op: RiskOperator,
    g: EstimatorExpr,
    variance: f64,
    model_id: String,
    estimator_id: String,
}

impl RiskEvaluator {
    pub fn new(model: &NoiseModel, expr: &EstimatorExpr) -> Result<Self> {
        Self::with_config(model, expr, KernelConfig::default())
    }

    pub fn with_config(model: &NoiseModel, expr: &EstimatorExpr, cfg: KernelConfig) -> Result<Self> {
        Ok(Self {
            op: RiskOperator::with_config(model, cfg)?,
            g: expr.residual(),
            variance: model.variance(),
            model_id: model.to_string(),
            estimator_id: expr.label(),
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        let g = self.g.eval(x);
        self.variance + g * g + 2.0 * self.op.apply(&self.g, x)
    }

    pub fn estimate(&self, x: f64) -> RiskEstimate {
        let g = self.g.eval(x);
        let variance_term = self.variance;
        let g_squared = g * g;
        let cross_term = 2.0 * self.op.apply(&self.g, x);
        RiskEstimate {
            x,
            value: variance_term + g_squared + cross_term,
            variance_term,
            g_squared,
            cross_term,
            model_id: self.model_id.clone(),
            estimator_id: self.estimator_id.clone(),
        }
    }

    pub fn curve(&self, xs: &[f64]) -> Vec<RiskEstimate> {
        xs.iter().map(|&x| self.estimate(x)).collect()
    }
}

/// `r̂(x)` for the estimator `expr` under a centered model.
pub fn unbiased_risk(model: &NoiseModel, expr: &EstimatorExpr, x: f64) -> Result<RiskEstimate> {
    Ok(RiskEvaluator::new(model, expr)?.estimate(x))
}

/// Soft-thresholding risk estimate under uniform noise on `(−a, a)`.
pub fn unbiased_risk_uniform_soft(halfwidth: f64, lambda: f64, x: f64) -> Result<RiskEstimate> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(SureError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    unbiased_risk(&NoiseModel::uniform(halfwidth)?, &EstimatorExpr::soft(lambda), x)
}

/// How an expected risk was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRisk {
    pub value: f64,
    /// Quadrature error bound, or the Monte Carlo standard error.
    pub error: f64,
    pub method: RiskMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationOptions {
    pub quad: QuadConfig,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ExpectationOptions {
    fn default() -> Self {
        Self {
            quad: QuadConfig::with_tol(1e-11),
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// `∫ φ(x) f(x) dx` over a model with a density, splitting at `breaks`.
pub fn density_expectation<F: Fn(f64) -> f64>(
    model: &NoiseModel,
    phi: F,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<Option<(f64, f64)>> {
    let Some(((lo, hi), mut b)) = model.density_support() else {
        return Ok(None);
    };
    b.extend_from_slice(breaks);
    let r = integrate(|x| phi(x) * model.density(x).unwrap_or(0.0), lo, hi, &b, cfg)?;
    Ok(Some((r.value, r.abs_error)))
}

/// `E(d(X + θ) − θ)²`, by quadrature when the model has a density and by
/// Monte Carlo otherwise.
pub fn expected_risk(model: &NoiseModel, expr: &EstimatorExpr, theta: f64) -> Result<ExpectedRisk> {
    expected_risk_with(model, expr, theta, &ExpectationOptions::default())
}

pub fn expected_risk_with(
    model: &NoiseModel,
    expr: &EstimatorExpr,
    theta: f64,
    opts: &ExpectationOptions,
) -> Result<ExpectedRisk> {
    let breaks: Vec<f64> = expr.knots().iter().map(|k| k - theta).collect();
    let phi = |x: f64| {
        let e = expr.eval(x + theta) - theta;
        e * e
    };
    if let Some((value, error)) = density_expectation(model, phi, &breaks, &opts.quad)? {
        return Ok(ExpectedRisk {
            value,
            error,
            method: RiskMethod::Quadrature,
        });
    }
    let mc = mc_risk(model, expr, theta, opts.samples, opts.seed)?;
    Ok(ExpectedRisk {
        value: mc.value,
        error: mc.se,
        method: RiskMethod::MonteCarlo,
    })
}

/// `E r̂(X + θ)` by quadrature, for models with a density.
pub fn mean_risk_estimate(model: &NoiseModel, expr: &EstimatorExpr, theta: f64) -> Result<f64> {
    let ev = RiskEvaluator::new(model, expr)?;
    let breaks: Vec<f64> = expr.knots().iter().map(|k| k - theta).collect();
    density_expectation(model, |x| ev.value(x + theta), &breaks, &ExpectationOptions::default().quad)?
        .map(|(v, _)| v)
        .ok_or_else(|| SureError::UnsupportedModel(format!("{model} has no pointwise density")))
}

/// `Σ_i σ_i² + g_i(x)² + 2 K_i(g_i(·, x₋ᵢ))(x_i)` for independent coordinates,
/// where `estimator(x)` returns the full estimate `d(x)`.
pub fn multivariate_risk<D>(models: &[NoiseModel], estimator: D, x: &[f64]) -> Result<f64>
where
    D: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if models.len() != x.len() {
        return Err(SureError::InvalidParameter(format!(
            "{} models for a {}-dimensional observation",
            models.len(),
            x.len()
        )));
    }
    if x.is_empty() {
        return Err(SureError::EmptyInput("empty observation".into()));
    }
    let d = estimator(x);
    if d.len() != x.len() {
        return Err(SureError::InvalidParameter("estimate has the wrong dimension".into()));
    }
    let mut total = 0.0;
    for (i, m) in models.iter().enumerate() {
        m.require_centered()?;
        let triple = m.levy_view()?;
        let g_i = |t: f64| {
            let mut y = x.to_vec();
            y[i] = t;
            estimator(&y)[i] - t
        };
        let gi = d[i] - x[i];
        let k = levy_k_triple(&triple, &FnTest::new(g_i), x[i], &QuadConfig::with_tol(1e-10))?.value;
        total += m.variance() + gi * gi + 2.0 * k;
    }
    Ok(total)
}
