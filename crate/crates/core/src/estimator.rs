//! Piecewise-linear estimators `d(x) = x + g(x)` as linear combinations of
//! hinge building blocks.
//!
//! Conventions: `(a)⁺ = max(a, 0)` and `(a)⁻ = min(a, 0)`, so that
//! `a = (a)⁺ + (a)⁻`. At a knot `k` the derivative of a hinge is the one-sided
//! derivative from the side away from the origin (the right one when
//! `k = 0`), which keeps odd estimators odd and `g_k⁺ + g_k⁻` at slope 1.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SureError};
use crate::quad::composite_gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuildingBlock {
    Identity,
    Constant { value: f64 },
    /// `x ↦ max(x − knot, 0)`
    HingePlus { knot: f64 },
    /// `x ↦ min(x − knot, 0)`
    HingeMinus { knot: f64 },
}

impl BuildingBlock {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BuildingBlock::Identity => x,
            BuildingBlock::Constant { value } => value,
            BuildingBlock::HingePlus { knot } => (x - knot).max(0.0),
            BuildingBlock::HingeMinus { knot } => (x - knot).min(0.0),
        }
    }

    /// Derivative; at a knot, taken from the side away from the origin.
    pub fn derivative(&self, x: f64) -> f64 {
        let above = |knot: f64| if knot < 0.0 { x > knot } else { x >= knot };
        match *self {
            BuildingBlock::Identity => 1.0,
            BuildingBlock::Constant { .. } => 0.0,
            BuildingBlock::HingePlus { knot } => {
                if above(knot) {
                    1.0
                } else {
                    0.0
                }
            }
            BuildingBlock::HingeMinus { knot } => {
                if above(knot) {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn knot(&self) -> Option<f64> {
        match *self {
            BuildingBlock::HingePlus { knot } | BuildingBlock::HingeMinus { knot } => Some(knot),
            _ => None,
        }
    }
}

/// `Σ coefficient · block`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorExpr {
    pub terms: Vec<(f64, BuildingBlock)>,
}

impl EstimatorExpr {
    pub fn new(terms: Vec<(f64, BuildingBlock)>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::new(vec![(1.0, BuildingBlock::Identity)])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.eval(x)).sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.derivative(x)).sum()
    }

    /// Knots of all hinge terms, sorted and deduplicated.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.terms.iter().filter_map(|(_, b)| b.knot()).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(_, b)| matches!(b, BuildingBlock::Identity))
            .map(|(c, _)| c)
            .sum()
    }

    /// Adds `coefficient · block`, merging with an existing identical block.
    pub fn push(&mut self, coefficient: f64, block: BuildingBlock) {
        if let Some(t) = self.terms.iter_mut().find(|(_, b)| *b == block) {
            t.0 += coefficient;
        } else {
            self.terms.push((coefficient, block));
        }
        self.terms.retain(|(c, _)| *c != 0.0);
    }

    /// `soft(λ)`, `mid(λ)` or a term count.
    pub fn label(&self) -> String {
        for k in self.knots() {
            if k > 0.0 && *self == Self::soft(k) {
                return format!("soft({k})");
            }
            if k > 0.0 && *self == Self::mid(2.0 * k) {
                return format!("mid({})", 2.0 * k);
            }
        }
        format!("custom({} terms)", self.terms.len())
    }

    /// `g = d − id`.
    pub fn residual(&self) -> Self {
        let mut out = self.clone();
        out.push(-1.0, BuildingBlock::Identity);
        out
    }

    /// Soft thresholding `(|x| − λ)₊ sgn(x) = x − g₀⁺ + g_λ⁺ − g₀⁻ + g_{−λ}⁻`.
    ///
    /// `λ = 0` gives an expression equal to the identity.
    pub fn soft(lambda: f64) -> Self {
        assert!(lambda.is_finite() && lambda >= 0.0, "soft threshold must be non-negative, got {lambda}");
        use BuildingBlock::*;
        Self::new(vec![
            (1.0, Identity),
            (-1.0, HingePlus { knot: 0.0 }),
            (1.0, HingePlus { knot: lambda }),
            (-1.0, HingeMinus { knot: 0.0 }),
            (1.0, HingeMinus { knot: -lambda }),
        ])
    }

    /// `x·1{|x| ≥ λ} + 2(|x| − λ/2)₊ sgn(x)·1{|x| < λ}`.
    pub fn mid(lambda: f64) -> Self {
        assert!(lambda.is_finite() && lambda > 0.0, "mid threshold must be positive, got {lambda}");
        use BuildingBlock::*;
        Self::new(vec![
            (1.0, Identity),
            (-1.0, HingePlus { knot: 0.0 }),
            (2.0, HingePlus { knot: 0.5 * lambda }),
            (-1.0, HingePlus { knot: lambda }),
            (-1.0, HingeMinus { knot: 0.0 }),
            (2.0, HingeMinus { knot: -0.5 * lambda }),
            (-1.0, HingeMinus { knot: -lambda }),
        ])
    }
}

/// Free-function forms.
pub fn eval(expr: &EstimatorExpr, x: f64) -> f64 {
    expr.eval(x)
}

pub fn soft_expr(lambda: f64) -> EstimatorExpr {
    EstimatorExpr::soft(lambda)
}

pub fn mid_expr(lambda: f64) -> EstimatorExpr {
    EstimatorExpr::mid(lambda)
}

pub fn residual(expr: &EstimatorExpr) -> EstimatorExpr {
    expr.residual()
}

/// Discretization of `∫₀^∞ (x − y)⁺ g″(y) dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothQuadSpec {
    /// Upper end of the truncated support of `g″` (the lower end is 0).
    pub upper: f64,
    pub nodes: usize,
}

impl SmoothQuadSpec {
    pub fn new(upper: f64) -> Self {
        Self { upper, nodes: 256 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothExpansion {
    pub expr: EstimatorExpr,
    /// Largest change on `[0, upper]` when the node count is doubled.
    pub error_estimate: f64,
}

const GL_ORDER: usize = 16;

fn hinge_sum<F: Fn(f64) -> f64>(g_prime_at_0: f64, g_second: &F, spec: &SmoothQuadSpec) -> Result<EstimatorExpr> {
    let (panels, order) = if spec.nodes < GL_ORDER {
        (1, spec.nodes.max(1))
    } else {
        (spec.nodes.div_ceil(GL_ORDER), GL_ORDER)
    };
    let mut expr = EstimatorExpr::zero();
    expr.push(g_prime_at_0, BuildingBlock::HingePlus { knot: 0.0 });
    for (y, w) in composite_gauss_legendre(0.0, spec.upper, panels, order) {
        let c = w * g_second(y);
        if !c.is_finite() {
            return Err(SureError::Quadrature {
                achieved: f64::INFINITY,
                requested: 0.0,
            });
        }
        if c != 0.0 {
            expr.terms.push((c, BuildingBlock::HingePlus { knot: y }));
        }
    }
    Ok(expr)
}

/// Hinge expansion of a `C²` function on `[0, ∞)` with `g(0) = 0`:
/// `g(x) = g′(0⁺) x⁺ + ∫₀^∞ (x − y)⁺ g″(y) dy`.
pub fn smooth_expr<F: Fn(f64) -> f64>(g_prime_at_0: f64, g_second: F, spec: &SmoothQuadSpec) -> Result<SmoothExpansion> {
    if !(spec.upper.is_finite() && spec.upper > 0.0) || spec.nodes == 0 {
        return Err(SureError::InvalidParameter(format!("bad quadrature spec {spec:?}")));
    }
    let expr = hinge_sum(g_prime_at_0, &g_second, spec)?;
    let fine = hinge_sum(
        g_prime_at_0,
        &g_second,
        &SmoothQuadSpec {
            nodes: spec.nodes * 2,
            ..*spec
        },
    )?;
    let error_estimate = (0..=64)
        .map(|k| {
            let x = spec.upper * k as f64 / 64.0;
            (expr.eval(x) - fine.eval(x)).abs()
        })
        .fold(0.0, f64::max);
    Ok(SmoothExpansion { expr, error_estimate })
}

/// JSON form: `{"type": "soft", "lambda": 2}` or `{"terms": [[1.0, {"kind": "identity"}], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorSpec {
    Named(NamedEstimator),
    Terms(EstimatorExpr),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedEstimator {
    #[serde(rename = "type")]
    pub kind: EstimatorKind,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Soft,
    Mid,
}

impl EstimatorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SureError::Spec(e.to_string()))
    }

    pub fn to_expr(&self) -> Result<EstimatorExpr> {
        match self {
            EstimatorSpec::Named(n) => {
                if !(n.lambda.is_finite() && n.lambda > 0.0) {
                    return Err(SureError::InvalidParameter(format!("lambda must be positive, got {}", n.lambda)));
                }
                Ok(match n.kind {
                    EstimatorKind::Soft => EstimatorExpr::soft(n.lambda),
                    EstimatorKind::Mid => EstimatorExpr::mid(n.lambda),
                })
            }
            EstimatorSpec::Terms(e) => {
                if e.terms.iter().any(|(c, b)| !c.is_finite() || b.knot().is_some_and(|k| !k.is_finite())) {
                    return Err(SureError::InvalidParameter("non-finite estimator term".into()));
                }
                Ok(e.clone())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Named(n) => format!(
                "{}({})",
                match n.kind {
                    EstimatorKind::Soft => "soft",
                    EstimatorKind::Mid => "mid",
                },
                n.lambda
            ),
            EstimatorSpec::Terms(e) => format!("custom({} terms)", e.terms.len()),
        }
    }
}
