//! The generalized Stein operator `K`, defined by
//! `E[K(g)(X + θ)] = E[X g(X + θ)]` for all `θ`.
//!
//! For a Lévy triple `(b, σ₀², M)`:
//! `K(g)(t) = b g(t) + σ₀² g′(t) + ∫ (g(t + y) − g(t))/y M(dy)`.
//! Piecewise-linear estimators go through [`SteinOperator`], which reduces
//! every building block to a translate of the hinge kernel. Arbitrary test
//! functions go through [`levy_k`].

mod hinge;
mod spectral;
mod theorem;

pub use hinge::{hinge_kernel, Exactness, HingeKernel};
pub use spectral::{spectral_k, spectral_k_with, SpectralConfig, UniformGrid};
pub use theorem::{check_theorem1, Theorem1Report};

use crate::error::{Result, SureError};
use crate::estimator::{BuildingBlock, EstimatorExpr};
use crate::noise::{JumpLaw, LevyTriple, NoiseModel, TAIL_TOL};
use crate::quad::{integrate, Integral, QuadConfig};

/// Below this `|y|` the difference quotient is replaced by `g′(t)`.
pub const QUOTIENT_CUTOFF: f64 = 1e-8;

/// Numerical settings for kernel construction and evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub quad: QuadConfig,
    /// Memo grid spacing in units of the base component's standard deviation.
    pub memo_step: f64,
    pub memo_max_points: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            quad: QuadConfig::default(),
            memo_step: 1e-3,
            memo_max_points: 400_000,
        }
    }
}

/// A function `K` can be applied to.
pub trait TestFunction: Sync {
    fn value(&self, x: f64) -> f64;

    /// Exact derivative when known; a central difference is used otherwise.
    fn derivative(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Points where the function is not differentiable.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl TestFunction for EstimatorExpr {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        Some(EstimatorExpr::derivative(self, x))
    }

    fn kinks(&self) -> Vec<f64> {
        self.knots()
    }
}

impl<T: TestFunction + ?Sized> TestFunction for &T {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        (**self).derivative(x)
    }

    fn kinks(&self) -> Vec<f64> {
        (**self).kinks()
    }
}

/// A closure, optionally with known kinks.
pub struct FnTest<F> {
    f: F,
    kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FnTest<F> {
    pub fn new(f: F) -> Self {
        Self { f, kinks: Vec::new() }
    }

    pub fn with_kinks(f: F, kinks: Vec<f64>) -> Self {
        Self { f, kinks }
    }
}

impl<F: Fn(f64) -> f64 + Sync> TestFunction for FnTest<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// A differentiable closure with its derivative.
pub struct SmoothTest<F, D> {
    f: F,
    d: D,
}

impl<F: Fn(f64) -> f64 + Sync, D: Fn(f64) -> f64 + Sync> SmoothTest<F, D> {
    pub fn new(f: F, d: D) -> Self {
        Self { f, d }
    }
}

impl<F: Fn(f64) -> f64 + Sync, D: Fn(f64) -> f64 + Sync> TestFunction for SmoothTest<F, D> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        Some((self.d)(x))
    }
}

fn derivative_or_fd(g: &dyn TestFunction, x: f64) -> f64 {
    g.derivative(x).unwrap_or_else(|| {
        let h = 1e-5 * x.abs().max(1.0);
        (g.value(x + h) - g.value(x - h)) / (2.0 * h)
    })
}

/// `∫ (g(x + y/s) − g(x))/(y/s) M(dy)`.
fn jump_integral(triple: &LevyTriple, g: &dyn TestFunction, x: f64, s: f64, cfg: &QuadConfig) -> Result<Integral> {
    let gx = g.value(x);
    let dgx = derivative_or_fd(g, x);
    let mut breaks = vec![0.0];
    breaks.extend(g.kinks().iter().map(|k| (k - x) * s));
    triple.jump_measure.integrate(
        |y| {
            let u = y / s;
            if u.abs() < QUOTIENT_CUTOFF {
                dgx
            } else {
                (g.value(x + u) - gx) / u
            }
        },
        &breaks,
        cfg,
    )
}

/// `K(g)(x)` by quadrature of the Lévy integral. The drift contributes `b g(x)`.
pub fn levy_k(model: &NoiseModel, g: &dyn TestFunction, x: f64) -> Result<Integral> {
    levy_k_with(model, g, x, &QuadConfig::default())
}

pub fn levy_k_with(model: &NoiseModel, g: &dyn TestFunction, x: f64, cfg: &QuadConfig) -> Result<Integral> {
    levy_k_triple(&model.levy_view()?, g, x, cfg)
}

pub fn levy_k_triple(triple: &LevyTriple, g: &dyn TestFunction, x: f64, cfg: &QuadConfig) -> Result<Integral> {
    let mut r = jump_integral(triple, g, x, 1.0, cfg)?;
    if triple.gaussian_var != 0.0 {
        r.value += triple.gaussian_var * derivative_or_fd(g, x);
    }
    if triple.drift_b != 0.0 {
        r.value += triple.drift_b * g.value(x);
    }
    Ok(r)
}

/// Stein operator of `(X₁ + … + X_n)/√n` with `X_i` drawn from `model`:
/// `∫ (g(x + y/√n) − g(x))/(y/√n) M(dy) + σ₀² g′(x)`.
pub fn clt_k(model: &NoiseModel, n: usize, g: &dyn TestFunction, x: f64) -> Result<Integral> {
    if n == 0 {
        return Err(SureError::InvalidParameter("n must be positive".into()));
    }
    let triple = model.levy_view()?;
    model.require_centered()?;
    let mut r = jump_integral(&triple, g, x, (n as f64).sqrt(), &QuadConfig::default())?;
    if triple.gaussian_var != 0.0 {
        r.value += triple.gaussian_var * derivative_or_fd(g, x);
    }
    Ok(r)
}

/// `rate ∫ u f(u) g(x + u) du`: the operator of a compound Poisson law
/// written as a convolution.
pub fn compound_poisson_k(rate: f64, jump: &JumpLaw, g: &dyn TestFunction, x: f64) -> Result<Integral> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SureError::InvalidParameter(format!("compound Poisson rate {rate}")));
    }
    jump.validate()?;
    let (lo, hi) = jump.support(TAIL_TOL * 1e-4);
    let mut breaks = jump.breakpoints();
    breaks.extend(g.kinks().iter().map(|k| k - x));
    breaks.push(0.0);
    let mut r = integrate(|u| u * jump.pdf(u) * g.value(x + u), lo, hi, &breaks, &QuadConfig::default())?;
    if !r.value.is_finite() {
        return Err(SureError::Quadrature {
            achieved: f64::INFINITY,
            requested: QuadConfig::default().abs_tol,
        });
    }
    r.value *= rate;
    r.abs_error *= rate;
    Ok(r)
}

/// `K` of an infinitely divisible model on piecewise-linear estimators.
#[derive(Debug, Clone)]
pub struct SteinOperator {
    triple: LevyTriple,
    kernel: HingeKernel,
    cfg: KernelConfig,
}

impl SteinOperator {
    pub fn new(model: &NoiseModel) -> Result<Self> {
        Self::with_config(model, KernelConfig::default())
    }

    pub fn with_config(model: &NoiseModel, cfg: KernelConfig) -> Result<Self> {
        let triple = model.levy_view()?;
        let kernel = HingeKernel::from_triple(&triple, &cfg)?;
        Ok(Self { triple, kernel, cfg })
    }

    pub fn kernel(&self) -> &HingeKernel {
        &self.kernel
    }

    pub fn triple(&self) -> &LevyTriple {
        &self.triple
    }

    pub fn drift(&self) -> f64 {
        self.triple.drift_b
    }

    /// `K` of one building block, drift term included. The Gaussian part
    /// uses the block's derivative, so knots follow its convention.
    pub fn block(&self, block: &BuildingBlock, x: f64) -> f64 {
        let jump = match *block {
            BuildingBlock::Identity => self.kernel.jump_mass(),
            BuildingBlock::Constant { .. } => 0.0,
            BuildingBlock::HingePlus { knot } => self.kernel.jump(x - knot),
            BuildingBlock::HingeMinus { knot } => self.kernel.jump_mass() - self.kernel.jump(x - knot),
        };
        let mut v = jump;
        if self.triple.gaussian_var != 0.0 {
            v += self.triple.gaussian_var * block.derivative(x);
        }
        if self.triple.drift_b != 0.0 {
            v += self.triple.drift_b * block.eval(x);
        }
        v
    }

    pub fn apply(&self, expr: &EstimatorExpr, x: f64) -> f64 {
        expr.terms.iter().map(|(c, b)| c * self.block(b, x)).sum()
    }

    pub fn levy(&self, g: &dyn TestFunction, x: f64) -> Result<Integral> {
        levy_k_triple(&self.triple, g, x, &self.cfg.quad)
    }
}

/// `K(expr)(x)` for a one-off evaluation; build a [`SteinOperator`] to
/// evaluate many points.
pub fn apply_k(model: &NoiseModel, expr: &EstimatorExpr, x: f64) -> Result<f64> {
    Ok(SteinOperator::new(model)?.apply(expr, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{mid_expr, residual, soft_expr};
    use std::f64::consts::SQRT_2;

    fn laplace_h(x: f64) -> f64 {
        if x <= 0.0 {
            0.5 * (SQRT_2 * x).exp()
        } else {
            1.0 - 0.5 * (-SQRT_2 * x).exp()
        }
    }

    #[test]
    fn identity_and_constant() {
        for m in [
            NoiseModel::laplace(1.0).unwrap(),
            NoiseModel::centered_gamma(3.0).unwrap(),
            NoiseModel::sech(),
            NoiseModel::normal(2.5).unwrap(),
        ] {
            let id = FnTest::new(|x| x);
            let one = FnTest::new(|_| 4.0);
            for x in [-2.0, 0.0, 1.5] {
                assert!((levy_k(&m, &id, x).unwrap().value - m.variance()).abs() < 1e-9);
                assert!(levy_k(&m, &one, x).unwrap().value.abs() < 1e-15);
                assert!((apply_k(&m, &EstimatorExpr::identity(), x).unwrap() - m.variance()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplace_levy_matches_hinge() {
        let m = NoiseModel::laplace(1.0).unwrap();
        let g = FnTest::with_kinks(|x: f64| x.max(0.0), vec![0.0]);
        for i in -20..=20 {
            let x = 0.5 * i as f64;
            let v = levy_k(&m, &g, x).unwrap().value;
            assert!((v - laplace_h(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn laplace_soft_residual_is_kernel_difference() {
        let m = NoiseModel::laplace(1.0).unwrap();
        let op = SteinOperator::new(&m).unwrap();
        let r = residual(&soft_expr(1.5));
        for i in -40..=40 {
            let x = 0.13 * i as f64;
            let expect = laplace_h(x - 1.5) - laplace_h(x + 1.5);
            assert!((op.apply(&r, x) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn normal_soft_residual_at_origin() {
        let m = NoiseModel::normal(1.0).unwrap();
        assert_eq!(apply_k(&m, &residual(&soft_expr(2.0)), 0.0).unwrap(), -1.0);
    }

    #[test]
    fn gaussian_reduction_off_knots() {
        let m = NoiseModel::normal(1.7).unwrap();
        let op = SteinOperator::new(&m).unwrap();
        for e in [residual(&soft_expr(1.0)), residual(&mid_expr(2.0))] {
            for i in -50..=50 {
                let x = 0.11 * i as f64 + 0.003;
                assert!((op.apply(&e, x) - 1.7 * e.derivative(x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn block_kernels_agree_with_levy_quadrature() {
        let models = [
            NoiseModel::laplace(0.8).unwrap(),
            NoiseModel::centered_gamma(2.0).unwrap().scale(-1.0).unwrap(),
            NoiseModel::sech(),
            NoiseModel::generic(
                NoiseModel::laplace(1.0)
                    .unwrap()
                    .levy_view()
                    .unwrap()
                    .add(&LevyTriple::gaussian(0.5)),
            )
            .unwrap(),
        ];
        let exprs = [residual(&soft_expr(1.0)), residual(&mid_expr(2.0))];
        for m in &models {
            let op = SteinOperator::new(m).unwrap();
            for e in &exprs {
                for x in [-3.1, -0.7, 0.25, 1.3, 2.9] {
                    let q = levy_k(m, e, x).unwrap().value;
                    assert!((op.apply(e, x) - q).abs() < 5e-7, "{m} x={x}");
                }
            }
        }
    }

    #[test]
    fn drift_adds_b_times_g() {
        let base = NoiseModel::laplace(1.0).unwrap();
        let shifted = base.shift(0.75).unwrap();
        let e = residual(&soft_expr(1.0));
        let op0 = SteinOperator::new(&base).unwrap();
        let op1 = SteinOperator::new(&shifted).unwrap();
        for x in [-2.0, 0.3, 1.8] {
            assert!((op1.apply(&e, x) - op0.apply(&e, x) - 0.75 * e.eval(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn compound_poisson_paths_agree() {
        let jump = JumpLaw::Normal { mean: 0.4, sd: 0.7 };
        let m = NoiseModel::compound_poisson(1.8, jump.clone()).unwrap();
        let g = SmoothTest::new(|x: f64| (0.7 * x).sin() + 0.2 * x.cos(), |x: f64| 0.7 * (0.7 * x).cos() - 0.2 * x.sin());
        for x in [-2.0, 0.0, 1.1, 3.3] {
            let a = compound_poisson_k(1.8, &jump, &g, x).unwrap().value;
            let b = levy_k(&m, &g, x).unwrap().value;
            assert!((a - b).abs() < 1e-9, "x={x}: {a} vs {b}");
        }
        let one = FnTest::new(|_| 1.0);
        assert!((compound_poisson_k(1.8, &jump, &one, 0.0).unwrap().value - 1.8 * 0.4).abs() < 1e-12);
        let sym = JumpLaw::Uniform { lo: -1.0, hi: 1.0 };
        assert!(compound_poisson_k(2.0, &sym, &one, 0.5).unwrap().value.abs() < 1e-15);
    }

    #[test]
    fn clt_at_one_is_levy() {
        let m = NoiseModel::laplace(1.0).unwrap();
        let g = SmoothTest::new(f64::sin, f64::cos);
        for x in [0.0, 1.0] {
            assert_eq!(clt_k(&m, 1, &g, x).unwrap().value, levy_k(&m, &g, x).unwrap().value);
        }
        let id = FnTest::new(|x| x);
        assert!((clt_k(&m, 37, &id, 0.4).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clt_error_decreases() {
        let m = NoiseModel::laplace(1.0).unwrap();
        let g = SmoothTest::new(f64::sin, f64::cos);
        for x in [0.0, 1.0] {
            let mut prev = f64::INFINITY;
            for n in [1, 4, 16, 64, 256] {
                let e = (clt_k(&m, n, &g, x).unwrap().value - x.cos()).abs();
                assert!(e < prev);
                prev = e;
            }
            assert!(prev < 0.01);
        }
    }

    #[test]
    fn clt_rejects_uncentered() {
        let m = NoiseModel::laplace(1.0).unwrap().shift(1.0).unwrap();
        assert!(clt_k(&m, 4, &FnTest::new(|x| x), 0.0).is_err());
    }
}
