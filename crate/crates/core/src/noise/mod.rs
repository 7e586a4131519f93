//! Noise laws for the location model: named families, generic Lévy triples,
//! and the law-level operations (convolution, scaling, shifting, CLT
//! normalization) that mirror how the Stein operator transforms.

mod measure;
mod spec;

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, SureError};
use crate::quad::QuadConfig;

pub use measure::{DensityComponent, JumpDensity, JumpLaw, LevyTriple, MeasureSpec, TAIL_TOL};
pub use spec::ModelSpec;

/// Relative tolerance under which a mean counts as zero.
pub(crate) const CENTER_TOL: f64 = 1e-12;

/// The family a [`NoiseModel`] belongs to. Named families are stored in
/// their reference parametrization; the model's `scale`/`shift` act on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Normal { variance: f64 },
    /// Unit-variance Laplace, density `e^{−√2|x|}/√2`.
    Laplace,
    /// `Gamma(shape) − shape`: mean 0, variance `shape`.
    CenteredGamma { shape: f64 },
    /// Unit-variance hyperbolic secant, density `sech(πx/2)/2`.
    HyperbolicSecant,
    /// `Σ_{k ≤ N} J_k`, `N ~ Poisson(rate)`.
    CompoundPoisson { rate: f64, jump: JumpLaw },
    /// Uniform on `(−halfwidth, halfwidth)`; not infinitely divisible.
    Uniform { halfwidth: f64 },
    GenericId(LevyTriple),
}

/// A noise law: the law of `scale · Y + shift` with `Y` drawn from `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    family: Family,
    scale: f64,
    shift: f64,
    mean: f64,
    variance: f64,
}

impl NoiseModel {
    fn build(family: Family, scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale != 0.0) {
            return Err(SureError::DegenerateLaw(format!("scale {scale}")));
        }
        if !shift.is_finite() {
            return Err(SureError::InvalidParameter(format!("shift {shift}")));
        }
        let (base_mean, base_var) = match &family {
            Family::Normal { variance } => {
                if !(variance.is_finite() && *variance >= 0.0) {
                    return Err(SureError::InvalidParameter(format!("normal variance {variance}")));
                }
                (0.0, *variance)
            }
            Family::Laplace | Family::HyperbolicSecant => (0.0, 1.0),
            Family::CenteredGamma { shape } => {
                if !(shape.is_finite() && *shape > 0.0) {
                    return Err(SureError::InvalidParameter(format!("gamma shape {shape}")));
                }
                (0.0, *shape)
            }
            Family::CompoundPoisson { rate, jump } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(SureError::InvalidParameter(format!("compound Poisson rate {rate}")));
                }
                jump.validate()?;
                (rate * jump.mean(), rate * jump.second_moment())
            }
            Family::Uniform { halfwidth } => {
                if !(halfwidth.is_finite() && *halfwidth > 0.0) {
                    return Err(SureError::InvalidParameter(format!("uniform halfwidth {halfwidth}")));
                }
                (0.0, halfwidth * halfwidth / 3.0)
            }
            Family::GenericId(t) => {
                t.validate()?;
                (t.mean(), t.variance())
            }
        };
        Ok(Self {
            mean: scale * base_mean + shift,
            variance: scale * scale * base_var,
            family,
            scale,
            shift,
        })
    }

    pub fn normal(variance: f64) -> Result<Self> {
        Self::build(Family::Normal { variance }, 1.0, 0.0)
    }

    /// Laplace with standard deviation `s`.
    pub fn laplace(s: f64) -> Result<Self> {
        Self::build(Family::Laplace, s, 0.0)
    }

    pub fn centered_gamma(shape: f64) -> Result<Self> {
        Self::build(Family::CenteredGamma { shape }, 1.0, 0.0)
    }

    pub fn sech() -> Self {
        Self::build(Family::HyperbolicSecant, 1.0, 0.0).expect("unit sech is valid")
    }

    pub fn compound_poisson(rate: f64, jump: JumpLaw) -> Result<Self> {
        Self::build(Family::CompoundPoisson { rate, jump }, 1.0, 0.0)
    }

    pub fn uniform(halfwidth: f64) -> Result<Self> {
        Self::build(Family::Uniform { halfwidth }, 1.0, 0.0)
    }

    pub fn generic(triple: LevyTriple) -> Result<Self> {
        if triple.is_gaussian() {
            return Self::build(Family::Normal { variance: triple.gaussian_var }, 1.0, triple.drift_b);
        }
        Self::build(Family::GenericId(triple), 1.0, 0.0)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    pub fn shift_amount(&self) -> f64 {
        self.shift
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn is_infinitely_divisible(&self) -> bool {
        !matches!(self.family, Family::Uniform { .. })
    }

    pub fn is_centered(&self) -> bool {
        self.mean.abs() <= CENTER_TOL * (1.0 + self.sd())
    }

    pub fn require_centered(&self) -> Result<()> {
        if self.is_centered() {
            Ok(())
        } else {
            Err(SureError::NonZeroMean { mean: self.mean })
        }
    }

    fn unsupported_uniform(&self, what: &str) -> SureError {
        SureError::UnsupportedModel(format!(
            "{self} is not infinitely divisible (its Fourier transform has zeros) so {what} is undefined; \
             use the dedicated uniform kernel instead"
        ))
    }

    /// Canonical Lévy triple of the law.
    pub fn levy_view(&self) -> Result<LevyTriple> {
        let (c, s) = (self.scale, self.shift);
        let comp = |weight: f64, base: JumpDensity| MeasureSpec::single(DensityComponent::new(weight, c, base));
        let t = match &self.family {
            Family::Normal { variance } => LevyTriple {
                drift_b: s,
                gaussian_var: c * c * variance,
                jump_measure: MeasureSpec::empty(),
            },
            Family::Laplace => LevyTriple {
                drift_b: s,
                gaussian_var: 0.0,
                jump_measure: comp(1.0, JumpDensity::Laplace),
            },
            Family::CenteredGamma { shape } => LevyTriple {
                drift_b: s,
                gaussian_var: 0.0,
                jump_measure: comp(*shape, JumpDensity::Gamma),
            },
            Family::HyperbolicSecant => LevyTriple {
                drift_b: s,
                gaussian_var: 0.0,
                jump_measure: comp(1.0, JumpDensity::Sech),
            },
            Family::CompoundPoisson { rate, jump } => LevyTriple {
                drift_b: c * rate * jump.mean() + s,
                gaussian_var: 0.0,
                jump_measure: comp(
                    1.0,
                    JumpDensity::CompoundPoisson {
                        rate: *rate,
                        jump: jump.clone(),
                    },
                ),
            },
            Family::Uniform { .. } => return Err(self.unsupported_uniform("a Lévy triple")),
            Family::GenericId(t) => t.scaled(c).shifted(s),
        };
        Ok(t)
    }

    /// `ψ(w) = f̂′(−w)/(i f̂(−w))`; the Fourier multiplier of the Stein operator.
    pub fn char_multiplier(&self, w: f64) -> Result<Complex64> {
        self.char_multiplier_with(w, &QuadConfig::default())
    }

    pub fn char_multiplier_with(&self, w: f64, cfg: &QuadConfig) -> Result<Complex64> {
        self.levy_view()?.char_multiplier(w, cfg)
    }

    /// `log f̂(t)` with `f̂(t) = E e^{itX}`.
    pub fn log_char_fn(&self, t: f64) -> Result<Complex64> {
        match &self.family {
            Family::Uniform { halfwidth } => {
                let u = t * halfwidth;
                let v = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
                Ok(Complex64::new(v, 0.0).ln() + Complex64::new(0.0, t * self.shift))
            }
            _ => self.levy_view()?.log_char_fn(t, &QuadConfig::default()),
        }
    }

    /// Pointwise density, for families that have one in closed form.
    pub fn density(&self, x: f64) -> Option<f64> {
        let c = self.scale;
        let u = (x - self.shift) / c;
        let base = match &self.family {
            Family::Normal { variance } => {
                if *variance == 0.0 {
                    return None;
                }
                (-0.5 * u * u / variance).exp() / (2.0 * PI * variance).sqrt()
            }
            Family::Laplace => (-SQRT_2 * u.abs()).exp() / SQRT_2,
            Family::CenteredGamma { shape } => {
                let v = u + shape;
                if v <= 0.0 {
                    0.0
                } else {
                    ((shape - 1.0) * v.ln() - v - ln_gamma(*shape)).exp()
                }
            }
            Family::HyperbolicSecant => {
                let a = 0.5 * PI * u.abs();
                if a > 700.0 {
                    0.0
                } else {
                    0.5 / a.cosh()
                }
            }
            Family::Uniform { halfwidth } => {
                if u.abs() < *halfwidth {
                    0.5 / halfwidth
                } else {
                    0.0
                }
            }
            Family::CompoundPoisson { .. } | Family::GenericId(_) => return None,
        };
        Some(base / c.abs())
    }

    pub fn has_density(&self) -> bool {
        match &self.family {
            Family::Normal { variance } => *variance > 0.0,
            Family::CompoundPoisson { .. } | Family::GenericId(_) => false,
            _ => true,
        }
    }

    /// Interval carrying all but a negligible (< 1e−17) fraction of the
    /// density's mass, and the points where the density is not smooth.
    pub fn density_support(&self) -> Option<((f64, f64), Vec<f64>)> {
        if !self.has_density() {
            return None;
        }
        let (lo, hi, breaks) = match &self.family {
            Family::Normal { variance } => {
                let r = 10.0 * variance.sqrt();
                (-r, r, vec![])
            }
            Family::Laplace => (-30.0, 30.0, vec![0.0]),
            Family::CenteredGamma { shape } => (-shape, 12.0 * shape.sqrt() + 45.0, vec![]),
            Family::HyperbolicSecant => (-30.0, 30.0, vec![]),
            Family::Uniform { halfwidth } => (-halfwidth, *halfwidth, vec![]),
            _ => unreachable!(),
        };
        let map = |u: f64| self.scale * u + self.shift;
        let (a, b) = (map(lo), map(hi));
        Some(((a.min(b), a.max(b)), breaks.into_iter().map(map).collect()))
    }

    /// Law of `X₁ + X₂` for independent `X₁ ~ self`, `X₂ ~ other`.
    pub fn convolve(&self, other: &NoiseModel) -> Result<NoiseModel> {
        let a = self.levy_view()?;
        let b = other.levy_view()?;
        NoiseModel::generic(a.add(&b))
    }

    /// Law of `c·X`.
    pub fn scale(&self, c: f64) -> Result<NoiseModel> {
        if !(c.is_finite() && c != 0.0) {
            return Err(SureError::DegenerateLaw(format!("scaling by {c} collapses the law")));
        }
        match &self.family {
            Family::Normal { variance } => {
                Self::build(Family::Normal { variance: variance * c * c * self.scale * self.scale }, 1.0, self.shift * c)
            }
            Family::Uniform { halfwidth } => Self::build(
                Family::Uniform {
                    halfwidth: halfwidth * (c * self.scale).abs(),
                },
                1.0,
                self.shift * c,
            ),
            Family::GenericId(t) => Self::build(Family::GenericId(t.scaled(c * self.scale).shifted(self.shift * c)), 1.0, 0.0),
            _ => Self::build(self.family.clone(), self.scale * c, self.shift * c),
        }
    }

    /// Law of `X + b`.
    pub fn shift(&self, b: f64) -> Result<NoiseModel> {
        Self::build(self.family.clone(), self.scale, self.shift + b)
    }

    /// Law of `(X₁ + … + X_n)/√n` for iid `X_k ~ self`.
    pub fn clt_normalize(&self, n: usize) -> Result<NoiseModel> {
        if n == 0 {
            return Err(SureError::InvalidParameter("n must be positive".into()));
        }
        let t = self.levy_view()?;
        self.require_centered()?;
        if n == 1 {
            return Ok(self.clone());
        }
        let nf = n as f64;
        let c = 1.0 / nf.sqrt();
        let scaled = t.scaled(c);
        NoiseModel::generic(LevyTriple {
            drift_b: nf * scaled.drift_b,
            gaussian_var: nf * scaled.gaussian_var,
            jump_measure: scaled.jump_measure.weighted(nf),
        })
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Normal { variance } => write!(f, "normal(var={variance})")?,
            Family::Laplace => write!(f, "laplace")?,
            Family::CenteredGamma { shape } => write!(f, "gamma(shape={shape})")?,
            Family::HyperbolicSecant => write!(f, "sech")?,
            Family::CompoundPoisson { rate, .. } => write!(f, "compound_poisson(rate={rate})")?,
            Family::Uniform { halfwidth } => write!(f, "uniform(halfwidth={halfwidth})")?,
            Family::GenericId(t) => write!(
                f,
                "generic_id(b={}, gauss={}, jump_mass={})",
                t.drift_b,
                t.gaussian_var,
                t.jump_mass()
            )?,
        }
        if self.scale != 1.0 {
            write!(f, "*{}", self.scale)?;
        }
        if self.shift != 0.0 {
            write!(f, "{:+}", self.shift)?;
        }
        Ok(())
    }
}

/// Free-function forms of the law-level operations.
pub fn levy_view(model: &NoiseModel) -> Result<LevyTriple> {
    model.levy_view()
}

pub fn char_multiplier(model: &NoiseModel, w: f64) -> Result<Complex64> {
    model.char_multiplier(w)
}

pub fn convolve(a: &NoiseModel, b: &NoiseModel) -> Result<NoiseModel> {
    a.convolve(b)
}

pub fn scale(model: &NoiseModel, c: f64) -> Result<NoiseModel> {
    model.scale(c)
}

pub fn shift(model: &NoiseModel, b: f64) -> Result<NoiseModel> {
    model.shift(b)
}

pub fn clt_normalize(model: &NoiseModel, n: usize) -> Result<NoiseModel> {
    model.clt_normalize(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn all_id() -> Vec<NoiseModel> {
        vec![
            NoiseModel::normal(1.7).unwrap(),
            NoiseModel::laplace(1.0).unwrap(),
            NoiseModel::laplace(0.6).unwrap(),
            NoiseModel::centered_gamma(2.0).unwrap(),
            NoiseModel::centered_gamma(0.7).unwrap().scale(-1.3).unwrap(),
            NoiseModel::sech(),
            NoiseModel::compound_poisson(2.0, JumpLaw::Normal { mean: 0.5, sd: 0.3 }).unwrap(),
            NoiseModel::compound_poisson(1.0, JumpLaw::Exponential { rate: 2.0 }).unwrap(),
        ]
    }

    #[test]
    fn normal_view_is_pure_gaussian_atom() {
        let t = NoiseModel::normal(1.0).unwrap().levy_view().unwrap();
        assert_eq!(t.drift_b, 0.0);
        assert_eq!(t.gaussian_var, 1.0);
        assert!(t.jump_measure.is_empty());
    }

    #[test]
    fn gamma_jump_mass_equals_shape() {
        let t = NoiseModel::centered_gamma(2.0).unwrap().levy_view().unwrap();
        let q = t.jump_measure.integrate(|_| 1.0, &[], &QuadConfig::default()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-9);
        assert!((t.jump_measure.density(1.5) - 2.0 * 1.5 * (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sech_jump_kernel() {
        let t = NoiseModel::sech().levy_view().unwrap();
        for y in [-3.0, -0.2, 0.4, 2.0] {
            let expect = y / ((0.5 * PI * y).exp() - (-0.5 * PI * y).exp());
            assert!((t.jump_measure.density(y) - expect).abs() < 1e-15);
        }
        // the Feller-form kernel y/(e^y − e^{−y}) is the same law stretched by π/2
        let stretched = NoiseModel::sech().scale(PI / 2.0).unwrap().levy_view().unwrap();
        for y in [-3.0f64, -0.2, 0.4, 2.0] {
            let feller = y / (y.exp() - (-y).exp());
            assert!((stretched.jump_measure.density(y) - feller).abs() < 1e-14);
        }
        assert!((stretched.variance() - PI * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_has_no_levy_view() {
        let u = NoiseModel::uniform(1.0).unwrap();
        assert!(!u.is_infinitely_divisible());
        assert!(matches!(u.levy_view(), Err(SureError::UnsupportedModel(_))));
        assert!(matches!(u.char_multiplier(1.0), Err(SureError::UnsupportedModel(_))));
        assert!((u.variance() - 1.0 / 3.0).abs() < 1e-15);
        assert!(u.convolve(&NoiseModel::laplace(1.0).unwrap()).is_err());
    }

    #[test]
    fn variance_is_gaussian_plus_jump_mass() {
        for m in all_id() {
            let t = m.levy_view().unwrap();
            let q = t.jump_measure.integrate(|_| 1.0, &[], &QuadConfig::default()).unwrap().value;
            let v = t.gaussian_var + q;
            assert!((v - m.variance()).abs() <= 1e-8 * m.variance(), "{m}: {v} vs {}", m.variance());
        }
    }

    #[test]
    fn density_moments_match() {
        let models = [
            NoiseModel::normal(2.0).unwrap(),
            NoiseModel::laplace(1.0).unwrap(),
            NoiseModel::centered_gamma(2.0).unwrap(),
            NoiseModel::centered_gamma(3.0).unwrap().scale(-0.5).unwrap().shift(0.25).unwrap(),
            NoiseModel::sech(),
            NoiseModel::uniform(2.0).unwrap(),
        ];
        let cfg = QuadConfig::default();
        for m in &models {
            let ((lo, hi), br) = m.density_support().unwrap();
            let f = |x: f64| m.density(x).unwrap();
            let m0 = integrate(f, lo, hi, &br, &cfg).unwrap().value;
            let m1 = integrate(|x| x * f(x), lo, hi, &br, &cfg).unwrap().value;
            let m2 = integrate(|x| (x - m.mean()).powi(2) * f(x), lo, hi, &br, &cfg).unwrap().value;
            assert!((m0 - 1.0).abs() < 1e-10, "{m}");
            assert!((m1 - m.mean()).abs() < 1e-10, "{m}");
            assert!((m2 - m.variance()).abs() < 1e-9, "{m}");
        }
    }

    #[test]
    fn laplace_multiplier_closed_form() {
        let m = NoiseModel::laplace(1.0).unwrap();
        for w in [-4.0, -1.0, 0.0, 0.5, 3.0] {
            let psi = m.char_multiplier(w).unwrap();
            assert!((psi - Complex64::new(0.0, -2.0 * w / (2.0 + w * w))).norm() < 1e-15);
        }
        let n = NoiseModel::normal(1.0).unwrap();
        assert!((n.char_multiplier(1.0).unwrap() - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        for m in all_id() {
            let v = m.char_multiplier(0.0).unwrap();
            assert!((v - Complex64::new(m.mean(), 0.0)).norm() < 1e-12, "{m}");
        }
    }

    #[test]
    fn multiplier_matches_log_char_derivative() {
        let mut models = all_id();
        models.push(
            NoiseModel::generic(LevyTriple {
                drift_b: 0.2,
                gaussian_var: 0.3,
                jump_measure: MeasureSpec {
                    components: vec![DensityComponent::new(
                        1.0,
                        1.0,
                        JumpDensity::Tabulated {
                            xs: vec![-1.0, 0.0, 1.5],
                            values: vec![0.0, 0.8, 0.0],
                        },
                    )],
                    atoms: vec![(0.7, 0.1)],
                },
            })
            .unwrap(),
        );
        let i = Complex64::new(0.0, 1.0);
        for m in &models {
            for k in -20..=20 {
                let w = 0.25 * k as f64;
                let h = 1e-5;
                let d = (m.log_char_fn(w + h).unwrap() - m.log_char_fn(w - h).unwrap()) / (2.0 * h);
                let expect = i * m.char_multiplier(-w).unwrap();
                assert!((d - expect).norm() <= 1e-5 * expect.norm().max(1.0), "{m} w={w}: {d} vs {expect}");
            }
        }
    }

    #[test]
    fn convolution_adds_triples() {
        let a = NoiseModel::normal(1.0).unwrap().convolve(&NoiseModel::normal(2.0).unwrap()).unwrap();
        assert!(matches!(a.family(), Family::Normal { .. }));
        assert_eq!(a.levy_view().unwrap().gaussian_var, 3.0);

        let l = NoiseModel::laplace(1.0).unwrap();
        assert!((l.convolve(&l).unwrap().variance() - 2.0).abs() < 1e-15);

        let g = NoiseModel::centered_gamma(1.0)
            .unwrap()
            .convolve(&NoiseModel::centered_gamma(2.0).unwrap())
            .unwrap();
        let t = g.levy_view().unwrap();
        let q = t.jump_measure.integrate(|_| 1.0, &[], &QuadConfig::default()).unwrap();
        assert!((q.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn scale_and_shift() {
        let n = NoiseModel::normal(1.0).unwrap().scale(2.0).unwrap();
        assert_eq!(n.levy_view().unwrap().gaussian_var, 4.0);
        for m in all_id() {
            assert_eq!(m.scale(1.0).unwrap().levy_view().unwrap(), m.levy_view().unwrap());
            assert_eq!(m.shift(0.0).unwrap(), m);
            let back = m.shift(1.5).unwrap().shift(-1.5).unwrap();
            assert!((back.mean() - m.mean()).abs() < 1e-15);
            assert_eq!(back.levy_view().unwrap().jump_measure, m.levy_view().unwrap().jump_measure);
        }
        let g = NoiseModel::centered_gamma(2.0).unwrap().scale(1.0 / 2f64.sqrt()).unwrap();
        assert!((g.variance() - 1.0).abs() < 1e-15);
        assert!(matches!(
            NoiseModel::laplace(1.0).unwrap().scale(0.0),
            Err(SureError::DegenerateLaw(_))
        ));
        let s = NoiseModel::normal(1.0).unwrap().shift(3.0).unwrap();
        assert_eq!(s.mean(), 3.0);
        assert_eq!(s.variance(), 1.0);
    }

    #[test]
    fn clt_normalize_preserves_variance_and_concentrates() {
        let l = NoiseModel::laplace(1.0).unwrap();
        assert_eq!(l.clt_normalize(1).unwrap(), l);
        let mut prev = f64::INFINITY;
        for n in [1usize, 4, 16, 64] {
            let m = l.clt_normalize(n).unwrap();
            assert!((m.variance() - 1.0).abs() < 1e-12);
            let t = m.levy_view().unwrap();
            let mass = t.jump_measure.integrate(|_| 1.0, &[], &QuadConfig::default()).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-9);
            let spread = t
                .jump_measure
                .integrate(|y| y.abs(), &[], &QuadConfig::default())
                .unwrap()
                .value;
            assert!(spread < prev);
            prev = spread;
        }
        assert!(matches!(
            l.shift(1.0).unwrap().clt_normalize(4),
            Err(SureError::NonZeroMean { .. })
        ));
    }
}
