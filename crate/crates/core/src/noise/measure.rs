//! Jump measures in the finite-variance Lévy–Khintchine parametrization
//! `log f̂(t) = ibt − σ₀²t²/2 + ∫ (e^{ixt} − 1 − ixt)/x² M(dx)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SureError};
use crate::quad::{integrate, Integral, QuadConfig};

/// Tail-mass tolerance used to truncate infinite supports.
pub const TAIL_TOL: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Law of the individual jumps of a compound Poisson component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            JumpLaw::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            JumpLaw::Exponential { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SureError::InvalidParameter(format!("bad jump law {self:?}")))
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            JumpLaw::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
            JumpLaw::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Normal { mean, .. } => mean,
            JumpLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            JumpLaw::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::Normal { mean, sd } => mean * mean + sd * sd,
            JumpLaw::Uniform { lo, hi } => (hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo)),
            JumpLaw::Exponential { rate } => 2.0 / (rate * rate),
        }
    }

    pub fn third_moment(&self) -> f64 {
        match *self {
            JumpLaw::Normal { mean, sd } => mean.powi(3) + 3.0 * mean * sd * sd,
            JumpLaw::Uniform { lo, hi } => (hi.powi(4) - lo.powi(4)) / (4.0 * (hi - lo)),
            JumpLaw::Exponential { rate } => 6.0 / rate.powi(3),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            JumpLaw::Normal { mean, .. } => mean == 0.0,
            JumpLaw::Uniform { lo, hi } => lo == -hi,
            JumpLaw::Exponential { .. } => false,
        }
    }

    /// Interval outside which `x² f(x)` carries relative mass below `tol`.
    pub fn support(&self, tol: f64) -> (f64, f64) {
        match *self {
            JumpLaw::Normal { mean, sd } => {
                let k = (2.0 * (1.0 / tol).ln()).sqrt() + 4.0;
                let r = k * sd;
                (mean - r, mean + r)
            }
            JumpLaw::Uniform { lo, hi } => (lo, hi),
            JumpLaw::Exponential { rate } => {
                // ∫_L^∞ x² r e^{-rx} dx / (2/r²) = e^{-u}(u²/2 + u + 1), u = rL
                let u = solve_tail(|u| (-u).exp() * (0.5 * u * u + u + 1.0), tol);
                (0.0, u / rate)
            }
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            JumpLaw::Normal { .. } => vec![],
            JumpLaw::Uniform { lo, hi } => vec![lo, hi],
            JumpLaw::Exponential { .. } => vec![0.0],
        }
    }

    /// Characteristic function `Φ(w) = E e^{iwJ}` and its derivative.
    pub fn char_fn(&self, w: f64) -> (Complex64, Complex64) {
        match *self {
            JumpLaw::Normal { mean, sd } => {
                let phi = (I * mean * w - 0.5 * sd * sd * w * w).exp();
                (phi, (I * mean - sd * sd * w) * phi)
            }
            JumpLaw::Exponential { rate } => {
                let d = Complex64::new(rate, -w);
                (rate / d, I * rate / (d * d))
            }
            JumpLaw::Uniform { lo, hi } => {
                let len = hi - lo;
                let scale = w.abs() * lo.abs().max(hi.abs());
                if scale < 1e-4 {
                    // series to third order
                    let m = |k: i32| (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * len);
                    let phi = Complex64::new(1.0 - 0.5 * w * w * m(2), w * m(1) - w.powi(3) * m(3) / 6.0);
                    let dphi = Complex64::new(-w * m(2) + w.powi(3) * m(4) / 6.0, m(1) - 0.5 * w * w * m(3));
                    (phi, dphi)
                } else {
                    let eb = (I * w * hi).exp();
                    let ea = (I * w * lo).exp();
                    let phi = (eb - ea) / (I * w * len);
                    // antiderivative of i x e^{iwx} is e^{iwx}(x/w + i/w²)
                    let prim = |x: f64, e: Complex64| e * Complex64::new(x / w, 1.0 / (w * w));
                    let dphi = (prim(hi, eb) - prim(lo, ea)) / len;
                    (phi, dphi)
                }
            }
        }
    }
}

/// Base jump-measure densities in their reference coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpDensity {
    /// `|y| e^{−√2|y|}`: unit-variance Laplace.
    Laplace,
    /// `y e^{−y}` on `y > 0`: Gamma with unit shape.
    Gamma,
    /// `y / (2 sinh(πy/2))`: unit-variance hyperbolic secant.
    Sech,
    /// `rate · y² f(y)`.
    CompoundPoisson { rate: f64, jump: JumpLaw },
    /// Piecewise-linear density through `(xs[i], values[i])`, zero outside.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl JumpDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpDensity::CompoundPoisson { rate, jump } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(SureError::InvalidParameter(format!("compound Poisson rate {rate}")));
                }
                jump.validate()
            }
            JumpDensity::Tabulated { xs, values } => {
                if xs.len() < 2 || xs.len() != values.len() {
                    return Err(SureError::InvalidParameter(
                        "tabulated density needs matching xs/values with at least two points".into(),
                    ));
                }
                if xs.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) || xs.iter().any(|x| !x.is_finite()) {
                    return Err(SureError::InvalidParameter("tabulated xs must be finite and increasing".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(SureError::InvalidParameter("tabulated values must be finite and non-negative".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        match self {
            JumpDensity::Laplace => y.abs() * (-SQRT_2 * y.abs()).exp(),
            JumpDensity::Gamma => {
                if y > 0.0 {
                    y * (-y).exp()
                } else {
                    0.0
                }
            }
            JumpDensity::Sech => {
                let a = 0.5 * PI * y.abs();
                if a < 1e-8 {
                    1.0 / PI
                } else if a > 350.0 {
                    0.0
                } else {
                    y.abs() / (2.0 * a.sinh())
                }
            }
            JumpDensity::CompoundPoisson { rate, jump } => rate * y * y * jump.pdf(y),
            JumpDensity::Tabulated { xs, values } => interp_linear(xs, values, y),
        }
    }

    /// Total mass `M(ℝ)`.
    pub fn mass(&self) -> f64 {
        match self {
            JumpDensity::Laplace | JumpDensity::Gamma | JumpDensity::Sech => 1.0,
            JumpDensity::CompoundPoisson { rate, jump } => rate * jump.second_moment(),
            JumpDensity::Tabulated { xs, values } => xs
                .windows(2)
                .zip(values.windows(2))
                .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
                .sum(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            JumpDensity::Laplace | JumpDensity::Sech => true,
            JumpDensity::Gamma => false,
            JumpDensity::CompoundPoisson { jump, .. } => jump.is_symmetric(),
            JumpDensity::Tabulated { .. } => false,
        }
    }

    /// Truncated support carrying all but a `tol` fraction of the mass.
    pub fn support(&self, tol: f64) -> (f64, f64) {
        match self {
            JumpDensity::Laplace => {
                // two-sided tail e^{-u}(u + 1), u = √2 L
                let u = solve_tail(|u| (-u).exp() * (u + 1.0), tol);
                let l = u / SQRT_2;
                (-l, l)
            }
            JumpDensity::Gamma => (0.0, solve_tail(|u| (-u).exp() * (u + 1.0), tol)),
            JumpDensity::Sech => {
                // tail ≤ ∫_L^∞ y e^{-πy/2} dy · 2 over mass 1
                let l = solve_tail(|l| 2.0 * (-0.5 * PI * l).exp() * (2.0 * l / PI + 4.0 / (PI * PI)), tol);
                (-l, l)
            }
            JumpDensity::CompoundPoisson { jump, .. } => jump.support(tol),
            JumpDensity::Tabulated { xs, .. } => (xs[0], xs[xs.len() - 1]),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            JumpDensity::CompoundPoisson { jump, .. } => {
                let mut b = jump.breakpoints();
                b.push(0.0);
                b
            }
            JumpDensity::Tabulated { xs, .. } => {
                let mut b = xs.clone();
                b.push(0.0);
                b
            }
            _ => vec![0.0],
        }
    }

    /// `∫ (e^{iyt} − 1 − iyt)/y² M(dy)` in closed form, when available.
    pub fn log_cf(&self, t: f64) -> Option<Complex64> {
        match self {
            JumpDensity::Laplace => Some(Complex64::new(-(0.5 * t * t).ln_1p(), 0.0)),
            JumpDensity::Gamma => Some(-(Complex64::new(1.0, -t)).ln() - I * t),
            JumpDensity::Sech => {
                let a = t.abs();
                Some(Complex64::new(-(a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2), 0.0))
            }
            JumpDensity::CompoundPoisson { rate, jump } => {
                let (phi, _) = jump.char_fn(t);
                Some(*rate * (phi - 1.0 - I * jump.mean() * t))
            }
            JumpDensity::Tabulated { .. } => None,
        }
    }

    /// `∫ (e^{−iyw} − 1)/y M(dy)` in closed form, when available.
    pub fn psi(&self, w: f64) -> Option<Complex64> {
        match self {
            JumpDensity::Laplace => Some(Complex64::new(0.0, -2.0 * w / (2.0 + w * w))),
            JumpDensity::Gamma => Some(Complex64::new(0.0, -w) / Complex64::new(1.0, w)),
            JumpDensity::Sech => Some(Complex64::new(0.0, -w.tanh())),
            JumpDensity::CompoundPoisson { rate, jump } => {
                let (_, dphi) = jump.char_fn(-w);
                Some(*rate * (-I * dphi - jump.mean()))
            }
            JumpDensity::Tabulated { .. } => None,
        }
    }
}

fn interp_linear(xs: &[f64], values: &[f64], y: f64) -> f64 {
    if y < xs[0] || y > xs[xs.len() - 1] {
        return 0.0;
    }
    let idx = xs.partition_point(|&x| x <= y);
    if idx == 0 {
        return values[0];
    }
    if idx >= xs.len() {
        return values[xs.len() - 1];
    }
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let t = (y - x0) / (x1 - x0);
    values[idx - 1] * (1.0 - t) + values[idx] * t
}

/// Smallest `L` (to bisection precision) with `tail(L) ≤ tol`, for a
/// decreasing tail function.
pub(crate) fn solve_tail<F: Fn(f64) -> f64>(tail: F, tol: f64) -> f64 {
    let mut hi = 1.0;
    while tail(hi) > tol {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// A scaled and weighted copy of a base density: the measure
/// `weight · c² · (pushforward of the base under y ↦ c·y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityComponent {
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default = "one")]
    pub scale: f64,
    pub base: JumpDensity,
}

fn one() -> f64 {
    1.0
}

impl DensityComponent {
    pub fn new(weight: f64, scale: f64, base: JumpDensity) -> Self {
        let mut c = Self { weight, scale, base };
        if c.base.is_symmetric() {
            c.scale = c.scale.abs();
        }
        c
    }

    pub fn density(&self, y: f64) -> f64 {
        self.weight * self.scale.abs() * self.base.density(y / self.scale)
    }

    pub fn mass(&self) -> f64 {
        self.weight * self.scale * self.scale * self.base.mass()
    }

    pub fn support(&self, tol: f64) -> (f64, f64) {
        let (lo, hi) = self.base.support(tol);
        let (a, b) = (lo * self.scale, hi * self.scale);
        (a.min(b), a.max(b))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints().into_iter().map(|b| b * self.scale).collect()
    }

    pub fn log_cf(&self, t: f64) -> Option<Complex64> {
        self.base.log_cf(self.scale * t).map(|v| v * self.weight)
    }

    pub fn psi(&self, w: f64) -> Option<Complex64> {
        self.base.psi(self.scale * w).map(|v| v * (self.weight * self.scale))
    }
}

/// Finite positive measure on ℝ∖{0}: a sum of density components plus atoms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub components: Vec<DensityComponent>,
    /// `(location, mass)` pairs; locations must be nonzero.
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
}

impl MeasureSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(component: DensityComponent) -> Self {
        Self {
            components: vec![component],
            atoms: vec![],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.iter().all(|c| c.weight == 0.0) && self.atoms.iter().all(|a| a.1 == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            c.base.validate()?;
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(SureError::InvalidParameter(format!("component weight {}", c.weight)));
            }
            if !(c.scale.is_finite() && c.scale != 0.0) {
                return Err(SureError::InvalidParameter(format!("component scale {}", c.scale)));
            }
        }
        for &(loc, mass) in &self.atoms {
            if loc == 0.0 || !loc.is_finite() {
                return Err(SureError::InvalidParameter(
                    "jump-measure atoms must sit at finite nonzero locations; the origin belongs to gaussian_var".into(),
                ));
            }
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(SureError::InvalidParameter(format!("atom mass {mass}")));
            }
        }
        let m = self.mass();
        if !m.is_finite() {
            return Err(SureError::InvalidParameter("jump measure has infinite mass".into()));
        }
        Ok(())
    }

    /// `M(ℝ∖{0})`.
    pub fn mass(&self) -> f64 {
        self.components.iter().map(DensityComponent::mass).sum::<f64>()
            + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    pub fn density(&self, y: f64) -> f64 {
        self.components.iter().map(|c| c.density(y)).sum()
    }

    /// Measure of `c·X`: pushforward by `y ↦ c·y` with mass multiplier `c²`.
    pub fn scaled(&self, c: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|comp| DensityComponent::new(comp.weight, comp.scale * c, comp.base.clone()))
            .collect();
        let atoms = self.atoms.iter().map(|&(l, m)| (l * c, m * c * c)).collect();
        Self { components, atoms }
    }

    /// Multiplies every mass by `k ≥ 0`.
    pub fn weighted(&self, k: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|comp| DensityComponent::new(comp.weight * k, comp.scale, comp.base.clone()))
            .collect();
        let atoms = self.atoms.iter().map(|&(l, m)| (l, m * k)).collect();
        Self { components, atoms }
    }

    /// Sum of two measures; identical components and atoms are merged.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for c in &other.components {
            out.push_component(c.clone());
        }
        for &(l, m) in &other.atoms {
            match out.atoms.iter_mut().find(|a| a.0 == l) {
                Some(a) => a.1 += m,
                None => out.atoms.push((l, m)),
            }
        }
        out
    }

    fn push_component(&mut self, c: DensityComponent) {
        match self
            .components
            .iter_mut()
            .find(|e| e.scale == c.scale && e.base == c.base)
        {
            Some(e) => e.weight += c.weight,
            None => self.components.push(c),
        }
    }

    /// Union of truncated supports of the density components, with atoms.
    pub fn support(&self, tol: f64) -> (f64, f64) {
        let mut lo: f64 = 0.0;
        let mut hi: f64 = 0.0;
        for c in &self.components {
            let (a, b) = c.support(tol);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for &(l, _) in &self.atoms {
            lo = lo.min(l);
            hi = hi.max(l);
        }
        (lo, hi)
    }

    /// `∫ φ(y) M(dy)`. Each density component is integrated over its own
    /// truncated support, splitting at its natural breakpoints and at `extra`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F, extra: &[f64], cfg: &QuadConfig) -> Result<Integral> {
        let mut value = 0.0;
        let mut abs_error = 0.0;
        let mut evaluations = 0;
        for c in &self.components {
            if c.weight == 0.0 {
                continue;
            }
            let (lo, hi) = c.support(TAIL_TOL);
            let mut breaks = c.breakpoints();
            breaks.extend_from_slice(extra);
            let r = integrate(|y| phi(y) * c.density(y), lo, hi, &breaks, cfg)?;
            value += r.value;
            abs_error += r.abs_error;
            evaluations += r.evaluations;
        }
        for &(l, m) in &self.atoms {
            value += m * phi(l);
            evaluations += 1;
        }
        Ok(Integral {
            value,
            abs_error,
            evaluations,
        })
    }

    pub fn log_cf(&self, t: f64, cfg: &QuadConfig) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.components {
            acc += match c.log_cf(t) {
                Some(v) => v,
                None => {
                    let single = MeasureSpec::single(c.clone());
                    let re = single.integrate(|y| cos_term(y, t), &[], cfg)?.value;
                    let im = single.integrate(|y| sin_term(y, t), &[], cfg)?.value;
                    Complex64::new(re, im)
                }
            };
        }
        for &(l, m) in &self.atoms {
            acc += m * ((I * l * t).exp() - 1.0 - I * l * t) / (l * l);
        }
        Ok(acc)
    }

    /// `∫ (e^{−iyw} − 1)/y M(dy)`.
    pub fn psi(&self, w: f64, cfg: &QuadConfig) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.components {
            acc += match c.psi(w) {
                Some(v) => v,
                None => {
                    let single = MeasureSpec::single(c.clone());
                    let re = single.integrate(|y| quotient(|u| (u * w).cos(), y), &[], cfg)?.value;
                    let im = single.integrate(|y| quotient(|u| -(u * w).sin(), y), &[], cfg)?.value;
                    Complex64::new(re, im)
                }
            };
        }
        for &(l, m) in &self.atoms {
            acc += m * ((-I * l * w).exp() - 1.0) / l;
        }
        Ok(acc)
    }
}

// (cos(yt) − 1)/y², continuous at 0.
fn cos_term(y: f64, t: f64) -> f64 {
    let u = y * t;
    if u.abs() < 1e-4 {
        -0.5 * t * t * (1.0 - u * u / 12.0)
    } else {
        (u.cos() - 1.0) / (y * y)
    }
}

// (sin(yt) − yt)/y², continuous at 0.
fn sin_term(y: f64, t: f64) -> f64 {
    let u = y * t;
    if u.abs() < 1e-3 {
        -t * t * t * y / 6.0 * (1.0 - u * u / 20.0)
    } else {
        (u.sin() - u) / (y * y)
    }
}

// (φ(y) − φ(0))/y with a central-difference limit near 0.
fn quotient<F: Fn(f64) -> f64>(phi: F, y: f64) -> f64 {
    if y.abs() < 1e-8 {
        let h = 1e-6;
        (phi(h) - phi(-h)) / (2.0 * h)
    } else {
        (phi(y) - phi(0.0)) / y
    }
}

/// Finite-variance Lévy triple: drift, Gaussian atom `M({0})`, jump measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriple {
    #[serde(default)]
    pub drift_b: f64,
    #[serde(default)]
    pub gaussian_var: f64,
    #[serde(default)]
    pub jump_measure: MeasureSpec,
}

impl LevyTriple {
    pub fn new(drift_b: f64, gaussian_var: f64, jump_measure: MeasureSpec) -> Result<Self> {
        let t = Self {
            drift_b,
            gaussian_var,
            jump_measure,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn gaussian(variance: f64) -> Self {
        Self {
            drift_b: 0.0,
            gaussian_var: variance,
            jump_measure: MeasureSpec::empty(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift_b.is_finite() {
            return Err(SureError::InvalidParameter(format!("drift {}", self.drift_b)));
        }
        if !(self.gaussian_var.is_finite() && self.gaussian_var >= 0.0) {
            return Err(SureError::InvalidParameter(format!("gaussian_var {}", self.gaussian_var)));
        }
        self.jump_measure.validate()
    }

    pub fn mean(&self) -> f64 {
        self.drift_b
    }

    pub fn jump_mass(&self) -> f64 {
        self.jump_measure.mass()
    }

    pub fn variance(&self) -> f64 {
        self.gaussian_var + self.jump_mass()
    }

    pub fn is_gaussian(&self) -> bool {
        self.jump_measure.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            drift_b: self.drift_b + other.drift_b,
            gaussian_var: self.gaussian_var + other.gaussian_var,
            jump_measure: self.jump_measure.add(&other.jump_measure),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            drift_b: c * self.drift_b,
            gaussian_var: c * c * self.gaussian_var,
            jump_measure: self.jump_measure.scaled(c),
        }
    }

    pub fn shifted(&self, b: f64) -> Self {
        Self {
            drift_b: self.drift_b + b,
            ..self.clone()
        }
    }

    /// `log f̂(t)`.
    pub fn log_char_fn(&self, t: f64, cfg: &QuadConfig) -> Result<Complex64> {
        Ok(I * self.drift_b * t - 0.5 * self.gaussian_var * t * t + self.jump_measure.log_cf(t, cfg)?)
    }

    /// `ψ(w) = f̂′(−w) / (i f̂(−w))`, so that `K(g)^(w) = ĝ(w) ψ(w)`.
    pub fn char_multiplier(&self, w: f64, cfg: &QuadConfig) -> Result<Complex64> {
        Ok(Complex64::new(self.drift_b, -self.gaussian_var * w) + self.jump_measure.psi(w, cfg)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_mass(d: &JumpDensity) -> f64 {
        MeasureSpec::single(DensityComponent::new(1.0, 1.0, d.clone()))
            .integrate(|_| 1.0, &[], &QuadConfig::default())
            .unwrap()
            .value
    }

    #[test]
    fn base_masses_match_quadrature() {
        let bases = [
            JumpDensity::Laplace,
            JumpDensity::Gamma,
            JumpDensity::Sech,
            JumpDensity::CompoundPoisson {
                rate: 2.5,
                jump: JumpLaw::Normal { mean: 0.4, sd: 0.7 },
            },
            JumpDensity::CompoundPoisson {
                rate: 1.5,
                jump: JumpLaw::Exponential { rate: 2.0 },
            },
            JumpDensity::CompoundPoisson {
                rate: 1.0,
                jump: JumpLaw::Uniform { lo: -1.0, hi: 2.0 },
            },
            JumpDensity::Tabulated {
                xs: vec![-1.0, 0.5, 2.0],
                values: vec![0.0, 1.0, 0.0],
            },
        ];
        for b in &bases {
            let q = quad_mass(b);
            assert!((q - b.mass()).abs() < 1e-8 * b.mass().max(1.0), "{b:?}: {q} vs {}", b.mass());
        }
    }

    #[test]
    fn scaling_multiplies_mass_by_c_squared() {
        let m = MeasureSpec::single(DensityComponent::new(2.0, 1.0, JumpDensity::Gamma)).add(&MeasureSpec {
            components: vec![],
            atoms: vec![(0.5, 0.25)],
        });
        for c in [0.3, -1.7, 2.0] {
            let s = m.scaled(c);
            assert!((s.mass() - c * c * m.mass()).abs() < 1e-12);
            let q = s.integrate(|_| 1.0, &[], &QuadConfig::default()).unwrap().value;
            assert!((q - s.mass()).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_psi_matches_quadrature() {
        let cfg = QuadConfig::default();
        let bases = [
            JumpDensity::Laplace,
            JumpDensity::Gamma,
            JumpDensity::Sech,
            JumpDensity::CompoundPoisson {
                rate: 1.3,
                jump: JumpLaw::Uniform { lo: -0.5, hi: 1.5 },
            },
            JumpDensity::CompoundPoisson {
                rate: 0.7,
                jump: JumpLaw::Exponential { rate: 1.5 },
            },
            JumpDensity::CompoundPoisson {
                rate: 2.0,
                jump: JumpLaw::Normal { mean: -0.3, sd: 0.5 },
            },
        ];
        for base in &bases {
            let comp = DensityComponent::new(1.3, -0.8, base.clone());
            let single = MeasureSpec::single(comp.clone());
            for w in [-2.5, -0.3, 0.0, 0.7, 3.0] {
                let closed = comp.psi(w).unwrap();
                let re = single.integrate(|y| quotient(|u| (u * w).cos(), y), &[], &cfg).unwrap().value;
                let im = single.integrate(|y| quotient(|u| -(u * w).sin(), y), &[], &cfg).unwrap().value;
                assert!((closed - Complex64::new(re, im)).norm() < 1e-8, "{base:?} w={w}");
                let lc = comp.log_cf(w).unwrap();
                let re = single.integrate(|y| cos_term(y, w), &[], &cfg).unwrap().value;
                let im = single.integrate(|y| sin_term(y, w), &[], &cfg).unwrap().value;
                assert!((lc - Complex64::new(re, im)).norm() < 1e-8, "{base:?} t={w}");
            }
        }
    }

    #[test]
    fn atoms_at_origin_rejected() {
        let m = MeasureSpec {
            components: vec![],
            atoms: vec![(0.0, 1.0)],
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn merge_identical_components() {
        let a = MeasureSpec::single(DensityComponent::new(1.0, 0.5, JumpDensity::Laplace));
        let b = MeasureSpec::single(DensityComponent::new(1.0, -0.5, JumpDensity::Laplace));
        let s = a.add(&b);
        assert_eq!(s.components.len(), 1);
        assert_eq!(s.components[0].weight, 2.0);
    }
}
