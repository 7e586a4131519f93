//! Numerical checks of how `K` transforms under translation of `g`, shifting,
//! convolution and scaling of the law.

use serde::Serialize;

use super::{levy_k, TestFunction};
use crate::error::Result;
use crate::noise::NoiseModel;

/// Maximum deviation of each transformation rule over the evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Report {
    /// `K_f(g(· + b))(x)` against `K_f(g)(x + b)`.
    pub translation: f64,
    /// `K_{f ∗ δ_b}(g)` against `K_f(g) + b g`.
    pub shift: f64,
    /// `K_{f₁ ∗ f₂}(g)` against `K_{f₁}(g) + K_{f₂}(g)`.
    pub convolution: f64,
    /// `K_{law of cX}(g)(x)` against `c K_f(g(c ·))(x/c)`.
    pub scaling: f64,
}

impl Theorem1Report {
    pub fn max(&self) -> f64 {
        self.translation.max(self.shift).max(self.convolution).max(self.scaling)
    }
}

struct Translated<'a> {
    g: &'a dyn TestFunction,
    b: f64,
}

impl TestFunction for Translated<'_> {
    fn value(&self, x: f64) -> f64 {
        self.g.value(x + self.b)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        self.g.derivative(x + self.b)
    }

    fn kinks(&self) -> Vec<f64> {
        self.g.kinks().iter().map(|k| k - self.b).collect()
    }
}

struct Dilated<'a> {
    g: &'a dyn TestFunction,
    c: f64,
}

impl TestFunction for Dilated<'_> {
    fn value(&self, x: f64) -> f64 {
        self.g.value(self.c * x)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        self.g.derivative(self.c * x).map(|d| self.c * d)
    }

    fn kinks(&self) -> Vec<f64> {
        self.g.kinks().iter().map(|k| k / self.c).collect()
    }
}

fn deviation<F: Fn(f64) -> Result<f64>>(xs: &[f64], f: F) -> f64 {
    xs.iter().fold(0.0f64, |m, &x| match f(x) {
        Ok(d) if d.is_finite() => m.max(d.abs()),
        _ => f64::INFINITY,
    })
}

/// Checks all four rules at the points `xs`. A failed evaluation shows up as
/// an infinite deviation.
pub fn check_theorem1(
    f1: &NoiseModel,
    f2: &NoiseModel,
    g: &dyn TestFunction,
    b: f64,
    c: f64,
    xs: &[f64],
) -> Theorem1Report {
    let k = |m: &NoiseModel, g: &dyn TestFunction, x: f64| levy_k(m, g, x).map(|r| r.value);
    let tg = Translated { g, b };
    let translation = if b == 0.0 {
        0.0
    } else {
        deviation(xs, |x| Ok(k(f1, &tg, x)? - k(f1, g, x + b)?))
    };
    let shift = match f1.shift(b) {
        Ok(fb) => deviation(xs, |x| Ok(k(&fb, g, x)? - k(f1, g, x)? - b * g.value(x))),
        Err(_) => f64::INFINITY,
    };
    let convolution = match f1.convolve(f2) {
        Ok(f12) => deviation(xs, |x| Ok(k(&f12, g, x)? - k(f1, g, x)? - k(f2, g, x)?)),
        Err(_) => f64::INFINITY,
    };
    let scaling = if c == 1.0 {
        0.0
    } else {
        match f1.scale(c) {
            Ok(fc) => {
                let dg = Dilated { g, c };
                deviation(xs, |x| Ok(k(&fc, g, x)? - c * k(f1, &dg, x / c)?))
            }
            Err(_) => f64::INFINITY,
        }
    };
    Theorem1Report {
        translation,
        shift,
        convolution,
        scaling,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SmoothTest;

    #[test]
    fn laplace_pair() {
        let l = NoiseModel::laplace(1.0).unwrap();
        let g = SmoothTest::new(|x: f64| (x / 2.0).tanh(), |x: f64| 0.5 / (x / 2.0).cosh().powi(2));
        let xs: Vec<f64> = (-10..=10).map(|i| 0.4 * i as f64).collect();
        let r = check_theorem1(&l, &l, &g, 0.6, -1.7, &xs);
        assert!(r.max() < 1e-6, "{r:?}");
        let r0 = check_theorem1(&l, &l, &g, 0.0, 1.0, &xs);
        assert_eq!(r0.translation, 0.0);
        assert_eq!(r0.scaling, 0.0);
    }
}
