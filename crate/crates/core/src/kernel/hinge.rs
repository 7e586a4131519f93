//! The hinge kernel `h = K(g₀⁺)`, with `g₀⁺(x) = max(x, 0)`.
//!
//! `h` is linear in the Lévy measure, so it is assembled per component:
//! a component with weight `w` and scale `c` contributes `w c² h_B(x/c)` for
//! `c > 0` and `w c² (m_B − h_B(x/c))` for `c < 0`, where `h_B` and `m_B` are
//! the hinge kernel and mass of its base density. Laplace and Gamma bases have
//! closed forms; every other base is tabulated once by quadrature and
//! interpolated with cubic Lagrange polynomials.

use std::f64::consts::SQRT_2;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::KernelConfig;
use crate::error::Result;
use crate::noise::{JumpDensity, LevyTriple, NoiseModel, TAIL_TOL};
use crate::quad::{integrate, QuadConfig};

/// How a hinge kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exactness {
    ClosedForm,
    /// Tabulated by quadrature at tolerance `tol` on a grid of spacing `step`
    /// (the finest used by any component, in its own coordinates).
    Quadrature { tol: f64, step: f64 },
}

/// Tabulated base kernel. The logarithmic part `−m(0∓)(x ln|x| − x)`, present
/// when the density does not vanish at the origin, is subtracted before
/// tabulation; the origin is a node and no stencil straddles it.
#[derive(Debug)]
pub(crate) struct MemoGrid {
    step: f64,
    /// Index of the node at the origin.
    origin: usize,
    regular: Vec<f64>,
    /// Density at `0⁻` and `0⁺`.
    m_left: f64,
    m_right: f64,
    mass: f64,
}

impl MemoGrid {
    fn build(base: &JumpDensity, cfg: &KernelConfig) -> Result<Self> {
        let (slo, shi) = base.support(TAIL_TOL);
        let r = slo.abs().max(shi.abs());
        let mass = base.mass();
        let mut step = cfg.memo_step * mass.sqrt();
        let max_pts = cfg.memo_max_points.max(16);
        if 2.0 * r / step > max_pts as f64 {
            step = 2.0 * r / max_pts as f64;
        }
        let half = (r / step).ceil() as usize + 1;
        let tiny = 1e-300;
        let (m_left, m_right) = (base.density(-tiny), base.density(tiny));
        let quad = QuadConfig {
            abs_tol: cfg.quad.abs_tol.min(1e-13),
            rel_tol: 1e-13,
            max_intervals: cfg.quad.max_intervals,
        };
        let breaks = base.breakpoints();
        let mut grid = Self {
            step,
            origin: half,
            regular: Vec::new(),
            m_left,
            m_right,
            mass,
        };
        let regular: Result<Vec<f64>> = (0..=2 * half)
            .into_par_iter()
            .map(|k| {
                let x = (k as f64 - half as f64) * step;
                let h = base_hinge_quadrature(base, x, (slo, shi), &breaks, &quad)?;
                Ok(h - grid.singular(x))
            })
            .collect();
        grid.regular = regular?;
        Ok(grid)
    }

    fn singular(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let m = if x > 0.0 { self.m_left } else { self.m_right };
        -m * (x * x.abs().ln() - x)
    }

    fn singular_derivative(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let m = if x > 0.0 { self.m_left } else { self.m_right };
        -m * x.abs().ln()
    }

    fn stencil(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.regular.len();
        let s = x / self.step + self.origin as f64;
        if s <= 0.0 || s >= (n - 1) as f64 {
            return None;
        }
        let i = s.floor() as usize;
        let mut start = i.saturating_sub(1).min(n - 4);
        if i >= self.origin {
            start = start.max(self.origin);
        } else {
            start = start.min(self.origin - 3);
        }
        Some((start, s - start as f64))
    }

    fn value(&self, x: f64) -> f64 {
        match self.stencil(x) {
            None => {
                if x < 0.0 {
                    0.0
                } else {
                    self.mass
                }
            }
            Some((start, t)) => {
                let v = &self.regular[start..start + 4];
                // Lagrange basis on nodes 0,1,2,3
                let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
                let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
                let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
                let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
                v[0] * l0 + v[1] * l1 + v[2] * l2 + v[3] * l3 + self.singular(x)
            }
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self.stencil(x) {
            None => 0.0,
            Some((start, t)) => {
                let v = &self.regular[start..start + 4];
                let d0 = -(3.0 * t * t - 12.0 * t + 11.0) / 6.0;
                let d1 = (3.0 * t * t - 10.0 * t + 6.0) / 2.0;
                let d2 = -(3.0 * t * t - 8.0 * t + 3.0) / 2.0;
                let d3 = (3.0 * t * t - 6.0 * t + 2.0) / 6.0;
                (v[0] * d0 + v[1] * d1 + v[2] * d2 + v[3] * d3) / self.step + self.singular_derivative(x)
            }
        }
    }
}

/// `∫ ((x + y)⁺ − x⁺)/y m(y) dy` for a base density.
fn base_hinge_quadrature(
    base: &JumpDensity,
    x: f64,
    support: (f64, f64),
    breaks: &[f64],
    quad: &QuadConfig,
) -> Result<f64> {
    let mut b = breaks.to_vec();
    b.push(-x);
    let r = integrate(
        |y| hinge_quotient(x, y) * base.density(y),
        support.0,
        support.1,
        &b,
        quad,
    )?;
    Ok(r.value)
}

/// `((x + y)⁺ − x⁺)/y`, with its `y → 0` limit `1{x ≥ 0}`.
pub(crate) fn hinge_quotient(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    ((x + y).max(0.0) - x.max(0.0)) / y
}

#[derive(Debug)]
pub(crate) enum BaseKernel {
    Laplace,
    Gamma,
    Memo { base: JumpDensity, grid: MemoGrid },
}

impl BaseKernel {
    fn mass(&self) -> f64 {
        match self {
            BaseKernel::Laplace | BaseKernel::Gamma => 1.0,
            BaseKernel::Memo { grid, .. } => grid.mass,
        }
    }

    fn value(&self, x: f64) -> f64 {
        match self {
            BaseKernel::Laplace => {
                if x <= 0.0 {
                    0.5 * (SQRT_2 * x).exp()
                } else {
                    1.0 - 0.5 * (-SQRT_2 * x).exp()
                }
            }
            BaseKernel::Gamma => {
                if x <= 0.0 {
                    x.exp()
                } else {
                    1.0
                }
            }
            BaseKernel::Memo { grid, .. } => grid.value(x),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            BaseKernel::Laplace => (-SQRT_2 * x.abs()).exp() / SQRT_2,
            BaseKernel::Gamma => {
                if x < 0.0 {
                    x.exp()
                } else {
                    0.0
                }
            }
            BaseKernel::Memo { grid, .. } => grid.derivative(x),
        }
    }

    fn step(&self) -> Option<f64> {
        match self {
            BaseKernel::Memo { grid, .. } => Some(grid.step),
            _ => None,
        }
    }
}

static SECH_KERNEL: OnceLock<Arc<BaseKernel>> = OnceLock::new();

fn base_kernel(base: &JumpDensity, cfg: &KernelConfig, cache: &mut Vec<Arc<BaseKernel>>) -> Result<Arc<BaseKernel>> {
    match base {
        JumpDensity::Laplace => return Ok(Arc::new(BaseKernel::Laplace)),
        JumpDensity::Gamma => return Ok(Arc::new(BaseKernel::Gamma)),
        JumpDensity::Sech if *cfg == KernelConfig::default() => {
            if let Some(k) = SECH_KERNEL.get() {
                return Ok(k.clone());
            }
            let grid = MemoGrid::build(base, cfg)?;
            let k = SECH_KERNEL.get_or_init(|| {
                Arc::new(BaseKernel::Memo {
                    base: base.clone(),
                    grid,
                })
            });
            return Ok(k.clone());
        }
        _ => {}
    }
    if let Some(k) = cache
        .iter()
        .find(|k| matches!(&***k, BaseKernel::Memo { base: b, .. } if b == base))
    {
        return Ok(k.clone());
    }
    let k = Arc::new(BaseKernel::Memo {
        base: base.clone(),
        grid: MemoGrid::build(base, cfg)?,
    });
    cache.push(k.clone());
    Ok(k)
}

#[derive(Debug, Clone)]
struct Part {
    weight: f64,
    scale: f64,
    kernel: Arc<BaseKernel>,
}

/// `h = K(g₀⁺)` for the centered part of a law (drift excluded).
#[derive(Debug, Clone)]
pub struct HingeKernel {
    gaussian_var: f64,
    jump_mass: f64,
    parts: Vec<Part>,
    atoms: Vec<(f64, f64)>,
    exactness: Exactness,
}

impl HingeKernel {
    /// Kernel of a centered infinitely divisible model.
    pub fn new(model: &NoiseModel) -> Result<Self> {
        Self::with_config(model, &KernelConfig::default())
    }

    pub fn with_config(model: &NoiseModel, cfg: &KernelConfig) -> Result<Self> {
        let triple = model.levy_view()?;
        model.require_centered()?;
        Self::from_triple(&triple, cfg)
    }

    /// Kernel of the triple with its drift ignored.
    pub fn from_triple(triple: &LevyTriple, cfg: &KernelConfig) -> Result<Self> {
        let mut cache = Vec::new();
        let mut parts = Vec::new();
        let mut finest: Option<f64> = None;
        for c in &triple.jump_measure.components {
            if c.weight == 0.0 {
                continue;
            }
            let kernel = base_kernel(&c.base, cfg, &mut cache)?;
            if let Some(s) = kernel.step() {
                let s = s * c.scale.abs();
                finest = Some(finest.map_or(s, |f: f64| f.min(s)));
            }
            parts.push(Part {
                weight: c.weight,
                scale: c.scale,
                kernel,
            });
        }
        let exactness = match finest {
            None => Exactness::ClosedForm,
            Some(step) => Exactness::Quadrature {
                tol: cfg.quad.abs_tol.min(1e-13),
                step,
            },
        };
        Ok(Self {
            gaussian_var: triple.gaussian_var,
            jump_mass: triple.jump_mass(),
            parts,
            atoms: triple.jump_measure.atoms.clone(),
            exactness,
        })
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn gaussian_var(&self) -> f64 {
        self.gaussian_var
    }

    pub fn jump_mass(&self) -> f64 {
        self.jump_mass
    }

    /// `σ²`, the limit of `h` at `+∞`.
    pub fn variance(&self) -> f64 {
        self.gaussian_var + self.jump_mass
    }

    /// Jump part of `h`.
    pub fn jump(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.parts {
            let u = x / p.scale;
            let hb = p.kernel.value(u);
            let v = if p.scale > 0.0 { hb } else { p.kernel.mass() - hb };
            acc += p.weight * p.scale * p.scale * v;
        }
        for &(a, m) in &self.atoms {
            acc += m * hinge_quotient(x, a);
        }
        acc
    }

    /// Derivative of the jump part of `h` (away from its kinks).
    pub fn jump_derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.parts {
            acc += p.weight * p.scale.abs() * p.kernel.derivative(x / p.scale);
        }
        for &(a, m) in &self.atoms {
            let d = if x + a > 0.0 { 1.0 } else { 0.0 } - if x > 0.0 { 1.0 } else { 0.0 };
            acc += m * d / a;
        }
        acc
    }

    /// `K(g₀⁺)(x)`.
    pub fn h_plus(&self, x: f64) -> f64 {
        let g = if x >= 0.0 { self.gaussian_var } else { 0.0 };
        g + self.jump(x)
    }

    /// `K(g₀⁻)(x) = σ² − h(x)`.
    pub fn h_minus(&self, x: f64) -> f64 {
        let g = if x < 0.0 { self.gaussian_var } else { 0.0 };
        g + self.jump_mass - self.jump(x)
    }

    /// Points where `h` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = vec![0.0];
        k.extend(self.atoms.iter().map(|&(a, _)| -a));
        k
    }
}

/// `h = K(g₀⁺)` of a centered infinitely divisible model.
pub fn hinge_kernel(model: &NoiseModel) -> Result<HingeKernel> {
    HingeKernel::new(model)
}
