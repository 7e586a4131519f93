//! Threshold selection by minimizing the summed risk estimate of soft
//! thresholding, `R̂(λ) = Σ_i r̂_λ(x_i)`.
//!
//! For a jump part `J` and Gaussian variance `σ₀²`,
//! `r̂_λ(x) = σ² + min(x², λ²) + 2J(x − λ) − 2J(x + λ) − 2σ₀² 1{|x| < λ}`.

use serde::Serialize;

use crate::error::{Result, SureError};
use crate::kernel::{KernelConfig, SteinOperator};
use crate::noise::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdChoice {
    pub level: usize,
    pub lambda: f64,
    pub risk_at_lambda: f64,
    pub candidate_count: usize,
    /// `√(2 log n_total)` times the noise standard deviation.
    pub cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    /// Keep at most this many data-point candidates, evenly spaced in rank.
    pub max_candidates: Option<usize>,
    /// Locate interior minima between candidates from the sign of `R̂′`.
    pub refine: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            max_candidates: None,
            refine: true,
        }
    }
}

/// `R̂(λ)` and `R̂′(λ)` for a fixed coefficient vector.
#[derive(Debug, Clone)]
pub struct SureObjective {
    op: SteinOperator,
    coeffs: Vec<f64>,
    variance: f64,
}

impl SureObjective {
    pub fn new(coeffs: &[f64], noise: &NoiseModel) -> Result<Self> {
        noise.require_centered()?;
        if coeffs.is_empty() {
            return Err(SureError::EmptyInput("no coefficients to threshold".into()));
        }
        Ok(Self {
            op: SteinOperator::with_config(noise, KernelConfig::default())?,
            coeffs: coeffs.to_vec(),
            variance: noise.variance(),
        })
    }

    /// Terms of `R̂(λ)`, one per coefficient.
    fn terms(&self, lambda: f64) -> impl Iterator<Item = f64> + '_ {
        let k = self.op.kernel();
        let s0 = k.gaussian_var();
        self.coeffs.iter().map(move |&x| {
            let inside = if x.abs() < lambda { 2.0 * s0 } else { 0.0 };
            self.variance + (x * x).min(lambda * lambda) + 2.0 * (k.jump(x - lambda) - k.jump(x + lambda)) - inside
        })
    }

    pub fn value(&self, lambda: f64) -> f64 {
        self.terms(lambda).sum()
    }

    /// Rounding scale of [`Self::value`] at `lambda`.
    fn scale(&self, lambda: f64) -> f64 {
        self.terms(lambda).map(f64::abs).sum::<f64>() + self.coeffs.len() as f64 * self.variance
    }

    /// One-sided derivative in `λ` (from the right unless `left`).
    pub fn derivative(&self, lambda: f64, left: bool) -> f64 {
        let k = self.op.kernel();
        self.coeffs
            .iter()
            .map(|&x| {
                let outside = if left { x.abs() >= lambda } else { x.abs() > lambda };
                let quad = if outside { 2.0 * lambda } else { 0.0 };
                quad - 2.0 * (k.jump_derivative(x - lambda) + k.jump_derivative(x + lambda))
            })
            .sum()
    }
}

/// Minimizer of `R̂` over `[0, cap]`, preferring the largest `λ` among ties.
pub fn sure_select(coeffs: &[f64], noise: &NoiseModel, n_total: usize) -> Result<ThresholdChoice> {
    sure_select_with(coeffs, noise, n_total, &SelectOptions::default())
}

pub fn sure_select_with(coeffs: &[f64], noise: &NoiseModel, n_total: usize, opts: &SelectOptions) -> Result<ThresholdChoice> {
    let obj = SureObjective::new(coeffs, noise)?;
    let n_total = n_total.max(coeffs.len()).max(1);
    let cap = (2.0 * (n_total as f64).ln()).sqrt() * noise.sd();

    let mut data: Vec<f64> = coeffs.iter().map(|x| x.abs()).filter(|&a| a < cap).collect();
    data.sort_by(f64::total_cmp);
    data.dedup();
    if let Some(m) = opts.max_candidates {
        if m > 0 && data.len() > m {
            let step = data.len() as f64 / m as f64;
            data = (0..m).map(|i| data[(i as f64 * step) as usize]).collect();
        }
    }
    let mut cands = vec![0.0];
    for &a in &data {
        cands.push(a);
        // the Gaussian term drops just above each |x_i|
        cands.push(a.next_up().min(cap));
    }
    cands.push(cap);
    cands.sort_by(f64::total_cmp);
    cands.dedup();

    if opts.refine {
        let mut extra = Vec::new();
        for w in cands.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 4.0 * f64::EPSILON * b {
                continue;
            }
            if obj.derivative(a, false) < 0.0 && obj.derivative(b, true) > 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if obj.derivative(mid, false) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                extra.extend([lo, hi]);
            }
        }
        cands.extend(extra);
        cands.sort_by(f64::total_cmp);
        cands.dedup();
    }

    let risks: Vec<f64> = cands.iter().map(|&l| obj.value(l)).collect();
    let (imin, rmin) = risks
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, br), (i, &r)| if r < br { (i, r) } else { (bi, br) });
    let tol = 64.0 * f64::EPSILON * obj.scale(cands[imin]);
    let best = (0..cands.len())
        .rev()
        .find(|&i| risks[i] <= rmin + tol)
        .unwrap_or(imin);
    Ok(ThresholdChoice {
        level: 0,
        lambda: cands[best],
        risk_at_lambda: risks[best],
        candidate_count: cands.len(),
        cap,
    })
}
