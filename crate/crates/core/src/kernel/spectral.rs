//! `K` through the Fourier multiplier: `(K g)^(ω) = ψ(−ω) ĝ(ω)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, SureError};
use crate::noise::NoiseModel;
use crate::quad::QuadConfig;

/// Sample points `start + k·step`, `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) || !start.is_finite() || len < 8 {
            return Err(SureError::InvalidParameter(format!(
                "grid start {start}, step {step}, len {len}"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// `len` points spanning `[−half_extent, half_extent)`.
    pub fn centered(half_extent: f64, len: usize) -> Result<Self> {
        Self::new(-half_extent, 2.0 * half_extent / len as f64, len)
    }

    /// Default grid for a function supported in `[−radius, radius]`.
    pub fn for_support(radius: f64) -> Result<Self> {
        let cfg = SpectralConfig::default();
        Self::centered(cfg.extent_factor * radius, cfg.points)
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.point(k)).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len).map(|k| f(self.point(k))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub points: usize,
    /// Grid half-extent as a multiple of the test function's support radius.
    pub extent_factor: f64,
    /// Largest `|g|` allowed in the outer eighth of the grid on either side,
    /// relative to `max |g|`.
    pub boundary_tol: f64,
    pub quad: QuadConfig,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            points: 1 << 14,
            extent_factor: 16.0,
            boundary_tol: 1e-9,
            quad: QuadConfig::default(),
        }
    }
}

/// `K(g)` on the grid of the samples of `g`.
pub fn spectral_k(model: &NoiseModel, samples: &[f64], grid: &UniformGrid) -> Result<Vec<f64>> {
    spectral_k_with(model, samples, grid, &SpectralConfig::default())
}

pub fn spectral_k_with(
    model: &NoiseModel,
    samples: &[f64],
    grid: &UniformGrid,
    cfg: &SpectralConfig,
) -> Result<Vec<f64>> {
    let n = grid.len;
    if samples.len() != n {
        return Err(SureError::InvalidParameter(format!(
            "{} samples on a grid of {n} points",
            samples.len()
        )));
    }
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        // still reject models without a multiplier
        model.char_multiplier_with(0.0, &cfg.quad)?;
        return Ok(vec![0.0; n]);
    }
    let edge = n / 8;
    let outer = samples[..edge]
        .iter()
        .chain(&samples[n - edge..])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if outer > cfg.boundary_tol * peak {
        return Err(SureError::GridBoundary(format!(
            "|g| reaches {:.3e} of its peak in the outer eighth of the grid",
            outer / peak
        )));
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let period = n as f64 * grid.step;
    for (k, z) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let omega = 2.0 * PI * kk / period;
        *z *= model.char_multiplier_with(-omega, &cfg.quad)?;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|z| z.re / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64) -> f64 {
        if x.abs() >= 2.0 {
            0.0
        } else {
            let u = x / 2.0;
            (-1.0 / (1.0 - u * u)).exp()
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let grid = UniformGrid::for_support(2.0).unwrap();
        let out = spectral_k(&NoiseModel::laplace(1.0).unwrap(), &vec![0.0; grid.len], &grid).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normal_gives_scaled_derivative() {
        let grid = UniformGrid::for_support(2.0).unwrap();
        let g = grid.sample(bump);
        let out = spectral_k(&NoiseModel::normal(1.3).unwrap(), &g, &grid).unwrap();
        let h = 1e-5;
        for k in (grid.len / 4..3 * grid.len / 4).step_by(97) {
            let x = grid.point(k);
            let fd = (bump(x + h) - bump(x - h)) / (2.0 * h);
            assert!((out[k] - 1.3 * fd).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn boundary_contamination_is_rejected() {
        let grid = UniformGrid::centered(3.0, 1024).unwrap();
        let g = grid.sample(|x| (-x * x / 4.0).exp());
        assert!(matches!(
            spectral_k(&NoiseModel::laplace(1.0).unwrap(), &g, &grid),
            Err(SureError::GridBoundary(_))
        ));
    }

    #[test]
    fn uniform_has_no_multiplier() {
        let grid = UniformGrid::for_support(2.0).unwrap();
        let g = grid.sample(bump);
        assert!(spectral_k(&NoiseModel::uniform(1.0).unwrap(), &g, &grid).is_err());
    }
}
