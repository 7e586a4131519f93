//! Wavelet denoising with thresholds chosen per level from the risk
//! estimate of the noise law each level actually sees.
//!
//! A coefficient is `Σ_k c_k ε_k` for the band's taps `c_k`, so its noise is
//! the convolution of the scaled input laws.

mod select;
mod transform;

pub use select::{sure_select, sure_select_with, SelectOptions, SureObjective, ThresholdChoice};
pub use transform::{band_taps, dwt, idwt, level_taps, Band, Decomposition, Wavelet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SureError};
use crate::noise::{Family, NoiseModel};

/// Law of `Σ c_k ε_k` for iid `ε_k` drawn from `noise`.
pub fn propagate_taps(noise: &NoiseModel, taps: &[f64]) -> Result<NoiseModel> {
    if matches!(noise.family(), Family::Uniform { .. }) {
        return Err(SureError::UnsupportedModel(format!(
            "{noise} is not infinitely divisible; its weighted sums leave every supported family"
        )));
    }
    let mut acc: Option<NoiseModel> = None;
    for &c in taps.iter().filter(|c| c.abs() > 1e-15) {
        let term = noise.scale(c)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.convolve(&term)?,
        });
    }
    match acc {
        Some(m) => Ok(m),
        None => NoiseModel::normal(0.0),
    }
}

/// Noise law of detail level `level` (1 = finest), free of wrap-around.
pub fn propagate_noise(noise: &NoiseModel, wavelet: Wavelet, level: usize) -> Result<NoiseModel> {
    propagate_taps(noise, &level_taps(wavelet, level)?)
}

/// One band of a decomposition with the noise law of its coefficients.
#[derive(Debug, Clone)]
pub struct LevelCoeffs {
    pub band: Band,
    pub coeffs: Vec<f64>,
    pub noise: NoiseModel,
    pub n_total: usize,
}

/// Bands from coarsest to finest: the scaling band, then details
/// `levels, …, 1`.
pub fn level_coeffs(dec: &Decomposition, noise: &NoiseModel) -> Result<Vec<LevelCoeffs>> {
    let n = dec.len();
    let levels = dec.levels();
    let mut bands = vec![(Band::Scaling, dec.approx.clone())];
    for j in (1..=levels).rev() {
        bands.push((Band::Detail(j), dec.details[j - 1].clone()));
    }
    bands
        .into_iter()
        .map(|(band, coeffs)| {
            let taps = band_taps(dec.wavelet, band, n, levels)?;
            Ok(LevelCoeffs {
                band,
                coeffs,
                noise: propagate_taps(noise, &taps)?,
                n_total: n,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseOptions {
    pub wavelet: Wavelet,
    pub levels: usize,
    /// Number of bands, counted from the coarsest (the scaling band first),
    /// passed through without thresholding.
    pub keep_low: usize,
    /// Use this threshold everywhere instead of selecting one.
    pub fixed_lambda: Option<f64>,
    pub select: SelectOptions,
}

impl Default for DenoiseOptions {
    fn default() -> Self {
        Self {
            wavelet: Wavelet::D4,
            levels: 4,
            keep_low: 1,
            fixed_lambda: None,
            select: SelectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    /// Detail level (1 = finest), or 0 for the scaling band.
    pub level: usize,
    pub band: Band,
    pub lambda: f64,
    /// Estimated risk of the band estimate; `n σ²` for bands passed through.
    pub risk: f64,
    pub n_candidates: usize,
    pub noise_variance: f64,
    pub thresholded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseResult {
    pub signal: Vec<f64>,
    pub report: Vec<LevelReport>,
}

fn soft(x: f64, lambda: f64) -> f64 {
    x.signum() * (x.abs() - lambda).max(0.0)
}

/// Decompose, threshold each band, reconstruct.
pub fn denoise(signal: &[f64], noise: &NoiseModel, opts: &DenoiseOptions) -> Result<DenoiseResult> {
    noise.require_centered()?;
    let dec = dwt(signal, opts.wavelet, opts.levels)?;
    let bands = level_coeffs(&dec, noise)?;
    let results: Result<Vec<(Vec<f64>, LevelReport)>> = bands
        .par_iter()
        .enumerate()
        .map(|(rank, b)| {
            let level = match b.band {
                Band::Detail(j) => j,
                Band::Scaling => 0,
            };
            let noise_variance = b.noise.variance();
            if rank < opts.keep_low {
                return Ok((
                    b.coeffs.clone(),
                    LevelReport {
                        level,
                        band: b.band,
                        lambda: 0.0,
                        risk: b.coeffs.len() as f64 * noise_variance,
                        n_candidates: 0,
                        noise_variance,
                        thresholded: false,
                    },
                ));
            }
            let (lambda, risk, n_candidates) = match opts.fixed_lambda {
                Some(l) => {
                    if !(l.is_finite() && l >= 0.0) {
                        return Err(SureError::InvalidParameter(format!("threshold {l}")));
                    }
                    (l, SureObjective::new(&b.coeffs, &b.noise)?.value(l), 1)
                }
                None => {
                    let c = sure_select_with(&b.coeffs, &b.noise, b.n_total, &opts.select)?;
                    (c.lambda, c.risk_at_lambda, c.candidate_count)
                }
            };
            Ok((
                b.coeffs.iter().map(|&x| soft(x, lambda)).collect(),
                LevelReport {
                    level,
                    band: b.band,
                    lambda,
                    risk,
                    n_candidates,
                    noise_variance,
                    thresholded: true,
                },
            ))
        })
        .collect();
    let results = results?;
    let mut out = Decomposition {
        wavelet: opts.wavelet,
        details: vec![Vec::new(); opts.levels],
        approx: Vec::new(),
    };
    let mut report = Vec::with_capacity(results.len());
    for ((coeffs, r), b) in results.into_iter().zip(&bands) {
        match b.band {
            Band::Scaling => out.approx = coeffs,
            Band::Detail(j) => out.details[j - 1] = coeffs,
        }
        report.push(r);
    }
    Ok(DenoiseResult {
        signal: idwt(&out),
        report,
    })
}
