//! Periodic orthonormal discrete wavelet transform.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SureError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    /// Daubechies, four taps.
    D4,
}

const S3: f64 = 1.732_050_807_568_877_2;
const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
const D4: [f64; 4] = [
    (1.0 + S3) / (4.0 * std::f64::consts::SQRT_2),
    (3.0 + S3) / (4.0 * std::f64::consts::SQRT_2),
    (3.0 - S3) / (4.0 * std::f64::consts::SQRT_2),
    (1.0 - S3) / (4.0 * std::f64::consts::SQRT_2),
];

impl Wavelet {
    pub fn lowpass(&self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR,
            Wavelet::D4 => &D4,
        }
    }

    /// `g_k = (−1)^k h_{L−1−k}`.
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|k| if k % 2 == 0 { h[l - 1 - k] } else { -h[l - 1 - k] })
            .collect()
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wavelet::Haar => "haar",
            Wavelet::D4 => "d4",
        })
    }
}

impl FromStr for Wavelet {
    type Err = SureError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Wavelet::Haar),
            "d4" | "db2" | "daub4" => Ok(Wavelet::D4),
            other => Err(SureError::InvalidParameter(format!("unknown wavelet '{other}' (expected haar or d4)"))),
        }
    }
}

/// Detail bands, finest first, and the final scaling band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub wavelet: Wavelet,
    /// `details[j − 1]` holds level `j`; level 1 is the finest.
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
}

impl Decomposition {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn len(&self) -> usize {
        self.approx.len() << self.details.len()
    }

    pub fn is_empty(&self) -> bool {
        self.approx.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.details
            .iter()
            .flatten()
            .chain(&self.approx)
            .map(|v| v * v)
            .sum()
    }
}

fn check_length(len: usize, levels: usize) -> Result<()> {
    if len == 0 || levels == 0 || levels >= usize::BITS as usize || !len.is_multiple_of(1usize << levels) {
        return Err(SureError::BadLength { len, levels });
    }
    Ok(())
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        for m in 0..h.len() {
            let v = x[(2 * k + m) % n];
            a[k] += h[m] * v;
            d[k] += g[m] * v;
        }
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let half = a.len();
    let n = 2 * half;
    let mut x = vec![0.0; n];
    for k in 0..half {
        for m in 0..h.len() {
            x[(2 * k + m) % n] += h[m] * a[k] + g[m] * d[k];
        }
    }
    x
}

/// `levels`-level decomposition; the length must be a multiple of `2^levels`.
pub fn dwt(signal: &[f64], wavelet: Wavelet, levels: usize) -> Result<Decomposition> {
    check_length(signal.len(), levels)?;
    let h = wavelet.lowpass();
    let g = wavelet.highpass();
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, h, &g);
        details.push(d);
        approx = a;
    }
    Ok(Decomposition {
        wavelet,
        details,
        approx,
    })
}

pub fn idwt(dec: &Decomposition) -> Vec<f64> {
    let h = dec.wavelet.lowpass();
    let g = dec.wavelet.highpass();
    let mut x = dec.approx.clone();
    for d in dec.details.iter().rev() {
        x = synthesis_step(&x, d, h, &g);
    }
    x
}

/// Which band of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// Detail level, 1 = finest.
    Detail(usize),
    /// Scaling coefficients after `levels` steps.
    Scaling,
}

/// Signal-domain weights `c_n` with `coefficient 0 of band = Σ c_n x_n`,
/// for a signal of length `len` decomposed over `levels` levels. Periodic
/// wrap-around folds taps together when the filter is longer than `len`.
pub fn band_taps(wavelet: Wavelet, band: Band, len: usize, levels: usize) -> Result<Vec<f64>> {
    check_length(len, levels)?;
    let mut details: Vec<Vec<f64>> = (1..=levels).map(|j| vec![0.0; len >> j]).collect();
    let mut approx = vec![0.0; len >> levels];
    match band {
        Band::Detail(j) => {
            if j == 0 || j > levels {
                return Err(SureError::InvalidParameter(format!("level {j} outside 1..={levels}")));
            }
            details[j - 1][0] = 1.0;
        }
        Band::Scaling => approx[0] = 1.0,
    }
    Ok(idwt(&Decomposition {
        wavelet,
        details,
        approx,
    }))
}

/// Nonzero taps of detail level `j`, free of wrap-around.
pub fn level_taps(wavelet: Wavelet, level: usize) -> Result<Vec<f64>> {
    if level == 0 || level > 40 {
        return Err(SureError::InvalidParameter(format!("level {level}")));
    }
    let len = 1usize << (level + 2);
    Ok(band_taps(wavelet, Band::Detail(level), len, level)?
        .into_iter()
        .filter(|c| c.abs() > 1e-15)
        .collect())
}
