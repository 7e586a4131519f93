//! Samplers for every noise model and Monte Carlo checks of the Stein
//! identity and of risk.
//!
//! Draws come from ChaCha8 streams keyed by `(seed, chunk index)` with a fixed
//! chunk length, and chunk results are merged in index order, so a batch or
//! an estimate depends on the seed only, never on the thread count.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SureError};
use crate::estimator::EstimatorExpr;
use crate::kernel::SteinOperator;
use crate::noise::{DensityComponent, Family, JumpDensity, JumpLaw, LevyTriple, NoiseModel, TAIL_TOL};
use crate::quad::{gauss_legendre, CompensatedSum};

/// Draws per random stream.
pub const CHUNK: usize = 65_536;

/// Largest jump rate used when a jump measure is approximated by a compound
/// Poisson law.
pub const MAX_APPROX_RATE: f64 = 256.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub model_id: String,
    pub seed: u64,
    pub count: usize,
    pub values: Vec<f64>,
    /// Variance moved from small jumps into the Gaussian part when the jump
    /// measure had to be approximated; 0 for exact samplers.
    pub approximation_tol: f64,
}

/// Uniform on the open interval `(0, 1)`.
fn open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn sech_cdf(x: f64) -> f64 {
    2.0 / PI * (0.5 * PI * x).exp().atan()
}

pub fn sech_quantile(u: f64) -> f64 {
    2.0 / PI * (0.5 * PI * u).tan().ln()
}

fn laplace_unit<R: RngCore>(rng: &mut R) -> f64 {
    let u = open01(rng);
    if u < 0.5 {
        (2.0 * u).ln() / SQRT_2
    } else {
        -(2.0 * (1.0 - u)).ln() / SQRT_2
    }
}

fn gamma<R: RngCore>(rng: &mut R, shape: f64) -> f64 {
    Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

/// Poisson counts with a prepared distribution.
#[derive(Debug, Clone)]
struct Counts {
    mean: f64,
    dist: Option<Poisson<f64>>,
}

impl Counts {
    fn new(mean: f64) -> Self {
        Self {
            mean,
            dist: (mean > 0.0).then(|| Poisson::new(mean).expect("positive mean")),
        }
    }

    fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        self.dist.as_ref().map_or(0.0, |d| d.sample(rng))
    }
}

fn jump_draw<R: RngCore>(rng: &mut R, jump: &JumpLaw) -> f64 {
    match *jump {
        JumpLaw::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
        JumpLaw::Uniform { lo, hi } => lo + (hi - lo) * open01(rng),
        JumpLaw::Exponential { rate } => -open01(rng).ln() / rate,
    }
}

/// Compound Poisson approximation of the jumps `|y| ≥ ε` of a density
/// component, sampled cell by cell.
#[derive(Debug, Clone)]
struct JumpTable {
    edges: Vec<(f64, f64)>,
    cdf: Vec<f64>,
    counts: Counts,
    mean: f64,
}

impl JumpTable {
    /// Log-spaced cells per side, from `radius·1e−9` to `radius`.
    const CELLS: usize = 4000;

    fn build(c: &DensityComponent) -> Result<(Self, f64)> {
        let (lo, hi) = c.support(TAIL_TOL);
        let radius = lo.abs().max(hi.abs());
        let inner = radius * 1e-9;
        let (nodes, weights) = gauss_legendre(8);
        // (left edge, right edge, ν mass, M mass), innermost first
        let side = |sign: f64, reach: f64| -> Vec<(f64, f64, f64, f64)> {
            if reach <= inner {
                return Vec::new();
            }
            let r = (reach / inner).ln() / Self::CELLS as f64;
            (0..Self::CELLS)
                .map(|i| {
                    let a = inner * (r * i as f64).exp();
                    let b = if i + 1 == Self::CELLS { reach } else { inner * (r * (i + 1) as f64).exp() };
                    let (mut nu, mut mm) = (0.0, 0.0);
                    for (x, w) in nodes.iter().zip(&weights) {
                        let y = sign * (0.5 * (a + b) + 0.5 * (b - a) * x);
                        let d = c.density(y) * 0.5 * (b - a) * w;
                        mm += d;
                        nu += d / (y * y);
                    }
                    let (l, u) = if sign > 0.0 { (a, b) } else { (-b, -a) };
                    (l, u, nu, mm)
                })
                .collect()
        };
        let mut cells = side(-1.0, -lo.min(0.0));
        cells.extend(side(1.0, hi.max(0.0)));
        // keep the largest jumps until the rate cap is reached
        let size = |cell: &(f64, f64, f64, f64)| cell.0.abs().max(cell.1.abs());
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&i, &j| size(&cells[j]).total_cmp(&size(&cells[i])));
        let mut keep = vec![false; cells.len()];
        let mut rate = 0.0;
        for &i in &order {
            if rate + cells[i].2 > MAX_APPROX_RATE {
                break;
            }
            rate += cells[i].2;
            keep[i] = true;
        }
        let mut folded = 2.0 * inner * c.density(0.0);
        let mut edges = Vec::new();
        let mut cdf = Vec::new();
        let mut total = 0.0;
        let mut first_moment = 0.0;
        for (i, &(l, u, nu, mm)) in cells.iter().enumerate() {
            if !keep[i] {
                folded += mm;
                continue;
            }
            total += nu;
            first_moment += nu * 0.5 * (l + u);
            edges.push((l, u));
            cdf.push(total);
        }
        if !(total.is_finite() && total > 0.0) {
            return Err(SureError::DegenerateLaw("jump measure cannot be normalized".into()));
        }
        Ok((
            Self {
                edges,
                cdf,
                counts: Counts::new(total),
                mean: first_moment / total,
            },
            folded,
        ))
    }

    fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        let u = open01(rng) * self.counts.mean;
        let i = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
        let (x0, x1) = self.edges[i];
        x0 + (x1 - x0) * open01(rng)
    }

    /// Centered compound Poisson draw.
    fn sample<R: RngCore>(&self, rng: &mut R) -> f64 {
        let n = self.counts.draw(rng) as u64;
        let mut s = 0.0;
        for _ in 0..n {
            s += self.draw(rng);
        }
        s - self.counts.mean * self.mean
    }
}

#[derive(Debug, Clone)]
enum Piece {
    /// `(c/√2)(G₁ − G₂)`, `G ~ Gamma(w)`.
    BilateralGamma { weight: f64, scale: f64 },
    /// `c (G − w)`.
    Gamma { weight: f64, scale: f64 },
    /// Sum of `copies` unit sech draws, times `scale`.
    Sech { copies: u32, scale: f64 },
    /// `scale Σ J_k − scale·rate·E J`, `N ~ Poisson(rate)`.
    CompoundPoisson { counts: Counts, jump: JumpLaw, scale: f64 },
    Table(JumpTable),
    /// `a (N − m/a²)`, `N ~ Poisson(m/a²)`.
    Atom { location: f64, counts: Counts },
}

impl Piece {
    fn sample<R: RngCore>(&self, rng: &mut R) -> f64 {
        match self {
            Piece::BilateralGamma { weight, scale } => {
                scale / SQRT_2 * (gamma(rng, *weight) - gamma(rng, *weight))
            }
            Piece::Gamma { weight, scale } => scale * (gamma(rng, *weight) - weight),
            Piece::Sech { copies, scale } => scale * (0..*copies).map(|_| sech_quantile(open01(rng))).sum::<f64>(),
            Piece::CompoundPoisson { counts, jump, scale } => {
                let n = counts.draw(rng) as u64;
                let mut s = 0.0;
                for _ in 0..n {
                    s += jump_draw(rng, jump);
                }
                scale * (s - counts.mean * jump.mean())
            }
            Piece::Table(t) => t.sample(rng),
            Piece::Atom { location, counts } => location * (counts.draw(rng) - counts.mean),
        }
    }
}

#[derive(Debug, Clone)]
enum Sampler {
    Normal { sd: f64 },
    Laplace,
    Gamma { shape: f64 },
    Sech,
    Uniform { halfwidth: f64 },
    CompoundPoisson { counts: Counts, jump: JumpLaw },
    Triple { drift: f64, gaussian_sd: f64, pieces: Vec<Piece> },
}

/// A prepared sampler for `scale · Y + shift`.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    inner: Sampler,
    scale: f64,
    shift: f64,
    approximation_tol: f64,
}

impl ModelSampler {
    pub fn new(model: &NoiseModel) -> Result<Self> {
        let mut approximation_tol = 0.0;
        let inner = match model.family() {
            Family::Normal { variance } => Sampler::Normal { sd: variance.sqrt() },
            Family::Laplace => Sampler::Laplace,
            Family::CenteredGamma { shape } => Sampler::Gamma { shape: *shape },
            Family::HyperbolicSecant => Sampler::Sech,
            Family::Uniform { halfwidth } => Sampler::Uniform { halfwidth: *halfwidth },
            Family::CompoundPoisson { rate, jump } => Sampler::CompoundPoisson {
                counts: Counts::new(*rate),
                jump: jump.clone(),
            },
            Family::GenericId(t) => {
                let (s, tol) = triple_sampler(t)?;
                approximation_tol = tol;
                s
            }
        };
        let c = model.scale_factor();
        Ok(Self {
            inner,
            scale: c,
            shift: model.shift_amount(),
            approximation_tol: approximation_tol * c * c,
        })
    }

    /// Variance moved from small jumps into the Gaussian part.
    pub fn approximation_tol(&self) -> f64 {
        self.approximation_tol
    }

    pub fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        let y = match &self.inner {
            Sampler::Normal { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            Sampler::Laplace => laplace_unit(rng),
            Sampler::Gamma { shape } => gamma(rng, *shape) - shape,
            Sampler::Sech => sech_quantile(open01(rng)),
            Sampler::Uniform { halfwidth } => halfwidth * (2.0 * open01(rng) - 1.0),
            Sampler::CompoundPoisson { counts, jump } => {
                let n = counts.draw(rng) as u64;
                let mut s = 0.0;
                for _ in 0..n {
                    s += jump_draw(rng, jump);
                }
                s
            }
            Sampler::Triple {
                drift,
                gaussian_sd,
                pieces,
            } => {
                let mut s = *drift;
                if *gaussian_sd > 0.0 {
                    s += gaussian_sd * rng.sample::<f64, _>(StandardNormal);
                }
                for p in pieces {
                    s += p.sample(rng);
                }
                s
            }
        };
        self.scale * y + self.shift
    }
}

fn triple_sampler(t: &LevyTriple) -> Result<(Sampler, f64)> {
    let mut pieces = Vec::new();
    let mut folded = 0.0;
    for c in &t.jump_measure.components {
        if c.weight == 0.0 {
            continue;
        }
        let piece = match &c.base {
            JumpDensity::Laplace => Piece::BilateralGamma {
                weight: c.weight,
                scale: c.scale,
            },
            JumpDensity::Gamma => Piece::Gamma {
                weight: c.weight,
                scale: c.scale,
            },
            JumpDensity::Sech if c.weight.fract() == 0.0 && c.weight <= 64.0 => Piece::Sech {
                copies: c.weight as u32,
                scale: c.scale,
            },
            JumpDensity::CompoundPoisson { rate, jump } => Piece::CompoundPoisson {
                counts: Counts::new(rate * c.weight),
                jump: jump.clone(),
                scale: c.scale,
            },
            _ => {
                let (table, f) = JumpTable::build(c)?;
                folded += f;
                Piece::Table(table)
            }
        };
        pieces.push(piece);
    }
    for &(a, m) in &t.jump_measure.atoms {
        pieces.push(Piece::Atom {
            location: a,
            counts: Counts::new(m / (a * a)),
        });
    }
    Ok((
        Sampler::Triple {
            drift: t.drift_b,
            gaussian_sd: (t.gaussian_var + folded).sqrt(),
            pieces,
        },
        folded,
    ))
}

fn stream(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `f` on every chunk in parallel and returns the results in chunk order.
fn chunked<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            f(&mut stream(seed, c), len)
        })
        .collect()
}

/// `n` iid draws from `model`.
pub fn sample(model: &NoiseModel, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(SureError::EmptyInput("sample count must be positive".into()));
    }
    let sampler = ModelSampler::new(model)?;
    let parts = chunked(n, seed, |rng, len| (0..len).map(|_| sampler.draw(rng)).collect::<Vec<f64>>());
    Ok(SampleBatch {
        model_id: model.to_string(),
        seed,
        count: n,
        values: parts.concat(),
        approximation_tol: sampler.approximation_tol(),
    })
}

/// Accumulates a sample of `K` quantities at once.
#[derive(Debug, Clone)]
struct Moments<const K: usize> {
    sum: [CompensatedSum; K],
    sq: [CompensatedSum; K],
}

impl<const K: usize> Moments<K> {
    fn new() -> Self {
        Self {
            sum: std::array::from_fn(|_| CompensatedSum::default()),
            sq: std::array::from_fn(|_| CompensatedSum::default()),
        }
    }

    fn add(&mut self, v: [f64; K]) {
        for (k, x) in v.into_iter().enumerate() {
            self.sum[k].add(x);
            self.sq[k].add(x * x);
        }
    }

    fn merge(&mut self, o: &Self) {
        for k in 0..K {
            self.sum[k].merge(&o.sum[k]);
            self.sq[k].merge(&o.sq[k]);
        }
    }

    fn mean(&self, k: usize, n: usize) -> f64 {
        self.sum[k].value() / n as f64
    }

    fn std_error(&self, k: usize, n: usize) -> f64 {
        let m = self.mean(k, n);
        let var = (self.sq[k].value() / n as f64 - m * m).max(0.0) * n as f64 / (n as f64 - 1.0).max(1.0);
        (var / n as f64).sqrt()
    }
}

fn reduce<const K: usize, F>(model: &NoiseModel, n: usize, seed: u64, f: F) -> Result<Moments<K>>
where
    F: Fn(f64) -> [f64; K] + Sync,
{
    if n == 0 {
        return Err(SureError::EmptyInput("sample count must be positive".into()));
    }
    let sampler = ModelSampler::new(model)?;
    let parts = chunked(n, seed, |rng, len| {
        let mut m = Moments::<K>::new();
        for _ in 0..len {
            m.add(f(sampler.draw(rng)));
        }
        m
    });
    let mut total = Moments::<K>::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Both sides of `E[K(g)(X + θ)] = E[X g(X + θ)]` and the standard error of
/// their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteinCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub se: f64,
}

impl SteinCheck {
    /// `|lhs − rhs|` in standard errors.
    pub fn z(&self) -> f64 {
        if self.se > 0.0 {
            (self.lhs - self.rhs).abs() / self.se
        } else if self.lhs == self.rhs {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Monte Carlo check of the Stein identity with `kg = K(g)` supplied.
pub fn mc_stein_check<G, KG>(model: &NoiseModel, g: G, kg: KG, theta: f64, n: usize, seed: u64) -> Result<SteinCheck>
where
    G: Fn(f64) -> f64 + Sync,
    KG: Fn(f64) -> f64 + Sync,
{
    let m = reduce::<3, _>(model, n, seed, |x| {
        let l = kg(x + theta);
        let r = x * g(x + theta);
        [l, r, l - r]
    })?;
    Ok(SteinCheck {
        lhs: m.mean(0, n),
        rhs: m.mean(1, n),
        se: m.std_error(2, n),
    })
}

/// [`mc_stein_check`] for the residual of a piecewise-linear estimator.
pub fn mc_stein_check_expr(model: &NoiseModel, expr: &EstimatorExpr, theta: f64, n: usize, seed: u64) -> Result<SteinCheck> {
    let op = SteinOperator::new(model)?;
    let g = expr.residual();
    mc_stein_check(model, |x| g.eval(x), |x| op.apply(&g, x), theta, n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
}

/// Monte Carlo estimate of `E(d(X + θ) − θ)²`.
pub fn mc_risk(model: &NoiseModel, expr: &EstimatorExpr, theta: f64, n: usize, seed: u64) -> Result<McEstimate> {
    let m = reduce::<1, _>(model, n, seed, |x| {
        let e = expr.eval(x + theta) - theta;
        [e * e]
    })?;
    Ok(McEstimate {
        value: m.mean(0, n),
        se: m.std_error(0, n),
    })
}

/// Monte Carlo mean of `f(X)` with its standard error.
pub fn mc_mean<F: Fn(f64) -> f64 + Sync>(model: &NoiseModel, f: F, n: usize, seed: u64) -> Result<McEstimate> {
    let m = reduce::<1, _>(model, n, seed, |x| [f(x)])?;
    Ok(McEstimate {
        value: m.mean(0, n),
        se: m.std_error(0, n),
    })
}
