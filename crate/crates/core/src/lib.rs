//! Unbiased risk estimation for location models whose noise is infinitely
//! divisible with finite variance.
//!
//! The central object is the Stein operator `K` of a noise law `f`: the linear
//! map with `E[K(g)(X + θ)] = E[X g(X + θ)]` for every shift `θ`. For Gaussian
//! noise `K = σ² d/dx`; in general it is a difference-quotient integral against
//! the Lévy measure. With `K` in hand the squared-error risk of `d(x) = x + g(x)`
//! is estimated without bias by `σ² + g(x)² + 2 K(g)(x)`.

pub mod error;
pub mod estimator;
pub mod kernel;
pub mod mc;
pub mod noise;
pub mod quad;
pub mod risk;
pub mod wavelet;

pub use error::{Result, SureError};
pub use estimator::{BuildingBlock, EstimatorExpr, EstimatorSpec};
pub use kernel::{HingeKernel, KernelConfig, SteinOperator};
pub use noise::{LevyTriple, ModelSpec, NoiseModel};
pub use risk::RiskEstimate;
