//! Cycle statistics, switchings, and spectral fluctuations of uniform random
//! regular graphs.

pub mod census;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod nbwalks;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod switchings;

pub use error::{Error, Result};
pub use graph::{Cycle, Edge, OrientedEdge, RegularGraph};

/// Spectrum of `(d-1)^{-1/2} A` in double precision.
pub type Spectrum = spectral::ScaledSpectrum<f64>;
/// Chebyshev expansion in double precision.
pub type Expansion = spectral::ChebExpansion<f64>;
/// Metagraph with exact rational edge weights.
pub type ExactMetagraph = switchings::Metagraph<num_rational::BigRational>;
pub type Metagraph64 = switchings::Metagraph<f64>;
