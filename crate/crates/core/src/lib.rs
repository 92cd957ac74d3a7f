//! Random connection models on hyperbolic space `H^d`.
//!
//! The deterministic numerics (`geometry`, `models`, `transform`, `diagrams`,
//! `asymptotics`) are generic over [`Real`] (`f32` or `f64`). The Monte Carlo
//! side (`sampler`, `rcm`, `estimator`) works in `f64`.

pub mod asymptotics;
pub mod diagrams;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod models;
pub mod quad;
pub mod rcm;
pub mod real;
pub mod sampler;
pub mod transform;

pub use error::{Error, Result};
pub use real::Real;

pub type HPoint64 = geometry::HPoint<f64>;
pub type HPoint32 = geometry::HPoint<f32>;
pub type AdjacencySpec64 = models::AdjacencySpec<f64>;
pub type AdjacencySpec32 = models::AdjacencySpec<f32>;
pub type RadialFunction64 = transform::RadialFunction<f64>;
pub type RadialFunction32 = transform::RadialFunction<f32>;
pub type SpectralFunction64 = transform::SpectralFunction<f64>;
pub type LensGeometry64 = geometry::LensGeometry<f64>;
pub type DiagramReport64 = diagrams::DiagramReport<f64>;
pub type ExpansionReport64 = asymptotics::ExpansionReport<f64>;
